"""Performance limits of joint sensing/communication transmission.

Closed-form water-filling waveforms, Bayesian channel-estimation MMSE,
outer/inner bounds on the MMSE-rate region, the constrained
alternating-maximization limit curve for the scalar channel, and the
pilot-then-data compound strategy — with a CSV-emitting CLI (``isac-limits``).
"""

__version__ = "0.1.0"

from .core import (CorrelationMatrix, RngStream, SensingChannelStats,
                   SystemConfig, Waveform, WaveformKind, eig_hermitian,
                   sample_comm_channel, sample_gaussian_waveform,
                   sample_stiefel_uniform)
from .points import MmseRatePoint, Provenance
from .sensing import (EstimatorOutput, MmseValue, expected_mmse,
                      mmse_estimate, phi)
from .waterfill import (WaterFillResult, comm_waterfill, ergodic_average,
                        sensing_limited_rate, sensing_waterfill)
from .ba import BaResult, GridPdf, GridSpec, ba_solve, limit_curve, \
    siso_endpoints
from .bounds import (OuterBoundSolve, cib_curve, outer_curve,
                     outer_objective, outer_solve, rectangle_sag,
                     region_dataset, sib_curve, time_share_envelope,
                     time_share_segment)
from .compound import (CompoundResult, compound_run, compound_sweep,
                       noncoherent_baseline)

__all__ = [
    "__version__",
    "BaResult", "CompoundResult", "CorrelationMatrix", "EstimatorOutput",
    "GridPdf", "GridSpec", "MmseRatePoint", "MmseValue", "OuterBoundSolve",
    "Provenance", "RngStream", "SensingChannelStats", "SystemConfig",
    "WaterFillResult", "Waveform", "WaveformKind", "ba_solve", "cib_curve",
    "comm_waterfill", "compound_run", "compound_sweep", "eig_hermitian",
    "ergodic_average", "expected_mmse", "limit_curve", "mmse_estimate",
    "noncoherent_baseline", "outer_curve", "outer_objective", "outer_solve",
    "phi", "rectangle_sag",
    "region_dataset", "sample_comm_channel", "sample_gaussian_waveform",
    "sample_stiefel_uniform", "sensing_limited_rate", "sensing_waterfill",
    "sib_curve", "siso_endpoints", "time_share_envelope",
    "time_share_segment",
]
