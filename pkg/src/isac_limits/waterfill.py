"""Closed-form optimal waveforms via water-filling, and ergodic rate helpers.

Sensing-optimal design water-fills the eigenmodes of the sensing covariance
with budget T*N*P0; communication-optimal design water-fills the eigenmodes of
H^H H per realization with budget N*P0. Rates are in nats per symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (CorrelationMatrix, RngStream, SensingChannelStats,
                   SystemConfig, Waveform, WaveformKind, eig_hermitian,
                   sample_comm_channel, sample_stiefel_uniform)
from .errors import DegenerateChannelError, DomainError
from .sensing import MmseValue

# Relative eigenvalue threshold below which a mode counts as zero-gain.
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class WaterFillResult:
    """Water level, per-mode powers, and the eigenbasis they live in."""

    water_level: float
    powers: np.ndarray
    basis: np.ndarray
    active_count: int
    gains: np.ndarray


def water_level(gains: np.ndarray, noise_var: float, budget: float
                ) -> tuple[float, np.ndarray]:
    """Exact water level: solve sum_i (eta - noise/gain_i)+ = budget.

    Gains equal to zero never receive power. Solved by sorting the per-mode
    floors and scanning active sets in closed form (no iteration).
    """
    gains = np.asarray(gains, dtype=float)
    if budget <= 0:
        raise DomainError(f"power budget must be positive, got {budget}")
    usable = gains > 0
    if not np.any(usable):
        raise DegenerateChannelError("all channel gains are zero")
    floors = np.full(gains.shape, np.inf)
    floors[usable] = noise_var / gains[usable]
    sorted_floors = np.sort(floors[np.isfinite(floors)])
    eta = None
    csum = 0.0
    for k, f_k in enumerate(sorted_floors, start=1):
        csum += f_k
        candidate = (budget + csum) / k
        upper = sorted_floors[k] if k < len(sorted_floors) else np.inf
        if candidate > f_k and candidate <= upper:
            eta = candidate
            break
    if eta is None:
        raise DomainError("water level scan failed (inconsistent gains)")
    powers = np.maximum(eta - floors, 0.0)
    powers[~np.isfinite(floors)] = 0.0
    return float(eta), powers


def sensing_waterfill(stats: SensingChannelStats, cfg: SystemConfig
                      ) -> tuple[WaterFillResult, MmseValue, CorrelationMatrix]:
    """Sensing-optimal power allocation over the eigenmodes of Sigma_g.

    Budget is T*N*P0 across the block's eigenmodes; the resulting MMSE is
    Ns * sum_i lambda_i / ((lambda_i * eta / sigma_s^2 - 1)+ + 1) and the
    statistical correlation matrix is (1/T) U_g P U_g^H.
    """
    lam = stats.eigenvalues
    u = stats.eig_basis
    n, t = cfg.n_tx, cfg.coherence_time
    sigma_s2 = cfg.sense_noise_var
    budget = t * n * cfg.per_antenna_power
    eta, powers = water_level(lam, sigma_s2, budget)
    active = int(np.count_nonzero(powers > 0))
    snr_terms = np.maximum(lam * eta / sigma_s2 - 1.0, 0.0)
    eps = stats.n_rx_sense * float(np.sum(lam / (snr_terms + 1.0)))
    r_mat = (u * (powers / t)) @ u.conj().T
    r_xs = CorrelationMatrix(r_mat, n * cfg.per_antenna_power)
    result = WaterFillResult(eta, powers, u, active, lam.copy())
    n_full = n * stats.n_rx_sense
    return result, MmseValue(eps, 0.0, eps / n_full), r_xs


def sensing_optimal_waveform(wf: WaterFillResult, cfg: SystemConfig,
                             rng: RngStream, t: int | None = None) -> Waveform:
    """X_s = U_g P^(1/2) Psi with Psi uniform on the orthonormal-row manifold."""
    t = cfg.coherence_time if t is None else int(t)
    psi = sample_stiefel_uniform(cfg.n_tx, t, rng)
    x = (wf.basis * np.sqrt(wf.powers)) @ psi
    return Waveform(x, WaveformKind.ISOMETRY, factor=psi)


def comm_waterfill(h: np.ndarray, cfg: SystemConfig
                   ) -> tuple[WaterFillResult, float, CorrelationMatrix]:
    """Communication-optimal allocation for one channel realization.

    Water-fills the eigenvalues of H^H H with budget N*P0; the realization
    rate is sum_i (log(eta * gamma_i / sigma_c^2))+ nats.
    """
    h = np.asarray(h, dtype=complex)
    gram = h.conj().T @ h
    v, gamma = eig_hermitian(gram)
    gamma = np.maximum(gamma, 0.0)
    top = gamma.max(initial=0.0)
    if top <= 0:
        raise DegenerateChannelError("zero communication channel")
    gamma_eff = np.where(gamma > RANK_RTOL * top, gamma, 0.0)
    budget = cfg.n_tx * cfg.per_antenna_power
    eta, powers = water_level(gamma_eff, cfg.comm_noise_var, budget)
    active = int(np.count_nonzero(powers > 0))
    lev = eta * gamma_eff / cfg.comm_noise_var
    rate = float(np.sum(np.log(np.maximum(lev, 1.0))))
    r_mat = (v * powers) @ v.conj().T
    r_xc = CorrelationMatrix(r_mat, budget)
    return WaterFillResult(eta, powers, v, active, gamma_eff), rate, r_xc


def coherent_rate(h: np.ndarray, r: np.ndarray, sigma_c2: float) -> float:
    """log det(I + H R H^H / sigma_c^2) in nats."""
    h = np.asarray(h, dtype=complex)
    m = np.eye(h.shape[0]) + (h @ r @ h.conj().T) / sigma_c2
    sign, logdet = np.linalg.slogdet(m)
    if sign.real <= 0:
        raise DomainError("rate matrix not positive definite")
    return float(logdet)


def high_snr_constant(r: int, t: int) -> float:
    """The additive constant of the high-SNR isometry-signal rate expansion."""
    if r == 0:
        return 0.0
    return (r / t) * ((t - r / 2.0) * math.log(t / math.e)
                      - math.lgamma(t) + math.log(2.0 * math.sqrt(math.pi)))


def isometry_rate(h: np.ndarray, r_x: np.ndarray, t: int,
                  sigma_c2: float) -> float:
    """High-SNR rate of an isometry signal with statistical correlation R_x.

    (1 - r/2T) * logdet of H R_x H^H / sigma_c^2 restricted to its rank-r
    positive-eigenvalue subspace, plus the combinatorial constant. The
    O(sigma_c^2) residual is dropped.
    """
    h = np.asarray(h, dtype=complex)
    m = (h @ r_x @ h.conj().T) / sigma_c2
    _, lam = eig_hermitian(m)
    lam = np.maximum(lam, 0.0)
    top = lam.max(initial=0.0)
    if top <= 0:
        return 0.0
    pos = lam[lam > RANK_RTOL * top]
    r = len(pos)
    logdet = float(np.sum(np.log(pos)))
    return (1.0 - r / (2.0 * t)) * logdet + high_snr_constant(r, t)


def sensing_limited_rate(cfg: SystemConfig, stats: SensingChannelStats,
                         rng: RngStream, n_trials: int | None = None
                         ) -> tuple[float, float]:
    """Ergodic high-SNR rate achieved by the sensing-optimal isometry signal."""
    _, _, r_xs = sensing_waterfill(stats, cfg)
    t = cfg.coherence_time

    def per_h(h: np.ndarray) -> float:
        return isometry_rate(h, r_xs.mat, t, cfg.comm_noise_var)

    return ergodic_average(per_h, cfg, rng, n_trials)


def ergodic_average(per_realization: Callable[[np.ndarray], float],
                    cfg: SystemConfig, rng: RngStream,
                    n_trials: int | None = None) -> tuple[float, float]:
    """Monte Carlo mean and standard error over comm-channel realizations."""
    trials = cfg.mc_trials if n_trials is None else int(n_trials)
    if trials <= 0:
        raise DomainError(f"need a positive trial count, got {trials}")
    vals = np.empty(trials)
    for i in range(trials):
        h = sample_comm_channel(cfg, rng.substream(i))
        vals[i] = per_realization(h)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return mean, stderr
