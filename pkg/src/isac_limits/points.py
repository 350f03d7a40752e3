"""The (mmse, rate) point record shared by curve-producing modules."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DomainError


class Provenance(enum.Enum):
    LIMIT = "limit"
    OUTER = "outer"
    SIB = "sib"
    CIB = "cib"
    TIME_SHARE_PS_PC = "time-share-ps-pc"
    TIME_SHARE_CIB_SIB = "time-share-cib-sib"
    STRATEGY = "strategy"


@dataclass(frozen=True)
class MmseRatePoint:
    """One point of an MMSE-rate curve, tagged with how it was produced."""

    mmse: float
    rate_nats: float
    provenance: Provenance
    alpha: float | None = None
    stderr_mmse: float = 0.0
    stderr_rate: float = 0.0
    converged: bool = True

    def __post_init__(self) -> None:
        if self.mmse < 0:
            raise DomainError(f"mmse must be nonnegative, got {self.mmse}")
        if self.rate_nats < -1e-12:
            raise DomainError(f"rate must be nonnegative, got {self.rate_nats}")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha out of [0,1]: {self.alpha}")
