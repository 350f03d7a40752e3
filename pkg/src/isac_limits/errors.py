"""Exception hierarchy shared across the package.

Each CLI-visible failure class maps to a distinct exit code in ``cli``:
config problems -> 2, non-convergence -> 3, everything else -> 4.
"""


class IsacError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(IsacError):
    """Invalid, missing, or contradictory configuration input."""


class DimensionError(IsacError):
    """Array shapes incompatible with the requested operation."""


class DomainError(IsacError):
    """Mathematically invalid input (non-Hermitian, non-PSD, singular...)."""


class DegenerateChannelError(DomainError):
    """A channel with no usable modes (all gains zero)."""


class ConvergenceError(IsacError):
    """An iterative solver failed to meet its stopping rule."""


class GridCoverageError(IsacError):
    """A discretization grid is too narrow for the converged distribution."""


class ModeError(ConfigError):
    """Operation requested in a scenario mode that does not support it."""
