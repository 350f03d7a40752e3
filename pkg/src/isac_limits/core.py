"""Shared domain types, deterministic sampling, and Hermitian linear algebra.

All randomness in the package flows through :class:`RngStream`, which wraps a
counter-based seed sequence so that per-trial substreams are reproducible on
any platform and independent of how trials are scheduled.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DimensionError, DomainError

# Tolerances used uniformly across the package.
HERMITIAN_RTOL = 1e-12
EIG_CLAMP_RTOL = 1e-12
EIG_RECON_RTOL = 1e-10
ISOMETRY_ATOL = 1e-10
TRACE_BUDGET_RTOL = 1e-9


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters: dimensions, powers, noise variances, tolerances.

    Defaults follow the standard benchmark setting: unit channel and noise
    variances, 10^4 Monte Carlo trials, multiplier tolerance 1e-8 and
    objective tolerance 1e-4 for the iterative rate/MMSE solver.
    """

    n_tx: int = 1
    n_rx_comm: int = 1
    n_rx_sense: int = 1
    coherence_time: int = 1
    per_antenna_power: float = 1.0
    comm_noise_var: float = 1.0
    sense_noise_var: float = 1.0
    comm_channel_var: float = 1.0
    mc_trials: int = 10000
    rng_seed: int = 0
    ba_tol_perf: float = 1e-4
    ba_tol_mult: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("n_tx", "n_rx_comm", "n_rx_sense", "coherence_time",
                     "mc_trials"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        for name in ("per_antenna_power", "comm_noise_var", "sense_noise_var",
                     "comm_channel_var", "ba_tol_perf", "ba_tol_mult"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be strictly positive, got {v!r}")
        if self.coherence_time < self.n_tx:
            raise ConfigError(
                "coherence_time must be >= n_tx (need at least N samples to "
                f"estimate an N-column channel): T={self.coherence_time} < "
                f"N={self.n_tx}")
        if not isinstance(self.rng_seed, (int, np.integer)):
            raise ConfigError(f"rng_seed must be an integer, got {self.rng_seed!r}")

    @property
    def total_power(self) -> float:
        """Total transmit power budget N*P0 (watts)."""
        return self.n_tx * self.per_antenna_power

    def with_seed(self, seed: int) -> "SystemConfig":
        return replace(self, rng_seed=int(seed))


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    ``substream(i)`` derives a child stream whose id encodes the full path
    from the root, so trial-indexed substreams never collide and results are
    independent of worker scheduling.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng((int(self.seed) & (2**64 - 1),
                                      int(self.stream_id)))

    def substream(self, index: int) -> "RngStream":
        if index < 0:
            raise ConfigError(f"substream index must be >= 0, got {index}")
        return RngStream(self.seed, (int(self.stream_id) << 32) + int(index) + 1)


class WaveformKind(enum.Enum):
    ISOMETRY = "isometry"
    GAUSSIAN = "gaussian"
    COMPOUND = "compound"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Waveform:
    """A transmit block X of shape (N, T) with a provenance kind.

    For ``ISOMETRY`` waveforms, ``factor`` holds the orthonormal-row matrix
    the waveform was built from and is checked at construction.
    """

    x: np.ndarray
    kind: WaveformKind = WaveformKind.CUSTOM
    factor: np.ndarray | None = None

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=complex)
        object.__setattr__(self, "x", x)
        if x.ndim != 2:
            raise DimensionError(f"waveform must be 2-D, got shape {x.shape}")
        if self.kind is WaveformKind.ISOMETRY and self.factor is not None:
            psi = np.asarray(self.factor, dtype=complex)
            gram = psi @ psi.conj().T
            err = np.linalg.norm(gram - np.eye(psi.shape[0]))
            if err > ISOMETRY_ATOL:
                raise DomainError(
                    f"isometry factor rows not orthonormal: ||PsiPsi'-I||={err:.3e}")

    @property
    def n_tx(self) -> int:
        return self.x.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.x.shape[1]

    def sample_correlation(self) -> np.ndarray:
        """(1/T) X X^H."""
        return (self.x @ self.x.conj().T) / self.n_symbols


def _check_hermitian(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {a.shape}")
    scale = max(np.linalg.norm(a), 1.0)
    err = np.linalg.norm(a - a.conj().T)
    if err > HERMITIAN_RTOL * scale * a.shape[0]:
        raise DomainError(f"{what} is not Hermitian: ||A-A'||={err:.3e}")
    return 0.5 * (a + a.conj().T)


def eig_hermitian(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix with a fixed phase convention.

    Returns (U, lam) with eigenvalues sorted descending and each eigenvector
    rotated so its largest-magnitude entry is real and positive. The
    reconstruction residual is checked to 1e-10 relative.
    """
    a = _check_hermitian(a)
    lam, u = np.linalg.eigh(a)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    u = u[:, order]
    for k in range(u.shape[1]):
        idx = int(np.argmax(np.abs(u[:, k])))
        pivot = u[idx, k]
        if np.abs(pivot) > 0:
            u[:, k] *= np.conj(pivot) / np.abs(pivot)
            u[idx, k] = u[idx, k].real  # exact by convention
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    resid = np.linalg.norm(a - (u * lam) @ u.conj().T)
    if resid > EIG_RECON_RTOL * max(scale, 1e-300):
        raise DomainError(f"eigendecomposition residual too large: {resid:.3e}")
    return u, lam


def clamp_psd_eigenvalues(lam: np.ndarray, scale: float,
                          what: str = "matrix") -> np.ndarray:
    """Clamp tiny negative eigenvalues to 0; reject genuinely negative ones."""
    lam = np.asarray(lam, dtype=float)
    floor = -EIG_CLAMP_RTOL * max(scale, 1.0)
    if np.any(lam < floor):
        raise DomainError(
            f"{what} is not PSD: min eigenvalue {lam.min():.3e} < {floor:.3e}")
    return np.maximum(lam, 0.0)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Hermitian PSD N x N correlation matrix with an expected trace budget."""

    mat: np.ndarray
    trace_budget: float
    enforce_budget: bool = True

    def __post_init__(self) -> None:
        m = _check_hermitian(self.mat, "correlation matrix")
        u, lam = eig_hermitian(m)
        lam = clamp_psd_eigenvalues(lam, float(np.abs(lam).max(initial=0.0)),
                                    "correlation matrix")
        m = (u * lam) @ u.conj().T
        m = 0.5 * (m + m.conj().T)
        object.__setattr__(self, "mat", m)
        if self.enforce_budget:
            tr = float(np.trace(m).real)
            if abs(tr - self.trace_budget) > TRACE_BUDGET_RTOL * abs(self.trace_budget):
                raise DomainError(
                    f"trace {tr!r} violates budget {self.trace_budget!r}")

    @property
    def n(self) -> int:
        return self.mat.shape[0]


class SensingChannelStats:
    """Second-order statistics of the sensing channel.

    Either a full (N*Ns) x (N*Ns) covariance, or the block form I_Ns (x) Sigma_g
    when the per-receiver covariances coincide (widely distributed receivers).
    The eigendecomposition of the block (or full) matrix is cached.
    """

    def __init__(self, sigma: np.ndarray, n_rx_sense: int,
                 block_diagonal: bool) -> None:
        sigma = _check_hermitian(np.asarray(sigma, dtype=complex),
                                 "sensing covariance")
        if n_rx_sense <= 0:
            raise ConfigError(f"n_rx_sense must be positive, got {n_rx_sense}")
        self.block_diagonal = bool(block_diagonal)
        self.n_rx_sense = int(n_rx_sense)
        u, lam = eig_hermitian(sigma)
        lam = clamp_psd_eigenvalues(lam, float(np.abs(lam).max(initial=0.0)),
                                    "sensing covariance")
        self._sigma = (u * lam) @ u.conj().T
        self._sigma = 0.5 * (self._sigma + self._sigma.conj().T)
        self.eig_basis = u
        self.eigenvalues = lam

    @classmethod
    def from_block(cls, sigma_g: np.ndarray, n_rx_sense: int) -> "SensingChannelStats":
        return cls(sigma_g, n_rx_sense, block_diagonal=True)

    @classmethod
    def from_full(cls, sigma_bar: np.ndarray, n_rx_sense: int) -> "SensingChannelStats":
        sigma_bar = np.asarray(sigma_bar, dtype=complex)
        if sigma_bar.shape[0] % n_rx_sense != 0:
            raise DimensionError(
                f"full covariance size {sigma_bar.shape[0]} not divisible by "
                f"n_rx_sense={n_rx_sense}")
        return cls(sigma_bar, n_rx_sense, block_diagonal=False)

    @property
    def block(self) -> np.ndarray:
        """The per-receiver block Sigma_g (only in block form)."""
        if not self.block_diagonal:
            raise DomainError("stats not in block-diagonal form")
        return self._sigma

    @property
    def n_tx(self) -> int:
        if self.block_diagonal:
            return self._sigma.shape[0]
        return self._sigma.shape[0] // self.n_rx_sense

    def full(self) -> np.ndarray:
        """The full (N*Ns) covariance, materializing I (x) Sigma_g if needed."""
        if self.block_diagonal:
            return np.kron(np.eye(self.n_rx_sense), self._sigma)
        return self._sigma

    def trace_full(self) -> float:
        t = float(np.trace(self._sigma).real)
        return t * self.n_rx_sense if self.block_diagonal else t

    def require_invertible(self) -> None:
        if self.eigenvalues.min(initial=np.inf) <= 0:
            raise DomainError("sensing covariance is singular")

    def inverse(self) -> np.ndarray:
        """Inverse of the stored matrix (block if block form, else full)."""
        self.require_invertible()
        u = self.eig_basis
        return (u / self.eigenvalues) @ u.conj().T


def complex_gaussian(rng: np.random.Generator, shape: tuple[int, ...],
                     variance: float = 1.0) -> np.ndarray:
    """i.i.d. circular-symmetric CN(0, variance) entries.

    Variance splits evenly between real and imaginary parts so E|z|^2 equals
    ``variance``.
    """
    s = np.sqrt(variance / 2.0)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * s


def sample_comm_channel(cfg: SystemConfig, rng: RngStream) -> np.ndarray:
    """Draw an Nc x N channel with i.i.d. CN(0, sigma_h^2) entries."""
    gen = rng.generator()
    return complex_gaussian(gen, (cfg.n_rx_comm, cfg.n_tx), cfg.comm_channel_var)


def sample_stiefel_uniform(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    """Uniform (Haar) sample with orthonormal rows, shape (rows, cols).

    QR of an i.i.d. complex Gaussian matrix with the R-diagonal phase fixed
    positive, which makes the factor Haar-distributed.
    """
    if rows > cols:
        raise DimensionError(f"need rows <= cols, got {rows} > {cols}")
    gen = rng.generator()
    z = complex_gaussian(gen, (cols, rows))
    q, r = np.linalg.qr(z, mode="reduced")
    d = np.diagonal(r).copy()
    d = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    q = q * d.conj()
    return q.conj().T


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition."""
    u, lam = eig_hermitian(mat)
    lam = clamp_psd_eigenvalues(lam, float(np.abs(lam).max(initial=0.0)))
    return (u * np.sqrt(lam)) @ u.conj().T


def sample_gaussian_waveform(r: CorrelationMatrix, t: int, rng: RngStream) -> Waveform:
    """T columns i.i.d. CN(0, R.mat)."""
    root = psd_sqrt(r.mat)
    gen = rng.generator()
    w = complex_gaussian(gen, (r.n, t))
    return Waveform(root @ w, WaveformKind.GAUSSIAN)
