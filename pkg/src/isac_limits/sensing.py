"""Modified-MMSE functional, Bayesian channel estimator, and its expectation.

The sensing observation for a block is s = Xbar g + z with Xbar = I_Ns (x) X^H
and g the vectorized (conjugate-transposed) sensing channel. The modified MMSE
of a waveform ensemble is E_X[ Phi(I_Ns (x) R_X) ] with R_X the sample
correlation matrix and Phi(A) = Tr(Sigma_bar^-1 + (T/sigma_s^2) A)^-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .core import RngStream, SensingChannelStats, SystemConfig, Waveform
from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class MmseValue:
    """A channel-estimation MSE with optional Monte Carlo standard error."""

    value: float
    stderr: float = 0.0
    normalized: float | None = None

    def __post_init__(self) -> None:
        if self.value < 0:
            raise DomainError(f"MMSE must be nonnegative, got {self.value}")


@dataclass(frozen=True)
class EstimatorOutput:
    """Posterior mean of the vectorized sensing channel and its conditional MSE."""

    g_hat: np.ndarray
    conditional_mse: float


def _trace_inverse_cholesky(m: np.ndarray) -> float:
    """Tr(M^-1) for Hermitian PD M via Cholesky, avoiding an explicit inverse."""
    m = 0.5 * (m + m.conj().T)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"matrix not positive definite: {exc}") from exc
    linv = scipy.linalg.solve_triangular(chol, np.eye(m.shape[0]), lower=True)
    return float(np.sum(np.abs(linv) ** 2))


def phi_block(r: np.ndarray, stats: SensingChannelStats, t: int,
              sigma_s2: float) -> float:
    """Ns * Tr((Sigma_g^-1 + (T/sigma_s^2) R)^-1) without forming Kroneckers."""
    sigma_g = stats.block
    if r.shape != sigma_g.shape:
        raise DimensionError(
            f"block shape {r.shape} does not match Sigma_g {sigma_g.shape}")
    stats.require_invertible()
    m = stats.inverse() + (t / sigma_s2) * np.asarray(r, dtype=complex)
    return stats.n_rx_sense * _trace_inverse_cholesky(m)


def phi_dense(a: np.ndarray, stats: SensingChannelStats, t: int,
              sigma_s2: float) -> float:
    """Tr((Sigma_bar^-1 + (T/sigma_s^2) A)^-1) on the full (N*Ns) matrix."""
    full = stats.full()
    if a.shape != full.shape:
        raise DimensionError(
            f"matrix shape {a.shape} does not match Sigma_bar {full.shape}")
    stats.require_invertible()
    if stats.block_diagonal:
        u = stats.eig_basis
        inv_block = (u / stats.eigenvalues) @ u.conj().T
        inv_full = np.kron(np.eye(stats.n_rx_sense), inv_block)
    else:
        inv_full = stats.inverse()
    m = inv_full + (t / sigma_s2) * np.asarray(a, dtype=complex)
    return _trace_inverse_cholesky(m)


def phi(a: np.ndarray, stats: SensingChannelStats, t: int,
        sigma_s2: float) -> MmseValue:
    """The modified-MMSE functional Phi(A).

    When ``stats`` is in block form and ``a`` is given as the N x N block R of
    A = I_Ns (x) R, the value is computed blockwise without forming the
    Kronecker product.
    """
    a = np.asarray(a, dtype=complex)
    n = stats.n_tx
    ns = stats.n_rx_sense
    if stats.block_diagonal and a.shape == (n, n):
        value = phi_block(a, stats, t, sigma_s2)
    elif a.shape == (n * ns, n * ns):
        value = phi_dense(a, stats, t, sigma_s2)
    else:
        raise DimensionError(
            f"Phi argument shape {a.shape}: expected ({n},{n}) block or "
            f"({n * ns},{n * ns}) full")
    return MmseValue(value, 0.0, value / (n * ns))


def build_xbar(x: np.ndarray, n_rx_sense: int) -> np.ndarray:
    """The stacked observation matrix I_Ns (x) X^H of shape (T*Ns, N*Ns)."""
    return np.kron(np.eye(n_rx_sense), np.asarray(x, dtype=complex).conj().T)


def mmse_estimate(x: Waveform | np.ndarray, s: np.ndarray,
                  stats: SensingChannelStats, sigma_s2: float) -> EstimatorOutput:
    """Bayesian MMSE estimate of g from s = Xbar g + z.

    g_hat = (sigma_s^2 Sigma_bar^-1 + Xbar^H Xbar)^-1 Xbar^H s, with
    conditional MSE Tr((Sigma_bar^-1 + sigma_s^-2 Xbar^H Xbar)^-1).
    """
    xm = x.x if isinstance(x, Waveform) else np.asarray(x, dtype=complex)
    ns = stats.n_rx_sense
    s = np.asarray(s, dtype=complex).reshape(-1)
    t = xm.shape[1]
    if s.shape[0] != t * ns:
        raise DimensionError(
            f"observation length {s.shape[0]} != T*Ns = {t * ns}")
    stats.require_invertible()
    xbar = build_xbar(xm, ns)
    gram = xbar.conj().T @ xbar
    if stats.block_diagonal:
        inv_full = np.kron(np.eye(ns), stats.inverse())
    else:
        inv_full = stats.inverse()
    a = sigma_s2 * inv_full + gram
    a = 0.5 * (a + a.conj().T)
    try:
        g_hat = np.linalg.solve(a, xbar.conj().T @ s)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"estimator system singular: {exc}") from exc
    cond_mse = _trace_inverse_cholesky(inv_full + gram / sigma_s2)
    return EstimatorOutput(g_hat, cond_mse)


def expected_mmse(sampler: Callable[[RngStream], Waveform],
                  stats: SensingChannelStats, cfg: SystemConfig,
                  rng: RngStream, n_trials: int | None = None) -> MmseValue:
    """Monte Carlo mean of Phi(I (x) R_sample) over waveform draws.

    Trials use indexed substreams and a fixed-order reduction, so the result
    is bit-identical for a given (seed, stream) regardless of scheduling.
    """
    trials = cfg.mc_trials if n_trials is None else int(n_trials)
    if trials <= 0:
        raise DomainError(f"need a positive trial count, got {trials}")
    vals = np.empty(trials)
    for i in range(trials):
        w = sampler(rng.substream(i))
        r_sample = w.sample_correlation()
        if stats.block_diagonal:
            vals[i] = phi_block(r_sample, stats, w.n_symbols, cfg.sense_noise_var)
        else:
            a = np.kron(np.eye(stats.n_rx_sense), r_sample)
            vals[i] = phi_dense(a, stats, w.n_symbols, cfg.sense_noise_var)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    n, ns = stats.n_tx, stats.n_rx_sense
    return MmseValue(mean, stderr, mean / (n * ns))
