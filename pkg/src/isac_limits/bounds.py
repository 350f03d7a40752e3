"""Outer bound, inner bounds, time-sharing envelopes, and region assembly.

The outer bound maximizes alpha * logdet(I + H R H^H / sigma_c^2)
- (1 - alpha) * Phi(I (x) R) over Hermitian PSD R with Tr R = N * P0, per
channel realization, then averages (sample-average approximation). The inner
bounds reuse the maximizing R: the isometry signal attains its MMSE but pays
a rate penalty (SIB); the Gaussian signal attains its rate but pays an MMSE
penalty (CIB).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (CorrelationMatrix, RngStream, SensingChannelStats,
                   SystemConfig, eig_hermitian, sample_comm_channel,
                   sample_gaussian_waveform)
from .errors import ConfigError, DimensionError, DomainError
from .points import MmseRatePoint, Provenance
from .sensing import phi_block, phi_dense
from .waterfill import coherent_rate, comm_waterfill, isometry_rate, \
    sensing_waterfill

PG_TOL_SCALE = 1e-7
OBJ_TOL = 1e-10
MAX_PG_ITERS = 20000
HIGH_SNR_WARN_DB = 10.0


@dataclass(frozen=True)
class OuterBoundSolve:
    """Maximizer and diagnostics of one per-realization outer-bound solve."""

    r_star: CorrelationMatrix
    objective: float
    grad_norm_at_solution: float
    iterations: int
    converged: bool


def project_trace_simplex(a: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto {R Hermitian PSD, Tr R = budget}.

    Eigendecompose, project the spectrum onto the probability simplex scaled
    to the budget, reassemble.
    """
    u, lam = eig_hermitian(a)
    proj = project_simplex(lam, budget)
    return (u * proj) @ u.conj().T


def project_simplex(v: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection of a real vector onto {x >= 0, sum x = budget}."""
    if budget <= 0:
        raise DomainError(f"budget must be positive, got {budget}")
    v = np.asarray(v, dtype=float)
    srt = np.sort(v)[::-1]
    css = np.cumsum(srt) - budget
    ks = np.arange(1, len(v) + 1)
    cond = srt - css / ks > 0
    rho = int(np.nonzero(cond)[0][-1]) + 1
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _phi_value_and_grad(r: np.ndarray, stats: SensingChannelStats,
                        t: int, sigma_s2: float) -> tuple[float, np.ndarray]:
    """Phi(I (x) R) and its gradient with respect to R.

    Block form: Ns * Tr(M^-1) with M = Sigma_g^-1 + cR, gradient
    -Ns * c * M^-2. General covariance: the gradient is the partial trace of
    -c * Mbar^-2 over the Ns diagonal blocks (validated by finite
    differences in the test suite).
    """
    c = t / sigma_s2
    n = stats.n_tx
    if stats.block_diagonal:
        m = stats.inverse() + c * r
        m_inv = np.linalg.inv(m)
        val = stats.n_rx_sense * float(np.trace(m_inv).real)
        grad = -stats.n_rx_sense * c * (m_inv @ m_inv)
    else:
        mbar = stats.inverse() + c * np.kron(np.eye(stats.n_rx_sense), r)
        m_inv = np.linalg.inv(mbar)
        val = float(np.trace(m_inv).real)
        w = m_inv @ m_inv
        grad = np.zeros((n, n), dtype=complex)
        for b in range(stats.n_rx_sense):
            grad -= c * w[b * n:(b + 1) * n, b * n:(b + 1) * n]
    return val, 0.5 * (grad + grad.conj().T)


def logdet_grad(h: np.ndarray, r: np.ndarray, sigma_c2: float) -> np.ndarray:
    """Gradient of logdet(I + H R H^H / sigma_c^2) with respect to R."""
    h = np.asarray(h, dtype=complex)
    m = sigma_c2 * np.eye(h.shape[0]) + h @ r @ h.conj().T
    g = h.conj().T @ np.linalg.solve(m, h)
    return 0.5 * (g + g.conj().T)


def outer_objective(alpha: float, h: np.ndarray, r: np.ndarray,
                    stats: SensingChannelStats, cfg: SystemConfig) -> float:
    val = 0.0
    if alpha > 0:
        val += alpha * coherent_rate(h, r, cfg.comm_noise_var)
    if alpha < 1:
        phi_val, _ = _phi_value_and_grad(r, stats, cfg.coherence_time,
                                         cfg.sense_noise_var)
        val -= (1.0 - alpha) * phi_val
    return val


def _outer_grad(alpha: float, h: np.ndarray, r: np.ndarray,
                stats: SensingChannelStats, cfg: SystemConfig) -> np.ndarray:
    g = np.zeros((cfg.n_tx, cfg.n_tx), dtype=complex)
    if alpha > 0:
        g = g + alpha * logdet_grad(h, r, cfg.comm_noise_var)
    if alpha < 1:
        _, phi_grad = _phi_value_and_grad(r, stats, cfg.coherence_time,
                                          cfg.sense_noise_var)
        g = g - (1.0 - alpha) * phi_grad
    return g


def outer_solve(alpha: float, h: np.ndarray, stats: SensingChannelStats,
                cfg: SystemConfig, r0: np.ndarray | None = None,
                max_iters: int = MAX_PG_ITERS) -> OuterBoundSolve:
    """Projected gradient ascent for the per-realization outer bound.

    Backtracking line search on the spectral-simplex projection; stops at a
    small projected-gradient norm or a negligible objective change.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha out of [0,1]: {alpha}")
    n = cfg.n_tx
    budget = n * cfg.per_antenna_power
    r = np.asarray(r0, dtype=complex) if r0 is not None else \
        (budget / n) * np.eye(n, dtype=complex)
    r = project_trace_simplex(r, budget)
    f = outer_objective(alpha, h, r, stats, cfg)
    # Monotone accelerated ascent: gradient step from an extrapolated point,
    # falling back to the plain projected step whenever it would not improve.
    r_prev = r.copy()
    theta_prev = 1.0
    step = 1.0
    pg_norm = np.inf
    converged = False
    stall = 0
    it = 0
    for it in range(1, max_iters + 1):
        theta = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta_prev ** 2))
        beta = (theta_prev - 1.0) / theta
        y = r + beta * (r - r_prev)
        y = project_trace_simplex(y, budget)
        g_y = _outer_grad(alpha, h, y, stats, cfg)
        f_y = outer_objective(alpha, h, y, stats, cfg)
        accepted = False
        while step > 1e-16:
            cand = project_trace_simplex(y + step * g_y, budget)
            f_cand = outer_objective(alpha, h, cand, stats, cfg)
            gap = np.linalg.norm(cand - y) ** 2 / step
            if f_cand >= f_y + 1e-4 * gap:
                accepted = True
                break
            step *= 0.5
        if accepted and f_cand >= f:
            r_prev, r = r, cand
            df = f_cand - f
            f = f_cand
            theta_prev = theta
        else:
            # Momentum overshot (or the step collapsed): restart from r.
            g_r = _outer_grad(alpha, h, r, stats, cfg)
            s = step
            improved = False
            while s > 1e-16:
                cand = project_trace_simplex(r + s * g_r, budget)
                f_cand = outer_objective(alpha, h, cand, stats, cfg)
                if f_cand >= f + 1e-4 * np.linalg.norm(cand - r) ** 2 / s:
                    improved = True
                    break
                s *= 0.5
            theta_prev = 1.0
            if not improved:
                g_final = _outer_grad(alpha, h, r, stats, cfg)
                pg_norm = float(np.linalg.norm(
                    project_trace_simplex(r + g_final, budget) - r))
                converged = pg_norm <= PG_TOL_SCALE * budget
                break
            df = f_cand - f
            r_prev, r = r, cand
            f = f_cand
            step = s
        step = min(step * 1.5, 1e6)
        g_final = _outer_grad(alpha, h, r, stats, cfg)
        pg_norm = float(np.linalg.norm(
            project_trace_simplex(r + g_final, budget) - r))
        if pg_norm <= PG_TOL_SCALE * budget:
            converged = True
            break
        # Objective-change criterion, hedged against transient stalls of the
        # accelerated iteration by requiring a few consecutive quiet steps.
        stall = stall + 1 if abs(df) <= OBJ_TOL else 0
        if stall >= 5:
            converged = True
            break
    r_star = CorrelationMatrix(r, budget)
    return OuterBoundSolve(r_star, f, float(pg_norm), it, converged)


def _phi_of_r(r: np.ndarray, stats: SensingChannelStats,
              cfg: SystemConfig) -> float:
    if stats.block_diagonal:
        return phi_block(r, stats, cfg.coherence_time, cfg.sense_noise_var)
    a = np.kron(np.eye(stats.n_rx_sense), r)
    return phi_dense(a, stats, cfg.coherence_time, cfg.sense_noise_var)


def _transmit_snr_db(cfg: SystemConfig) -> float:
    return 10.0 * math.log10(cfg.total_power / cfg.comm_noise_var)


def _warn_low_snr(cfg: SystemConfig, what: str) -> None:
    snr = _transmit_snr_db(cfg)
    if snr < HIGH_SNR_WARN_DB:
        warnings.warn(
            f"{what} uses a high-SNR rate expansion but transmit SNR is "
            f"{snr:.1f} dB (< {HIGH_SNR_WARN_DB} dB); values may be loose",
            stacklevel=3)


@dataclass(frozen=True)
class _RegionSolves:
    """Per-alpha outer solves shared by the outer/SIB/CIB curves."""

    alphas: tuple[float, ...]
    channels: tuple[np.ndarray, ...]
    r_stars: dict  # (alpha index, channel index) -> OuterBoundSolve


def _solve_grid(alphas, stats: SensingChannelStats, cfg: SystemConfig,
                rng: RngStream, n_channel: int) -> _RegionSolves:
    alphas = tuple(float(a) for a in alphas)
    if not alphas:
        raise ConfigError("empty alpha grid")
    channels = tuple(sample_comm_channel(cfg, rng.substream(i))
                     for i in range(n_channel))
    solves = {}
    for ic, h in enumerate(channels):
        warm = None
        for ia in sorted(range(len(alphas)), key=lambda k: alphas[k]):
            sol = outer_solve(alphas[ia], h, stats, cfg, r0=warm)
            warm = sol.r_star.mat
            solves[(ia, ic)] = sol
    return _RegionSolves(alphas, channels, solves)


def _mean_stderr(vals: np.ndarray) -> tuple[float, float]:
    n = len(vals)
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(vals.mean()), se


def outer_curve(alphas, stats: SensingChannelStats, cfg: SystemConfig,
                rng: RngStream, n_channel: int = 50,
                solves: _RegionSolves | None = None) -> list[MmseRatePoint]:
    """SAA-averaged outer-bound curve over the weight grid."""
    sv = solves or _solve_grid(alphas, stats, cfg, rng, n_channel)
    points = []
    for ia, a in enumerate(sv.alphas):
        rates = np.empty(len(sv.channels))
        mmses = np.empty(len(sv.channels))
        ok = True
        for ic, h in enumerate(sv.channels):
            sol = sv.r_stars[(ia, ic)]
            rates[ic] = coherent_rate(h, sol.r_star.mat, cfg.comm_noise_var)
            mmses[ic] = _phi_of_r(sol.r_star.mat, stats, cfg)
            ok = ok and sol.converged
        r_mean, r_se = _mean_stderr(rates)
        m_mean, m_se = _mean_stderr(mmses)
        points.append(MmseRatePoint(m_mean, r_mean, Provenance.OUTER, a,
                                    m_se, r_se, ok))
    return points


def sib_curve(alphas, stats: SensingChannelStats, cfg: SystemConfig,
              rng: RngStream, n_channel: int = 50,
              solves: _RegionSolves | None = None) -> list[MmseRatePoint]:
    """Sensing-based inner bound: isometry signal on the outer maximizer.

    The sample correlation is deterministic, so the MMSE equals the outer
    bound's; the rate uses the high-SNR isometry expansion.
    """
    _warn_low_snr(cfg, "sensing-based inner bound")
    sv = solves or _solve_grid(alphas, stats, cfg, rng, n_channel)
    t = cfg.coherence_time
    points = []
    for ia, a in enumerate(sv.alphas):
        rates = np.empty(len(sv.channels))
        mmses = np.empty(len(sv.channels))
        ok = True
        for ic, h in enumerate(sv.channels):
            sol = sv.r_stars[(ia, ic)]
            rates[ic] = isometry_rate(h, sol.r_star.mat, t, cfg.comm_noise_var)
            mmses[ic] = _phi_of_r(sol.r_star.mat, stats, cfg)
            ok = ok and sol.converged
        r_mean, r_se = _mean_stderr(rates)
        m_mean, m_se = _mean_stderr(mmses)
        points.append(MmseRatePoint(m_mean, max(r_mean, 0.0), Provenance.SIB,
                                    a, m_se, r_se, ok))
    return points


def cib_curve(alphas, stats: SensingChannelStats, cfg: SystemConfig,
              rng: RngStream, n_channel: int = 50, n_waveform: int = 50,
              solves: _RegionSolves | None = None) -> list[MmseRatePoint]:
    """Communication-based inner bound: Gaussian signal on the outer maximizer.

    The rate equals the outer bound's; the MMSE averages Phi over random
    sample correlations of the Gaussian waveform.
    """
    sv = solves or _solve_grid(alphas, stats, cfg, rng, n_channel)
    t = cfg.coherence_time
    points = []
    wf_rng = rng.substream(10**6)
    for ia, a in enumerate(sv.alphas):
        rates = np.empty(len(sv.channels))
        mmses = np.empty(len(sv.channels))
        ok = True
        for ic, h in enumerate(sv.channels):
            sol = sv.r_stars[(ia, ic)]
            rates[ic] = coherent_rate(h, sol.r_star.mat, cfg.comm_noise_var)
            draws = np.empty(n_waveform)
            base = wf_rng.substream(ia * len(sv.channels) + ic)
            for iw in range(n_waveform):
                w = sample_gaussian_waveform(sol.r_star, t, base.substream(iw))
                draws[iw] = _phi_of_r(w.sample_correlation(), stats, cfg)
            mmses[ic] = draws.mean()
            ok = ok and sol.converged
        r_mean, r_se = _mean_stderr(rates)
        m_mean, m_se = _mean_stderr(mmses)
        points.append(MmseRatePoint(m_mean, r_mean, Provenance.CIB, a,
                                    m_se, r_se, ok))
    return points


def time_share_segment(p_a: MmseRatePoint, p_b: MmseRatePoint,
                       n_points: int = 11) -> list[MmseRatePoint]:
    """Line segment of convex combinations between two strategy points."""
    if n_points < 2:
        raise ConfigError("need at least 2 segment points")
    out = []
    for w in np.linspace(0.0, 1.0, n_points):
        out.append(MmseRatePoint(
            (1 - w) * p_a.mmse + w * p_b.mmse,
            (1 - w) * p_a.rate_nats + w * p_b.rate_nats,
            Provenance.TIME_SHARE_PS_PC,
            None,
            (1 - w) * p_a.stderr_mmse + w * p_b.stderr_mmse,
            (1 - w) * p_a.stderr_rate + w * p_b.stderr_rate))
    return out


def time_share_envelope(points: list[MmseRatePoint]) -> list[MmseRatePoint]:
    """Pareto face of the convex hull of a point set (low MMSE, high rate).

    Upper concave envelope in the (mmse, rate) plane, truncated at the
    maximum-rate vertex; ties at equal rate prefer the lower-MMSE point.
    """
    if len(points) < 2:
        raise ConfigError("need at least 2 points for an envelope")
    # Dedupe equal-mmse points keeping the best rate, then sort ascending.
    best_at: dict[float, MmseRatePoint] = {}
    for p in points:
        cur = best_at.get(p.mmse)
        if cur is None or p.rate_nats > cur.rate_nats:
            best_at[p.mmse] = p
    pts = sorted(best_at.values(), key=lambda p: p.mmse)
    hull: list[MmseRatePoint] = []
    for p in pts:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = ((b.mmse - a.mmse) * (p.rate_nats - a.rate_nats)
                     - (b.rate_nats - a.rate_nats) * (p.mmse - a.mmse))
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    best = max(range(len(hull)), key=lambda i: hull[i].rate_nats)
    face = hull[:best + 1]
    return [MmseRatePoint(p.mmse, p.rate_nats, Provenance.TIME_SHARE_CIB_SIB,
                          None, p.stderr_mmse, p.stderr_rate, p.converged)
            for p in face]


def rectangle_sag(points: list[MmseRatePoint]) -> float:
    """Normalized worst-case distance of a curve from its endpoint rectangle.

    The rectangle corner is (min mmse, max rate); each point's deviation is
    measured in endpoint-normalized coordinates and the maximum is returned.
    A curve hugging the rectangle boundary has sag near 0.
    """
    if len(points) < 3:
        raise ConfigError("need at least 3 points to measure sag")
    eps = np.array([p.mmse for p in points])
    rate = np.array([p.rate_nats for p in points])
    e_span = eps.max() - eps.min()
    r_span = rate.max() - rate.min()
    if e_span <= 0 or r_span <= 0:
        return 0.0
    en = (eps - eps.min()) / e_span
    rn = (rate - rate.min()) / r_span
    # Distance to the corner path {en = 0} union {rn = 1}.
    return float(np.max(np.minimum(en, 1.0 - rn)))


def region_dataset(cfg: SystemConfig, stats: SensingChannelStats, alphas,
                   rng: RngStream, n_channel: int = 50, n_waveform: int = 50,
                   include_limit: bool | None = None,
                   sigma_g2: float | None = None) -> dict:
    """All region curves in one tagged collection.

    Returns a dict with keys 'outer', 'sib', 'cib', 'ps_pc', 'envelope',
    'limit' (scalar configs only) and 'limit_included'.
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ConfigError("empty alpha grid")
    solves = _solve_grid(alphas, stats, cfg, rng, n_channel)
    outer = outer_curve(alphas, stats, cfg, rng, n_channel, solves)
    sib = sib_curve(alphas, stats, cfg, rng, n_channel, solves)
    cib = cib_curve(alphas, stats, cfg, rng, n_channel, n_waveform, solves)

    # Endpoint strategies: sensing-optimal (Ps) and comm-optimal (Pc).
    _, eps_s, r_xs = sensing_waterfill(stats, cfg)
    t = cfg.coherence_time
    ps_rates = np.empty(len(solves.channels))
    pc_rates = np.empty(len(solves.channels))
    pc_mmses = np.empty(len(solves.channels))
    for ic, h in enumerate(solves.channels):
        ps_rates[ic] = isometry_rate(h, r_xs.mat, t, cfg.comm_noise_var)
        _, rate_c, r_xc = comm_waterfill(h, cfg)
        pc_rates[ic] = rate_c
        draws = np.empty(n_waveform)
        base = rng.substream(2 * 10**6 + ic)
        for iw in range(n_waveform):
            w = sample_gaussian_waveform(r_xc, t, base.substream(iw))
            draws[iw] = _phi_of_r(w.sample_correlation(), stats, cfg)
        pc_mmses[ic] = draws.mean()
    psr, psr_se = _mean_stderr(ps_rates)
    pcr, pcr_se = _mean_stderr(pc_rates)
    pcm, pcm_se = _mean_stderr(pc_mmses)
    p_s = MmseRatePoint(eps_s.value, max(psr, 0.0), Provenance.STRATEGY, 0.0,
                        0.0, psr_se)
    p_c = MmseRatePoint(pcm, pcr, Provenance.STRATEGY, 1.0, pcm_se, pcr_se)
    ps_pc = time_share_segment(p_s, p_c)
    envelope = time_share_envelope(sib + cib)

    is_scalar = (cfg.n_tx, cfg.n_rx_comm, cfg.n_rx_sense,
                 cfg.coherence_time) == (1, 1, 1, 1)
    want_limit = is_scalar if include_limit is None else include_limit
    limit: list[MmseRatePoint] = []
    if want_limit and not is_scalar:
        raise ConfigError("limit curve is only available for scalar configs")
    if want_limit:
        from .ba import limit_curve
        sg2 = sigma_g2 if sigma_g2 is not None else \
            float(stats.eigenvalues[0])
        limit = limit_curve(alphas, cfg, rng.substream(3 * 10**6),
                            n_channel=n_channel, sigma_g2=sg2)
    return {"outer": outer, "sib": sib, "cib": cib, "ps_pc": ps_pc,
            "envelope": envelope, "limit": limit,
            "limit_included": want_limit,
            "strategies": [p_s, p_c]}
