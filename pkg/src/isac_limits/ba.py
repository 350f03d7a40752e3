"""Constrained Blahut-Arimoto iteration on a discretized real scalar channel.

Traces the true MMSE-rate trade-off of the scalar (single-antenna, T=1)
system: for a weight alpha in (0, 1], alternately update the input
distribution and the power-constraint multiplier until the weighted objective
J = alpha * rate - (1 - alpha) * mmse stabilizes. The alpha = 0 endpoint is
served by the closed forms in :func:`siso_endpoints` because the update's
(1/alpha - 1) exponent diverges there.

Matrix-valued (multi-antenna) inputs are out of scope for this iteration; the
grid-based machinery extends in principle by replacing the scalar grids with
matrix quadrature, at exponential cost in dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .core import RngStream, SystemConfig
from .errors import (ConfigError, ConvergenceError, DomainError,
                     GridCoverageError)
from .points import MmseRatePoint, Provenance

# Floating-point slack for the monotone-ascent assertion.
ASCENT_SLACK = 1e-9
EDGE_MASS_LIMIT = 1e-6
MAX_OUTER_ITERS = 5000
MAX_NEWTON_ITERS = 200


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the input/output ranges.

    The input grid spans ``x_span`` standard deviations of the full-power
    input (i.e. x in [-x_span*sqrt(P0), x_span*sqrt(P0)]); the output grid
    covers the image of the input range padded by ``y_pad`` noise deviations.
    """

    x_points: int = 201
    y_points: int = 401
    x_span: float = 5.0
    y_pad: float = 5.0

    def __post_init__(self) -> None:
        if self.x_points < 3 or self.y_points < 3:
            raise ConfigError("grids need at least 3 points")
        if self.x_span <= 0 or self.y_pad <= 0:
            raise ConfigError("grid spans must be positive")


@dataclass(frozen=True)
class GridPdf:
    """Probability mass on a uniform 1-D grid (cell width absorbed)."""

    grid: np.ndarray
    mass: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        mass = np.asarray(self.mass, dtype=float)
        if grid.ndim != 1 or grid.shape != mass.shape:
            raise DomainError("grid and mass must be matching 1-D vectors")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        if np.any(mass < 0):
            raise DomainError("probability mass must be nonnegative")
        total = mass.sum()
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"mass must sum to 1, got {total!r}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "mass", mass)

    @property
    def width(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def moment(self, k: int) -> float:
        return float(np.sum(self.mass * self.grid ** k))


@dataclass(frozen=True)
class BaResult:
    """Converged (or flagged) state of one weighted trade-off solve."""

    alpha: float
    p_x: GridPdf
    p_y: GridPdf
    rate_nats: float
    mmse: float
    mu: float
    iterations: int
    converged: bool

    def __post_init__(self) -> None:
        if self.mu > 0:
            raise DomainError(f"power multiplier must be <= 0, got {self.mu}")


def _sensing_penalty(x: np.ndarray, sigma_g2: float, sigma_s2: float
                     ) -> np.ndarray:
    """Conditional channel-estimation MSE 1/(1/sigma_g^2 + x^2/sigma_s^2)."""
    return 1.0 / (1.0 / sigma_g2 + x ** 2 / sigma_s2)


def _normalized_weights(log_w: np.ndarray) -> np.ndarray:
    m = np.max(log_w)
    if not np.isfinite(m):
        raise DomainError("all update weights vanished")
    w = np.exp(log_w - m)
    return w / w.sum()


def _solve_multiplier(log_base: np.ndarray, x2: np.ndarray, p0: float,
                      mu0: float, tol: float) -> float:
    """Newton solve of the power-constraint residual, with bisection fallback.

    The residual f(mu) = sum (1 - x^2/P0) * w(mu), with unnormalized weights
    log w = log_base + mu * x^2, is decreasing in mu; the multiplier is
    clamped to mu <= 0 when the constraint is slack.
    """

    def residual_and_slope(mu: float) -> tuple[float, float]:
        # Normalized power residual p0 - E[x^2]; decreasing in mu with slope
        # -Var(x^2) under the tilted distribution.
        w = _normalized_weights(log_base + mu * x2)
        m2 = float(np.sum(w * x2))
        var = float(np.sum(w * (x2 - m2) ** 2))
        return p0 - m2, -var

    f0, _ = residual_and_slope(0.0)
    if f0 >= 0.0:
        return 0.0  # constraint slack at mu = 0; clamp applies
    mu = min(mu0, 0.0)
    for _ in range(MAX_NEWTON_ITERS):
        f, fp = residual_and_slope(mu)
        if abs(f) <= tol * p0:
            return mu
        if not fp < -1e-300:
            return _bisect_multiplier(residual_and_slope, p0, tol)
        mu_new = min(mu - f / fp, 0.0)
        if not np.isfinite(mu_new):
            return _bisect_multiplier(residual_and_slope, p0, tol)
        if abs(mu_new - mu) <= tol * max(1.0, abs(mu)):
            return mu_new
        mu = mu_new
    return _bisect_multiplier(residual_and_slope, p0, tol)


def _bisect_multiplier(residual_and_slope, p0: float, tol: float) -> float:
    f0, _ = residual_and_slope(0.0)
    if f0 >= 0.0:
        return 0.0  # constraint slack at mu = 0; clamp applies
    lo, hi = -1.0, 0.0
    for _ in range(200):
        f_lo, _ = residual_and_slope(lo)
        if f_lo >= 0.0:
            break
        lo *= 2.0
    else:
        raise ConvergenceError("could not bracket the power multiplier")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid, _ = residual_and_slope(mid)
        if f_mid >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _require_siso(cfg: SystemConfig) -> None:
    if (cfg.n_tx, cfg.n_rx_comm, cfg.n_rx_sense, cfg.coherence_time) != (1, 1, 1, 1):
        raise ConfigError(
            "scalar trade-off solver requires N = Nc = Ns = T = 1")


def ba_solve(alpha: float, h: float, cfg: SystemConfig,
             grid_spec: GridSpec | None = None, sigma_g2: float = 1.0,
             trace: list | None = None) -> BaResult:
    """One weighted rate/MMSE trade-off solve on the discretized channel.

    Alternates a multiplier (Newton) solve with the exponential-tilt input
    update; the weighted objective is checked to ascend monotonically and the
    outer loop stops when it changes by at most ``cfg.ba_tol_perf``.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(
            f"alpha must lie in (0, 1] (0 is served in closed form): {alpha}")
    _require_siso(cfg)
    spec = grid_spec or GridSpec()
    p0 = cfg.per_antenna_power
    sigma_c = math.sqrt(cfg.comm_noise_var)
    sigma_s2 = cfg.sense_noise_var

    x = np.linspace(-spec.x_span * math.sqrt(p0), spec.x_span * math.sqrt(p0),
                    spec.x_points)
    y_lo = -abs(h) * spec.x_span * math.sqrt(p0) - spec.y_pad * sigma_c
    y = np.linspace(y_lo, -y_lo, spec.y_points)
    dy = y[1] - y[0]
    # Channel transition densities p(y|x), shape (nx, ny).
    pyx = np.exp(-(y[None, :] - h * x[:, None]) ** 2 / (2.0 * cfg.comm_noise_var))
    pyx /= math.sqrt(2.0 * math.pi * cfg.comm_noise_var)

    x2 = x ** 2
    penalty = _sensing_penalty(x, sigma_g2, sigma_s2)
    sense_weight = (1.0 / alpha - 1.0)

    # Initial input: discretized zero-mean Gaussian at full power.
    mass = np.exp(-x2 / (2.0 * p0))
    mass /= mass.sum()
    mu = -1.0
    j_prev = None
    rate = mmse = 0.0
    converged = False
    iterations = 0

    with np.errstate(divide="ignore"):
        for iterations in range(1, MAX_OUTER_ITERS + 1):
            py = mass @ pyx  # output density on the y grid
            ratio = np.ones_like(pyx)
            np.divide(pyx, py[None, :], out=ratio, where=pyx > 0)
            d = np.sum(pyx * np.log(ratio), axis=1) * dy
            rate = float(np.sum(mass * d))
            mmse = float(np.sum(mass * penalty))
            j = alpha * rate - (1.0 - alpha) * mmse
            if trace is not None:
                trace.append({"iteration": iterations, "objective": j,
                              "mu": mu, "rate_nats": rate, "mmse": mmse})
            if j_prev is not None:
                if j < j_prev - ASCENT_SLACK * max(1.0, abs(j_prev)):
                    raise ConvergenceError(
                        f"objective decreased: {j_prev!r} -> {j!r}")
                if abs(j - j_prev) <= cfg.ba_tol_perf:
                    converged = True
                    break
            j_prev = j

            log_base = np.log(mass) + d - sense_weight * penalty
            mu = _solve_multiplier(log_base, x2, p0, mu, cfg.ba_tol_mult)
            mass = _normalized_weights(log_base + mu * x2)

    if converged:
        edge = mass[0] + mass[1] + mass[-1] + mass[-2]
        if edge >= EDGE_MASS_LIMIT:
            raise GridCoverageError(
                f"input grid too narrow: edge mass {edge:.3e}")
        ex2 = float(np.sum(mass * x2))
        if abs(ex2 - p0) > 1e-6 * p0 and mu < 0.0:
            converged = False

    py = mass @ pyx
    py_mass = py * dy
    edge_y = py_mass[0] + py_mass[1] + py_mass[-1] + py_mass[-2]
    if converged and edge_y >= EDGE_MASS_LIMIT:
        raise GridCoverageError(
            f"output grid too narrow: edge mass {edge_y:.3e}")
    py_mass = py_mass / py_mass.sum()
    return BaResult(alpha, GridPdf(x, mass), GridPdf(y, py_mass), rate, mmse,
                    mu, iterations, converged)


@dataclass(frozen=True)
class SisoEndpoints:
    """Closed-form endpoint performance for the scalar channel."""

    sensing_mmse: float
    sensing_rate: float
    comm_mmse: float
    comm_rate: float
    p_x_sensing: GridPdf = field(repr=False)
    p_x_comm: GridPdf = field(repr=False)


def binary_input_rate(h: float, p0: float, sigma_c2: float) -> float:
    """Mutual information of the antipodal-input Gaussian channel (nats).

    Output entropy of the two-component Gaussian mixture minus the noise
    entropy, by adaptive quadrature.
    """
    a = abs(h) * math.sqrt(p0)
    sig = math.sqrt(sigma_c2)

    def density(yv: float) -> float:
        return 0.5 * (math.exp(-(yv - a) ** 2 / (2 * sigma_c2))
                      + math.exp(-(yv + a) ** 2 / (2 * sigma_c2))
                      ) / math.sqrt(2 * math.pi * sigma_c2)

    def neg_ent(yv: float) -> float:
        q = density(yv)
        return -q * math.log(q) if q > 0 else 0.0

    lim = a + 10 * sig
    h_y, _ = scipy.integrate.quad(neg_ent, -lim, lim, limit=200)
    return h_y - 0.5 * math.log(2 * math.pi * math.e * sigma_c2)


def gaussian_input_mmse(p0: float, sigma_g2: float, sigma_s2: float,
                        order: int = 201) -> float:
    """E[1/(1/sigma_g^2 + x^2/sigma_s^2)] for x ~ N(0, P0), by quadrature."""
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    xs = nodes * math.sqrt(2.0 * p0)
    vals = _sensing_penalty(xs, sigma_g2, sigma_s2)
    return float(np.sum(weights * vals) / math.sqrt(math.pi))


def siso_endpoints(h: float, cfg: SystemConfig, sigma_g2: float = 1.0,
                   grid_spec: GridSpec | None = None) -> SisoEndpoints:
    """Endpoint distributions and performance of the scalar trade-off.

    The sensing-optimal input is antipodal at +-sqrt(P0) (estimation cares
    only about x^2, so full power always); the rate-optimal input is
    N(0, P0).
    """
    _require_siso(cfg)
    spec = grid_spec or GridSpec()
    p0 = cfg.per_antenna_power
    eps0 = 1.0 / (1.0 / sigma_g2 + p0 / cfg.sense_noise_var)
    rate0 = binary_input_rate(h, p0, cfg.comm_noise_var)
    eps1 = gaussian_input_mmse(p0, sigma_g2, cfg.sense_noise_var)
    rate1 = 0.5 * math.log(1.0 + h * h * p0 / cfg.comm_noise_var)

    x = np.linspace(-spec.x_span * math.sqrt(p0), spec.x_span * math.sqrt(p0),
                    spec.x_points)
    atoms = np.zeros_like(x)
    for target in (-math.sqrt(p0), math.sqrt(p0)):
        atoms[int(np.argmin(np.abs(x - target)))] += 0.5
    gauss = np.exp(-x ** 2 / (2.0 * p0))
    gauss /= gauss.sum()
    return SisoEndpoints(eps0, rate0, eps1, rate1,
                         GridPdf(x, atoms), GridPdf(x, gauss))


def limit_curve(alphas, cfg: SystemConfig, rng: RngStream,
                n_channel: int | None = None, sigma_g2: float = 1.0,
                grid_spec: GridSpec | None = None,
                trace: list | None = None) -> list[MmseRatePoint]:
    """Ergodic MMSE-rate limit points over a weight grid.

    Each channel draw is solved at every weight (common random numbers), and
    the per-weight sample means form the curve. Endpoint weights use the
    closed forms; interior weights run the iterative solve, and points whose
    solves did not all converge are flagged rather than dropped.
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ConfigError("empty alpha grid")
    if any(not 0.0 <= a <= 1.0 for a in alphas):
        raise DomainError("alpha grid must lie in [0, 1]")
    _require_siso(cfg)
    draws = n_channel if n_channel is not None else min(cfg.mc_trials, 50)
    if draws <= 0:
        raise ConfigError("need at least one channel draw")
    hs = np.empty(draws)
    for i in range(draws):
        gen = rng.substream(i).generator()
        hs[i] = gen.standard_normal() * math.sqrt(cfg.comm_channel_var)

    points = []
    for a in alphas:
        rates = np.empty(draws)
        mmses = np.empty(draws)
        ok = True
        for i, h in enumerate(hs):
            if a == 0.0:
                ends = siso_endpoints(float(h), cfg, sigma_g2, grid_spec)
                rates[i], mmses[i] = ends.sensing_rate, ends.sensing_mmse
            elif a == 1.0:
                ends = siso_endpoints(float(h), cfg, sigma_g2, grid_spec)
                rates[i], mmses[i] = ends.comm_rate, ends.comm_mmse
            else:
                sub_trace = [] if trace is not None else None
                res = ba_solve(a, float(h), cfg, grid_spec, sigma_g2, sub_trace)
                if trace is not None:
                    for row in sub_trace:
                        trace.append({"alpha": a, "channel_index": i, **row})
                rates[i], mmses[i] = res.rate_nats, res.mmse
                ok = ok and res.converged
        se_r = float(rates.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
        se_m = float(mmses.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
        points.append(MmseRatePoint(float(mmses.mean()), float(rates.mean()),
                                    Provenance.LIMIT, a, se_m, se_r, ok))
    return points
