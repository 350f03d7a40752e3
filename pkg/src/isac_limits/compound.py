"""Pilot-then-data strategy for a coincided sensing/communication channel.

When the sensed channel is the communication channel itself (G = H, so the
prior is sigma_h^2 * I and Ns = Nc), the transmitter can spend T' symbols on
the sensing-optimal isometry pilot, estimate H from the echoes, and
water-fill the remaining T - T' symbols on the estimate. The total rate is
the exact time-split convex combination of the two phase rates. The
benchmark is the non-coherent equal-power Gaussian signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (CorrelationMatrix, RngStream, SensingChannelStats,
                   SystemConfig, complex_gaussian, sample_comm_channel)
from .errors import ConfigError, DomainError, ModeError
from .sensing import build_xbar, mmse_estimate, phi_block
from .waterfill import (WaterFillResult, coherent_rate, comm_waterfill,
                        isometry_rate, sensing_optimal_waveform, water_level)


@dataclass(frozen=True)
class CompoundResult:
    """Averaged performance of one pilot length T'."""

    t_pilot: int
    mmse: float
    rate_total_nats: float
    rate_pilot_nats: float
    rate_data_nats: float
    rate_data_on_estimate_nats: float
    stderr_rate: float
    estimation_mse_simulated: float
    estimation_mse_stderr: float
    coherence_time: int

    def __post_init__(self) -> None:
        t, tp = self.coherence_time, self.t_pilot
        combo = abs(self.rate_total_nats
                    - (tp * self.rate_pilot_nats
                       + (t - tp) * self.rate_data_nats) / t)
        if combo > 1e-12 * max(1.0, abs(self.rate_total_nats)):
            raise DomainError("total rate is not the exact time split")


def _require_coincided(cfg: SystemConfig) -> None:
    if cfg.n_rx_sense != cfg.n_rx_comm:
        raise ModeError(
            "coincided-channel mode requires n_rx_sense == n_rx_comm "
            f"(got {cfg.n_rx_sense} != {cfg.n_rx_comm})")


def coincided_stats(cfg: SystemConfig) -> SensingChannelStats:
    """Prior statistics of the coincided channel: sigma_h^2 * I per receiver."""
    _require_coincided(cfg)
    return SensingChannelStats.from_block(
        cfg.comm_channel_var * np.eye(cfg.n_tx), cfg.n_rx_comm)


def _pilot_design(cfg: SystemConfig, t_pilot: int
                  ) -> tuple[WaterFillResult, float, CorrelationMatrix]:
    """Sensing water-fill over the identity prior with T' pilot symbols.

    All modes are symmetric, so each of the N modes gets T'*P0 and the
    pilot-phase MMSE is deterministic.
    """
    stats = coincided_stats(cfg)
    n = cfg.n_tx
    budget = t_pilot * n * cfg.per_antenna_power
    eta, powers = water_level(stats.eigenvalues, cfg.sense_noise_var, budget)
    u = stats.eig_basis
    r_mat = (u * (powers / t_pilot)) @ u.conj().T
    r_xs = CorrelationMatrix(r_mat, n * cfg.per_antenna_power)
    mmse = phi_block(r_xs.mat, stats, t_pilot, cfg.sense_noise_var)
    wf = WaterFillResult(eta, powers, u, int(np.count_nonzero(powers > 0)),
                         stats.eigenvalues.copy())
    return wf, mmse, r_xs


def noncoherent_baseline(cfg: SystemConfig, rng: RngStream,
                         n_trials: int | None = None
                         ) -> tuple[float, float, float, float]:
    """Equal-power Gaussian signaling with no channel knowledge.

    Returns (rate, rate_stderr, mmse, mmse_stderr): the rate is
    E logdet(I + (P0/sigma_c^2) H H^H); the MMSE averages Phi over the random
    sample correlations of the same signal.
    """
    _require_coincided(cfg)
    stats = coincided_stats(cfg)
    trials = cfg.mc_trials if n_trials is None else int(n_trials)
    if trials <= 0:
        raise ConfigError(f"need a positive trial count, got {trials}")
    t = cfg.coherence_time
    p0 = cfg.per_antenna_power
    rates = np.empty(trials)
    mmses = np.empty(trials)
    for i in range(trials):
        sub = rng.substream(i)
        h = sample_comm_channel(cfg, sub.substream(0))
        x = math.sqrt(p0) * complex_gaussian(sub.substream(1).generator(),
                                             (cfg.n_tx, t))
        r_sample = (x @ x.conj().T) / t
        rates[i] = coherent_rate(h, p0 * np.eye(cfg.n_tx), cfg.comm_noise_var)
        mmses[i] = phi_block(r_sample, stats, t, cfg.sense_noise_var)
    r_se = float(rates.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    m_se = float(mmses.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(rates.mean()), r_se, float(mmses.mean()), m_se


def compound_run(t_pilot: int, cfg: SystemConfig, rng: RngStream,
                 n_trials: int | None = None) -> CompoundResult:
    """One pilot length: estimate from the pilot echo, water-fill the estimate.

    The data-phase rate is evaluated on the true channel with the
    estimate-designed input (achievable, and exact in the perfect-estimate
    limit); the rate the transmitter *believes* it gets on the estimate is
    kept as a labeled diagnostic.
    """
    _require_coincided(cfg)
    if not cfg.n_tx <= t_pilot <= cfg.coherence_time:
        raise ConfigError(
            f"pilot length must satisfy N <= T' <= T, got T'={t_pilot} with "
            f"N={cfg.n_tx}, T={cfg.coherence_time}")
    stats = coincided_stats(cfg)
    trials = cfg.mc_trials if n_trials is None else int(n_trials)
    if trials <= 0:
        raise ConfigError(f"need a positive trial count, got {trials}")
    n, nc = cfg.n_tx, cfg.n_rx_comm
    t = cfg.coherence_time
    sigma_s2 = cfg.sense_noise_var

    wf, pilot_mmse, r_xs = _pilot_design(cfg, t_pilot)

    rate_pilot = np.empty(trials)
    rate_data = np.empty(trials)
    rate_data_est = np.empty(trials)
    est_err = np.empty(trials)
    cond_mse = np.empty(trials)
    for i in range(trials):
        sub = rng.substream(i)
        h = sample_comm_channel(cfg, sub.substream(0))
        pilot = sensing_optimal_waveform(wf, cfg, sub.substream(1), t=t_pilot)
        # Echo s = (I (x) X^H) g + noise with g = vec(H^H).
        g = h.conj().T.reshape(-1, order="F")
        xbar = build_xbar(pilot.x, nc)
        noise = complex_gaussian(sub.substream(2).generator(),
                                 (t_pilot * nc,), sigma_s2)
        s = xbar @ g + noise
        est = mmse_estimate(pilot, s, stats, sigma_s2)
        h_hat = est.g_hat.reshape(n, nc, order="F").conj().T
        est_err[i] = float(np.sum(np.abs(est.g_hat - g) ** 2))
        cond_mse[i] = est.conditional_mse

        rate_pilot[i] = isometry_rate(h, r_xs.mat, t_pilot, cfg.comm_noise_var)
        try:
            _, rate_on_est, r_xc = comm_waterfill(h_hat, cfg)
        except DomainError:
            rate_data[i] = rate_data_est[i] = 0.0
            continue
        rate_data[i] = coherent_rate(h, r_xc.mat, cfg.comm_noise_var)
        rate_data_est[i] = rate_on_est

    mean_pilot = float(rate_pilot.mean())
    mean_data = float(rate_data.mean())
    total = (t_pilot * mean_pilot + (t - t_pilot) * mean_data) / t
    totals = (t_pilot * rate_pilot + (t - t_pilot) * rate_data) / t
    se = float(totals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    e_se = float(est_err.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return CompoundResult(
        t_pilot=t_pilot, mmse=pilot_mmse, rate_total_nats=total,
        rate_pilot_nats=mean_pilot, rate_data_nats=mean_data,
        rate_data_on_estimate_nats=float(rate_data_est.mean()),
        stderr_rate=se, estimation_mse_simulated=float(est_err.mean()),
        estimation_mse_stderr=e_se, coherence_time=t)


def compound_sweep(t_pilots, cfg: SystemConfig, rng: RngStream,
                   n_trials: int | None = None
                   ) -> tuple[list[CompoundResult], tuple[float, float, float, float]]:
    """Run every pilot length plus the non-coherent baseline."""
    t_pilots = [int(tp) for tp in t_pilots]
    if not t_pilots:
        raise ConfigError("empty pilot-length sweep")
    results = [compound_run(tp, cfg, rng.substream(k), n_trials)
               for k, tp in enumerate(t_pilots)]
    baseline = noncoherent_baseline(cfg, rng.substream(len(t_pilots)), n_trials)
    return results, baseline
