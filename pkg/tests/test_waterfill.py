"""Water-filling allocations, their performance values, and ergodic driver."""

import math

import numpy as np
import pytest
import scipy.optimize
import scipy.special

from isac_limits import (RngStream, SensingChannelStats, SystemConfig,
                         comm_waterfill, ergodic_average, phi,
                         sensing_limited_rate, sensing_waterfill)
from isac_limits.core import sample_comm_channel
from isac_limits.errors import DegenerateChannelError
from isac_limits.waterfill import (coherent_rate, high_snr_constant,
                                   isometry_rate, water_level)


def bisect_water_level(gains, noise_var, budget):
    """Independent oracle: bisection on the total-power residual."""
    gains = np.asarray(gains, dtype=float)

    def allocated(eta):
        with np.errstate(divide="ignore"):
            floors = np.where(gains > 0, noise_var / gains, np.inf)
        return np.sum(np.maximum(eta - floors, 0.0))

    lo, hi = 0.0, noise_var / gains[gains > 0].max() + budget + 1.0
    while allocated(hi) < budget:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if allocated(mid) < budget:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestWaterLevel:
    def test_matches_bisection_oracle(self):
        gen = np.random.default_rng(0)
        for _ in range(200):
            n = int(gen.integers(1, 8))
            gains = gen.uniform(0.0, 3.0, n)
            if not np.any(gains > 0):
                gains[0] = 1.0
            noise = gen.uniform(0.1, 2.0)
            budget = gen.uniform(0.1, 20.0)
            eta, powers = water_level(gains, noise, budget)
            assert abs(eta - bisect_water_level(gains, noise, budget)) < 1e-8
            assert abs(powers.sum() - budget) <= 1e-10 * budget

    def test_kkt_complementary_slackness(self):
        gen = np.random.default_rng(1)
        for _ in range(100):
            gains = gen.uniform(0.0, 2.0, 5)
            gains[0] = 1.0
            eta, powers = water_level(gains, 1.0, 3.0)
            for g, p in zip(gains, powers):
                floor = np.inf if g == 0 else 1.0 / g
                if p == 0:
                    assert eta <= floor + 1e-10
                else:
                    assert abs(p - (eta - floor)) <= 1e-10

    def test_tiny_gain_mode_activates_only_with_huge_budget(self):
        gains = np.array([1.0, 1e-9])
        _, p_small = water_level(gains, 1.0, 10.0)
        assert p_small[1] == 0.0
        _, p_large = water_level(gains, 1.0, 1e10)
        assert p_large[1] > 0.0

    def test_active_count_monotone_in_budget(self):
        gains = np.array([2.0, 1.0, 0.25, 0.05])
        counts = []
        for budget in (0.1, 1.0, 10.0, 100.0, 10000.0):
            _, powers = water_level(gains, 1.0, budget)
            counts.append(int(np.count_nonzero(powers)))
        assert counts == sorted(counts)

    def test_all_zero_gains_rejected(self):
        with pytest.raises(DegenerateChannelError):
            water_level(np.zeros(3), 1.0, 1.0)


class TestSensingWaterfill:
    def test_symmetric_channel_closed_form(self):
        # Identity prior: every mode gets T*P0 and the MMSE follows the
        # scalar formula Ns*N*sigma_s^2/(sigma_s^2 + T*P0).
        cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=2,
                           coherence_time=2)
        stats = SensingChannelStats.from_block(np.eye(2), 2)
        wf, eps, r_xs = sensing_waterfill(stats, cfg)
        assert abs(eps.value - 4.0 / 3.0) <= 1e-12
        assert abs(wf.water_level - 3.0) <= 1e-12
        np.testing.assert_allclose(wf.powers, [2.0, 2.0])
        np.testing.assert_allclose(r_xs.mat, np.eye(2), atol=1e-12)

    def test_three_active_modes_regime(self):
        # Spectrum engineered so the water level 200 covers exactly the three
        # strongest of six modes (noise/gain floors 11.1, 20, 33.3 < 200 <
        # 250, 333, 333).
        lam = np.array([0.09, 0.05, 0.03, 0.004, 0.003, 0.003])
        assert abs(lam.sum() - 0.18) < 1e-15  # Tr(Sigma_bar)/(N*Ns) = 0.03
        budget = np.sum(np.maximum(200.0 - 1.0 / lam, 0.0))
        p0 = budget / (6 * 6)
        cfg = SystemConfig(n_tx=6, n_rx_comm=3, n_rx_sense=3,
                           coherence_time=6, per_antenna_power=p0)
        stats = SensingChannelStats.from_block(np.diag(lam), 3)
        wf, _, _ = sensing_waterfill(stats, cfg)
        assert abs(wf.water_level - 200.0) < 1e-9
        assert wf.active_count == 3

    def test_mmse_strictly_decreasing_in_power(self):
        stats = SensingChannelStats.from_block(np.diag([1.0, 0.3]), 2)
        vals = []
        for p0 in (0.5, 1.0, 2.0, 4.0, 8.0):
            cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=2,
                               coherence_time=2, per_antenna_power=p0)
            _, eps, _ = sensing_waterfill(stats, cfg)
            vals.append(eps.value)
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_mmse_linear_in_receiver_count(self):
        sg = np.diag([1.0, 0.4])
        cfg1 = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=1,
                            coherence_time=2)
        cfg2 = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=2,
                            coherence_time=2)
        _, e1, _ = sensing_waterfill(SensingChannelStats.from_block(sg, 1),
                                     cfg1)
        _, e2, _ = sensing_waterfill(SensingChannelStats.from_block(sg, 2),
                                     cfg2)
        assert e2.value == 2 * e1.value
        assert e2.normalized == e1.normalized

    def test_local_optimality_among_feasible_perturbations(self):
        gen = np.random.default_rng(3)
        cfg = SystemConfig(n_tx=3, n_rx_comm=2, n_rx_sense=2,
                           coherence_time=3)
        a = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
        stats = SensingChannelStats.from_block(a @ a.conj().T / 3
                                               + 0.2 * np.eye(3), 2)
        _, eps, r_xs = sensing_waterfill(stats, cfg)
        budget = cfg.total_power
        for _ in range(1000):
            d = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
            d = d @ d.conj().T
            mix = 0.99 * r_xs.mat + 0.01 * budget * d / np.trace(d).real
            val = phi(mix, stats, 3, 1.0).value
            assert val >= eps.value - 1e-9

    def test_degenerate_prior_rejected(self):
        cfg = SystemConfig(n_tx=2, n_rx_comm=1, n_rx_sense=1,
                           coherence_time=2)
        with pytest.raises(DegenerateChannelError):
            sensing_waterfill(
                SensingChannelStats.from_block(np.zeros((2, 2)), 1), cfg)


class TestCommWaterfill:
    def test_identity_channel(self):
        cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=1,
                           coherence_time=2)
        wf, rate, r_xc = comm_waterfill(np.eye(2), cfg)
        assert abs(rate - 2 * math.log(2.0)) <= 1e-12
        np.testing.assert_allclose(r_xc.mat, np.eye(2), atol=1e-12)
        assert abs(wf.water_level - 2.0) < 1e-12

    def test_rank_one_channel(self):
        cfg = SystemConfig(n_tx=3, n_rx_comm=1, n_rx_sense=1,
                           coherence_time=3)
        h = np.array([[2.0, 0.0, 0.0]])
        _, rate, _ = comm_waterfill(h, cfg)
        assert abs(rate - math.log(1.0 + 4.0 * 3.0)) <= 1e-12

    def test_random_channel_against_slsqp_oracle(self):
        gen = np.random.default_rng(4)
        cfg = SystemConfig(n_tx=6, n_rx_comm=3, n_rx_sense=1,
                           coherence_time=6)
        h = (gen.standard_normal((3, 6)) + 1j * gen.standard_normal((3, 6))
             ) / np.sqrt(2)
        wf, rate, _ = comm_waterfill(h, cfg)
        gamma = np.sort(np.linalg.eigvalsh(h.conj().T @ h))[::-1]
        gamma = np.maximum(gamma, 0.0)

        def neg_rate(p):
            return -np.sum(np.log(1.0 + gamma * p))

        res = scipy.optimize.minimize(
            neg_rate, np.full(6, 1.0),
            bounds=[(0, None)] * 6,
            constraints=[{"type": "eq", "fun": lambda p: p.sum() - 6.0}],
            method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
        assert abs(rate - (-res.fun)) <= 1e-6
        # KKT residual.
        for g, p in zip(wf.gains, wf.powers):
            if p > 0:
                assert abs(p - (wf.water_level - 1.0 / g)) <= 1e-10

    def test_rate_matches_logdet_identity(self):
        gen = np.random.default_rng(5)
        cfg = SystemConfig(n_tx=4, n_rx_comm=3, n_rx_sense=1,
                           coherence_time=4)
        for _ in range(20):
            h = (gen.standard_normal((3, 4))
                 + 1j * gen.standard_normal((3, 4))) / np.sqrt(2)
            _, rate, r_xc = comm_waterfill(h, cfg)
            direct = coherent_rate(h, r_xc.mat, cfg.comm_noise_var)
            assert abs(rate - direct) <= 1e-10 * max(1.0, rate)

    def test_zero_channel_rejected(self):
        cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=1,
                           coherence_time=2)
        with pytest.raises(DegenerateChannelError):
            comm_waterfill(np.zeros((2, 2)), cfg)


class TestIsometryRate:
    def test_scalar_example_frozen_value(self):
        # Independent evaluation: 0.5*ln(100) + (1/2)ln(1/e) + ln(2*sqrt(pi))
        # with lgamma(1) = 0.
        expected = (0.5 * math.log(100.0)
                    + 0.5 * math.log(1.0 / math.e)
                    - scipy.special.gammaln(1.0)
                    + math.log(2.0 * math.sqrt(math.pi)))
        got = isometry_rate(np.array([[1.0]]), np.array([[100.0]]), 1, 1.0)
        assert abs(got - expected) <= 1e-12
        assert abs(got - 3.0680972164786913) <= 1e-12

    def test_prefactor_vanishes_with_block_length(self):
        fracs = []
        for t in (6, 60, 600):
            cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=1,
                               coherence_time=t)
            stats = SensingChannelStats.from_block(np.eye(2), 1)
            _, _, r_xs = sensing_waterfill(stats, cfg)
            m = r_xs.mat  # full rank 2
            fracs.append(2 / (2.0 * t))
        assert fracs == sorted(fracs, reverse=True)

    def test_rank_bounded_by_receive_antennas(self):
        cfg = SystemConfig(n_tx=3, n_rx_comm=1, n_rx_sense=1,
                           coherence_time=3)
        h = np.array([[1.0, 0.5, 0.25]])
        r = np.eye(3)
        m = (h @ r @ h.conj().T).real
        rate = isometry_rate(h, r, 3, 1.0)
        expected = (1 - 1 / 6) * math.log(m[0, 0]) + high_snr_constant(1, 3)
        assert abs(rate - expected) <= 1e-12

    def test_zero_effective_channel_gives_zero_rate(self):
        assert isometry_rate(np.zeros((1, 1)), np.eye(1), 2, 1.0) == 0.0


class TestSensingLimitedRate:
    def test_matches_manual_average(self):
        cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=2,
                           coherence_time=4, per_antenna_power=10.0,
                           mc_trials=50)
        stats = SensingChannelStats.from_block(np.eye(2), 2)
        mean, stderr = sensing_limited_rate(cfg, stats, RngStream(6))
        _, _, r_xs = sensing_waterfill(stats, cfg)
        vals = [isometry_rate(sample_comm_channel(cfg, RngStream(6, i + 1)),
                              r_xs.mat, 4, 1.0)
                for i in range(50)]
        assert abs(mean - np.mean(vals)) <= 1e-12
        assert stderr > 0


class TestErgodicAverage:
    def test_constant_closure(self):
        cfg = SystemConfig(mc_trials=10)
        mean, stderr = ergodic_average(lambda h: 2.5, cfg, RngStream(0))
        assert mean == 2.5
        assert stderr == 0.0

    def test_scalar_rate_self_consistency(self):
        cfg = SystemConfig(mc_trials=4000)

        def rate(h):
            return 0.5 * math.log(1.0 + abs(h[0, 0]) ** 2)

        mean, stderr = ergodic_average(rate, cfg, RngStream(1))
        big_cfg = SystemConfig(mc_trials=100000)
        ref, ref_se = ergodic_average(rate, big_cfg, RngStream(2))
        assert abs(mean - ref) <= 3 * (stderr + ref_se)

    def test_reseed_stability(self):
        cfg = SystemConfig(mc_trials=2000)

        def rate(h):
            return math.log(1.0 + abs(h[0, 0]) ** 2)

        base, stderr = ergodic_average(rate, cfg, RngStream(0))
        for seed in range(1, 21):
            other, other_se = ergodic_average(rate, cfg, RngStream(seed))
            assert abs(other - base) <= 4 * (stderr + other_se)
