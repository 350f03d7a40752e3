"""Modified-MMSE functional, Bayesian estimator, and ensemble expectation."""

import numpy as np
import pytest

from isac_limits import (CorrelationMatrix, RngStream, SensingChannelStats,
                         SystemConfig, Waveform, WaveformKind, expected_mmse,
                         mmse_estimate, phi, sample_gaussian_waveform,
                         sensing_waterfill)
from isac_limits.errors import DimensionError, DomainError
from isac_limits.sensing import build_xbar, phi_block, phi_dense
from isac_limits.waterfill import sensing_optimal_waveform


def random_psd(gen, n, jitter=0.0):
    a = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
    return a @ a.conj().T / n + jitter * np.eye(n)


class TestPhi:
    def test_zero_signal_returns_prior_variance(self):
        gen = np.random.default_rng(0)
        sg = random_psd(gen, 3, jitter=0.2)
        stats = SensingChannelStats.from_block(sg, 2)
        val = phi(np.zeros((3, 3)), stats, 4, 1.0)
        assert abs(val.value - 2 * np.trace(sg).real) < 1e-10

    def test_identity_prior_identity_signal(self):
        # Per-mode 1/(1+1): total Ns*N/2.
        for n, ns in [(2, 1), (3, 4)]:
            stats = SensingChannelStats.from_block(np.eye(n), ns)
            val = phi(np.eye(n), stats, 1, 1.0)
            assert abs(val.value - ns * n / 2) < 1e-12
            assert abs(val.normalized - 0.5) < 1e-12

    def test_scalar_full_power(self):
        stats = SensingChannelStats.from_block(np.eye(1), 1)
        val = phi(np.array([[1.0]]), stats, 1, 1.0)
        assert abs(val.value - 0.5) < 1e-12

    def test_block_fast_path_matches_dense(self):
        gen = np.random.default_rng(1)
        for _ in range(20):
            n, ns, t = int(gen.integers(1, 4)), int(gen.integers(1, 4)), 3
            sg = random_psd(gen, n, jitter=0.3)
            r = random_psd(gen, n)
            stats = SensingChannelStats.from_block(sg, ns)
            fast = phi(r, stats, t, 0.7).value
            dense = phi(np.kron(np.eye(ns), r), stats, t, 0.7).value
            assert abs(fast - dense) <= 1e-12 * max(1.0, abs(dense))

    def test_matrix_monotone_decreasing(self):
        gen = np.random.default_rng(2)
        stats = SensingChannelStats.from_block(random_psd(gen, 3, 0.3), 2)
        for _ in range(50):
            b = random_psd(gen, 3)
            c = random_psd(gen, 3)
            hi = phi(b + c, stats, 2, 1.0).value
            lo = phi(b, stats, 2, 1.0).value
            assert hi <= lo + 1e-10

    def test_singular_prior_rejected(self):
        stats = SensingChannelStats.from_block(np.diag([1.0, 0.0]), 1)
        with pytest.raises(DomainError):
            phi(np.eye(2), stats, 1, 1.0)

    def test_dimension_mismatch_rejected(self):
        stats = SensingChannelStats.from_block(np.eye(2), 2)
        with pytest.raises(DimensionError):
            phi(np.eye(3), stats, 1, 1.0)


class TestMmseEstimate:
    def _instance(self, seed, n=2, ns=2, t=3, sigma_s2=0.5):
        gen = np.random.default_rng(seed)
        x = (gen.standard_normal((n, t)) + 1j * gen.standard_normal((n, t)))
        sg = random_psd(gen, n, jitter=0.4)
        stats = SensingChannelStats.from_block(sg, ns)
        g = (gen.standard_normal(n * ns) + 1j * gen.standard_normal(n * ns))
        noise = (gen.standard_normal(t * ns) + 1j * gen.standard_normal(t * ns))
        s = build_xbar(x, ns) @ g + np.sqrt(sigma_s2 / 2) * noise
        return x, stats, g, s, sigma_s2

    def test_zero_observation_gives_zero_estimate(self):
        x, stats, _, s, sigma_s2 = self._instance(0)
        out = mmse_estimate(x, np.zeros_like(s), stats, sigma_s2)
        assert np.linalg.norm(out.g_hat) == 0.0

    def test_noiseless_limit_recovers_truth(self):
        gen = np.random.default_rng(3)
        n, ns = 2, 2
        x = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
        x += 2 * np.eye(n)  # keep it comfortably invertible
        stats = SensingChannelStats.from_block(np.eye(n), ns)
        g = gen.standard_normal(n * ns) + 1j * gen.standard_normal(n * ns)
        s = build_xbar(x, ns) @ g
        out = mmse_estimate(x, s, stats, 1e-12)
        assert np.linalg.norm(out.g_hat - g) <= 1e-4 * np.linalg.norm(g)

    def test_agrees_with_covariance_form(self):
        # Oracle: the matrix-inversion-lemma form
        # Sigma Xbar^H (Xbar Sigma Xbar^H + sigma_s^2 I)^-1 s.
        for seed in range(100):
            x, stats, _, s, sigma_s2 = self._instance(seed)
            out = mmse_estimate(x, s, stats, sigma_s2)
            xbar = build_xbar(x, stats.n_rx_sense)
            sigma = stats.full()
            alt = sigma @ xbar.conj().T @ np.linalg.solve(
                xbar @ sigma @ xbar.conj().T + sigma_s2 * np.eye(xbar.shape[0]),
                s)
            err = np.linalg.norm(out.g_hat - alt) / np.linalg.norm(alt)
            assert err <= 1e-9

    def test_conditional_mse_formula(self):
        x, stats, _, s, sigma_s2 = self._instance(7)
        out = mmse_estimate(x, s, stats, sigma_s2)
        xbar = build_xbar(x, stats.n_rx_sense)
        direct = np.trace(np.linalg.inv(
            np.linalg.inv(stats.full())
            + xbar.conj().T @ xbar / sigma_s2)).real
        assert abs(out.conditional_mse - direct) <= 1e-9 * direct

    def test_simulated_mse_matches_conditional(self):
        x, stats, _, _, sigma_s2 = self._instance(11)
        gen = np.random.default_rng(13)
        xbar = build_xbar(x, stats.n_rx_sense)
        root = np.linalg.cholesky(stats.full())
        errs = np.empty(3000)
        cond = None
        for i in range(errs.size):
            g = root @ ((gen.standard_normal(4) + 1j * gen.standard_normal(4))
                        / np.sqrt(2))
            z = np.sqrt(sigma_s2 / 2) * (gen.standard_normal(6)
                                         + 1j * gen.standard_normal(6))
            out = mmse_estimate(x, xbar @ g + z, stats, sigma_s2)
            errs[i] = np.sum(np.abs(out.g_hat - g) ** 2)
            cond = out.conditional_mse
        se = errs.std(ddof=1) / np.sqrt(errs.size)
        assert abs(errs.mean() - cond) <= 3 * se


class TestExpectedMmse:
    def test_constant_sampler_zero_stderr(self):
        cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=2,
                           coherence_time=3, mc_trials=20)
        stats = SensingChannelStats.from_block(np.eye(2), 2)
        x0 = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.5]])
        val = expected_mmse(lambda rng: Waveform(x0), stats, cfg, RngStream(0))
        direct = phi(x0 @ x0.conj().T / 3, stats, 3, 1.0).value
        assert val.stderr == 0.0
        assert abs(val.value - direct) < 1e-12

    def test_long_block_gaussian_approaches_statistical_value(self):
        cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=2,
                           coherence_time=200, mc_trials=200)
        stats = SensingChannelStats.from_block(np.eye(2), 2)
        r = CorrelationMatrix(np.eye(2), 2.0)
        val = expected_mmse(
            lambda rng: sample_gaussian_waveform(r, 200, rng),
            stats, cfg, RngStream(1))
        target = phi(r.mat, stats, 200, 1.0).value
        assert abs(val.value - target) / target <= 0.02

    def test_isometry_ensemble_is_deterministic_and_optimal(self):
        gen = np.random.default_rng(5)
        cfg = SystemConfig(n_tx=3, n_rx_comm=2, n_rx_sense=2,
                           coherence_time=4, mc_trials=50)
        stats = SensingChannelStats.from_block(random_psd(gen, 3, 0.3), 2)
        wf, eps_s, _ = sensing_waterfill(stats, cfg)
        val = expected_mmse(
            lambda rng: sensing_optimal_waveform(wf, cfg, rng),
            stats, cfg, RngStream(2))
        assert val.stderr <= 1e-12
        assert abs(val.value - eps_s.value) <= 1e-12 * eps_s.value

    def test_jensen_ordering(self):
        # Random sample correlations cannot beat the statistical correlation.
        cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=2,
                           coherence_time=4, mc_trials=400)
        stats = SensingChannelStats.from_block(np.eye(2), 2)
        r = CorrelationMatrix(np.eye(2), 2.0)
        val = expected_mmse(
            lambda rng: sample_gaussian_waveform(r, 4, rng),
            stats, cfg, RngStream(3))
        at_mean = phi(r.mat, stats, 4, 1.0).value
        assert val.value >= at_mean - 3 * val.stderr

    def test_deterministic_under_seed(self):
        cfg = SystemConfig(n_tx=2, n_rx_comm=2, n_rx_sense=2,
                           coherence_time=3, mc_trials=30)
        stats = SensingChannelStats.from_block(np.eye(2), 2)
        r = CorrelationMatrix(np.eye(2), 2.0)
        v1 = expected_mmse(lambda rng: sample_gaussian_waveform(r, 3, rng),
                           stats, cfg, RngStream(4))
        v2 = expected_mmse(lambda rng: sample_gaussian_waveform(r, 3, rng),
                           stats, cfg, RngStream(4))
        assert v1.value == v2.value
