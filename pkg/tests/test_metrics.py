import numpy as np
import pytest

from stripesim.metrics import (
    empirical_cdf, fronthaul_load, instantaneous_sinr, percentile,
    sinr_per_ue, spectral_efficiency,
)


class TestInstantaneousSinr:
    def test_single_user_unit_values(self):
        assert instantaneous_sinr(
            np.array([1.0 + 0j]), np.array([0.0]), np.array([1.0]), 1.0, 0
        ) == pytest.approx(1.0)

    def test_zero_numerator(self):
        assert instantaneous_sinr(
            np.array([0.0 + 0j, 1.0]), np.array([0.0, 0.0]),
            np.array([1.0, 1.0]), 0.5, 0
        ) == 0.0

    def test_hand_evaluated_two_user_case(self):
        # p=(1,1), ghat=(1, 0.5), psi=(0.1, 0.2), sigma2=0.5
        # -> 1 / (0.25 + 0.3 + 0.5) = 1/1.05
        val = instantaneous_sinr(
            np.array([1.0 + 0j, 0.5]), np.array([0.1, 0.2]),
            np.array([1.0, 1.0]), 0.5, 0
        )
        assert val == pytest.approx(1.0 / 1.05, rel=1e-12)
        assert val == pytest.approx(0.9524, abs=5e-5)

    def test_rejects_negative_variance_and_bad_noise(self):
        with pytest.raises(ValueError):
            instantaneous_sinr(np.array([1.0 + 0j]), np.array([-0.1]),
                               np.array([1.0]), 1.0, 0)
        with pytest.raises(ValueError):
            instantaneous_sinr(np.array([1.0 + 0j]), np.array([0.1]),
                               np.array([1.0]), 0.0, 0)

    def test_scale_invariance(self, rng):
        # SINR is degree-0: scaling powers by c and the channel-gain
        # quantities (|ghat|^2, psi) by d leaves it fixed, provided sigma2
        # carries the product c*d (every denominator term is such a product)
        K = 4
        ghat = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        psi = np.abs(rng.standard_normal(K))
        powers = rng.uniform(0.5, 2.0, K)
        sigma2 = 0.7
        a = instantaneous_sinr(ghat, psi, powers, sigma2, 2)
        c, d = 13.7, 0.31
        # power-unit change alone
        assert instantaneous_sinr(ghat, psi, c * powers, c * sigma2, 2) \
            == pytest.approx(a, rel=1e-12)
        # gain-unit change alone
        assert instantaneous_sinr(np.sqrt(d) * ghat, d * psi, powers,
                                  d * sigma2, 2) == pytest.approx(a, rel=1e-12)
        # both together
        assert instantaneous_sinr(np.sqrt(d) * ghat, d * psi, c * powers,
                                  c * d * sigma2, 2) == pytest.approx(a, rel=1e-12)

    def test_monotone_in_target_power(self, rng):
        K = 3
        ghat = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        psi = np.abs(rng.standard_normal(K))
        base = rng.uniform(0.5, 2.0, K)
        prev = -1.0
        for pk in np.linspace(0.1, 10.0, 25):
            powers = base.copy()
            powers[1] = pk
            cur = instantaneous_sinr(ghat, psi, powers, 0.4, 1)
            assert cur >= prev
            prev = cur

    def test_vectorized_matches_scalar(self, rng):
        K = 4
        ghat = rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))
        psi = np.abs(rng.standard_normal((K, K)))
        powers = rng.uniform(0.5, 2.0, K)
        vec = sinr_per_ue(ghat, psi, powers, 0.9)
        for k in range(K):
            assert vec[k] == pytest.approx(
                instantaneous_sinr(ghat[:, k], psi[:, k], powers, 0.9, k)
            )


class TestSpectralEfficiency:
    def test_zero_prelog(self):
        assert spectral_efficiency([1.0, 2.0], tau_c=20, tau_p=20) == 0.0

    def test_constant_unit_sinr(self):
        # prelog 0.9 times log2(2)
        assert spectral_efficiency([1.0] * 5, tau_c=200, tau_p=20) \
            == pytest.approx(0.9)

    def test_default_prelog_value(self):
        assert 1 - 20 / 200 == pytest.approx(0.9)

    def test_axis_semantics(self):
        samples = np.array([[1.0, 3.0], [1.0, 3.0]])
        out = spectral_efficiency(samples, tau_c=200, tau_p=20)
        assert out.shape == (2,)
        assert out[0] == pytest.approx(0.9)
        assert out[1] == pytest.approx(0.9 * 2.0)

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            spectral_efficiency([], tau_c=200, tau_p=20)


class TestFronthaul:
    def test_reference_setup_counts(self):
        l4 = fronthaul_load("lmmse_l4", 4, 24, 10, 200, 20)
        stripe = fronthaul_load("stripe_nlmmse", 4, 24, 10, 200, 20)
        assert l4.real_scalars_to_cpu_per_block == 38400      # 2*N*L*tau_c
        assert stripe.real_scalars_to_cpu_per_block == 3900   # 3K^2 + 2K(tc-tp)
        assert stripe.real_scalars_per_block_per_segment == 3900
        assert stripe.reduction_vs_l4 == pytest.approx(1 - 3900 / 38400)
        assert stripe.reduction_vs_l4 == pytest.approx(0.8984375)

    def test_single_user_count(self):
        rep = fronthaul_load("stripe_nlmmse", 4, 24, 1, 200, 20)
        assert rep.real_scalars_per_block_per_segment == 3 + 2 * (200 - 20)

    def test_minimal_l4_count(self):
        rep = fronthaul_load("lmmse_l4", 1, 1, 1, 1, 1)
        assert rep.real_scalars_to_cpu_per_block == 2

    def test_counts_are_exact_integers(self):
        rep = fronthaul_load("stripe_nlmmse", 2, 8, 7, 100, 10)
        assert rep.real_scalars_to_cpu_per_block == 3 * 49 + 2 * 7 * 90
        assert isinstance(rep.real_scalars_to_cpu_per_block, int)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            fronthaul_load("mr_l2", 4, 24, 10, 200, 20)


class TestEmpiricalCdf:
    def test_singleton(self):
        series = empirical_cdf([1.0])
        assert np.array_equal(series.values, [1.0])
        assert np.array_equal(series.probabilities, [1.0])

    def test_three_samples(self):
        series = empirical_cdf([3.0, 1.0, 2.0])
        assert np.array_equal(series.values, [1.0, 2.0, 3.0])
        assert np.allclose(series.probabilities, [1 / 3, 2 / 3, 1.0])

    def test_valid_distribution_function(self, rng):
        series = empirical_cdf(rng.standard_normal(500))
        assert np.all(np.diff(series.values) >= 0)
        assert np.all(np.diff(series.probabilities) > 0)
        assert series.probabilities[-1] == 1.0
        assert np.all((series.probabilities > 0) & (series.probabilities <= 1))

    def test_rejects_nan_and_empty(self):
        with pytest.raises(ValueError):
            empirical_cdf([1.0, np.nan])
        with pytest.raises(ValueError):
            empirical_cdf([])

    def test_median_linear_interpolation(self):
        assert percentile([1.0, 2.0, 3.0, 4.0], 50.0) == pytest.approx(2.5)
