import numpy as np
import pytest
from scipy import stats

from leafcp.exceptions import ConfigError, SupportError
from leafcp.synth import (GAP_SUPPORT_2, HETEROSCEDASTIC_1, mean_fn,
                          normal_quantile, oracle_interval, sample,
                          segment_label, sigma_fn)


class TestMeanFunction:
    def test_setting1_at_zero(self):
        assert mean_fn(HETEROSCEDASTIC_1, 0.0) == 0.0

    def test_setting1_is_scaled_sine(self):
        x = np.linspace(-2, 2, 9)
        assert np.allclose(mean_fn(HETEROSCEDASTIC_1, x), 3 * np.sin(x))

    def test_setting2_left_branch(self):
        assert mean_fn(GAP_SUPPORT_2, -1.0) == 1.0

    def test_setting2_right_branch(self):
        assert mean_fn(GAP_SUPPORT_2, 1.0) == pytest.approx(2 * np.sin(3.0))

    def test_setting2_gap_rejected(self):
        with pytest.raises(SupportError):
            mean_fn(GAP_SUPPORT_2, 0.0)

    def test_outside_range_rejected(self):
        with pytest.raises(SupportError):
            mean_fn(HETEROSCEDASTIC_1, 2.5)

    def test_unknown_setting(self):
        with pytest.raises(ConfigError):
            mean_fn("nope", 0.0)


class TestSigmaFunction:
    def test_setting1_piecewise_with_half_open_boundaries(self):
        x = np.array([-2.0, -0.81, -0.8, 0.09, 0.1, 1.39, 1.4, 2.0])
        expected = [0.8, 0.8, 2.0, 2.0, 1.0, 1.0, 1.4 ** 2, 4.0]
        assert np.allclose(sigma_fn(HETEROSCEDASTIC_1, x), expected)

    def test_setting2_branches(self):
        assert sigma_fn(GAP_SUPPORT_2, -1.0) == 0.3
        assert sigma_fn(GAP_SUPPORT_2, 1.0) == pytest.approx(0.7)


class TestSegmentLabel:
    def test_setting1_labels(self):
        x = np.array([-1.0, 0.0, 1.39, 1.4])
        assert np.array_equal(segment_label(HETEROSCEDASTIC_1, x),
                              [1, 2, 3, 4])

    def test_setting2_branches(self):
        assert segment_label(GAP_SUPPORT_2, -0.6) == 1
        assert segment_label(GAP_SUPPORT_2, 0.9) == 2


class TestSample:
    def test_deterministic(self):
        a = sample(HETEROSCEDASTIC_1, 5, seed=9)
        b = sample(HETEROSCEDASTIC_1, 5, seed=9)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.targets, b.targets)

    def test_seed_matters(self):
        a = sample(HETEROSCEDASTIC_1, 5, seed=9)
        b = sample(HETEROSCEDASTIC_1, 5, seed=10)
        assert not np.array_equal(a.targets, b.targets)

    def test_setting2_avoids_the_gap(self):
        x = sample(GAP_SUPPORT_2, 10_000, seed=0).features[:, 0]
        assert not np.any((x >= -0.5) & (x <= 0.8))
        assert np.all((x >= -2.0) & (x <= 2.0))

    def test_setting1_uniform_moments(self):
        x = sample(HETEROSCEDASTIC_1, 100_000, seed=1).features[:, 0]
        assert abs(x.mean()) < 0.02
        high_noise = np.mean((x >= -0.8) & (x < 0.1))
        assert abs(high_noise - 0.225) < 0.01

    def test_setting2_branch_weights_proportional_to_length(self):
        x = sample(GAP_SUPPORT_2, 100_000, seed=2).features[:, 0]
        assert abs(np.mean(x < -0.5) - 1.5 / 2.7) < 0.01

    def test_invalid_n(self):
        with pytest.raises(ConfigError):
            sample(HETEROSCEDASTIC_1, 0, seed=0)


class TestNormalQuantile:
    def test_against_scipy(self):
        for p in np.concatenate([np.linspace(1e-6, 1 - 1e-6, 41),
                                 [0.001, 0.02425, 0.5, 0.975, 0.999]]):
            assert normal_quantile(float(p)) == pytest.approx(
                stats.norm.ppf(p), abs=1e-9)

    def test_domain(self):
        for p in (0.0, 1.0, -0.5):
            with pytest.raises(ConfigError):
                normal_quantile(p)


class TestOracleInterval:
    def test_standard_normal_band(self):
        # x = 0 in setting 1: mu = 0, sigma = 2; rescale to unit sigma.
        out = oracle_interval(HETEROSCEDASTIC_1, 0.0, 0.1)[0] / 2.0
        assert out[0] == pytest.approx(-1.6449, abs=1e-4)
        assert out[1] == pytest.approx(1.6449, abs=1e-4)

    def test_interval_shape_and_symmetry(self):
        x = np.array([-1.5, 0.5, 1.8])
        out = oracle_interval(HETEROSCEDASTIC_1, x, 0.1)
        assert out.shape == (3, 2)
        centers = out.mean(axis=1)
        assert np.allclose(centers, mean_fn(HETEROSCEDASTIC_1, x))

    def test_alpha_validation(self):
        with pytest.raises(ConfigError):
            oracle_interval(HETEROSCEDASTIC_1, 0.0, 0.0)

    def test_monte_carlo_coverage_at_fixed_x(self):
        # Large draw at a fixed point: the oracle interval must cover the
        # nominal 90% within Monte-Carlo error.
        n = 1_000_000
        data = sample(HETEROSCEDASTIC_1, n, seed=3)
        x = data.features[:, 0]
        lo, hi = oracle_interval(HETEROSCEDASTIC_1, x, 0.1).T
        covered = np.mean((lo <= data.targets) & (data.targets <= hi))
        assert abs(covered - 0.9) < 0.001
