import numpy as np
import pytest

from leafcp import BoostedTreeRegressor, RngStream
from leafcp.diagnostics import (DecayCurve, curve_csv_rows, decay_curve,
                                fit_exponential, fixed_k_region)
from leafcp.exceptions import (ConfigError, EmptyInputError,
                               InsufficientDataError)
from test_gbm import make_model, make_stump_tree


class TestFixedKRegion:
    def test_k_zero_matches_everything(self):
        paths = np.array([[0, 1], [1, 0], [2, 2]])
        assert np.array_equal(fixed_k_region(paths, np.array([0, 1]), 0),
                              [0, 1, 2])

    def test_full_length_requires_exact_path(self):
        paths = np.array([[0, 1], [0, 1], [0, 2]])
        assert np.array_equal(fixed_k_region(paths, np.array([0, 1]), 2),
                              [0, 1])

    def test_matches_brute_force_filter(self):
        gen = RngStream(0).derive("prefix").generator()
        paths = gen.integers(0, 3, size=(60, 5))
        x_path = gen.integers(0, 3, size=5)
        for k in range(6):
            expected = [i for i in range(60)
                        if list(paths[i, :k]) == list(x_path[:k])]
            assert np.array_equal(fixed_k_region(paths, x_path, k), expected)

    def test_validation(self):
        paths = np.array([[0, 1]])
        with pytest.raises(ConfigError):
            fixed_k_region(paths, np.array([0]), 1)
        with pytest.raises(ConfigError):
            fixed_k_region(paths, np.array([0, 1]), 3)


class TestDecayCurve:
    def test_singleton_region_is_zero(self):
        model = make_model([make_stump_tree(0.5, -1.0, 1.0)] * 4)
        x = np.array([0.0])
        curve = decay_curve(model, x.reshape(1, 1), x, 1)
        assert curve.n_region == 1
        assert np.array_equal(curve.v_values, np.zeros(3))

    def test_constant_trees_give_zero(self):
        trees = [make_stump_tree(0.5, -1.0, 1.0),
                 make_stump_tree(0.5, 2.0, 2.0),
                 make_stump_tree(0.5, 2.0, 2.0)]
        model = make_model(trees)
        X = np.array([[0.0], [0.2], [0.4]])
        curve = decay_curve(model, X, np.array([0.1]), 1)
        assert np.array_equal(curve.v_values, [0.0, 0.0])

    def test_matches_double_loop_oracle(self):
        gen = RngStream(1).derive("decay").generator()
        X = gen.uniform(-2, 2, size=(300, 2))
        y = np.sin(X[:, 0]) + gen.normal(size=300)
        model = BoostedTreeRegressor(n_estimators=8, subsample=1.0,
                                     n_iter_no_change=0, random_state=0)
        model.fit(X, y)
        x = X[0]
        k = 2
        curve = decay_curve(model, X, x, k)
        paths = model.apply(X)
        x_path = model.leaf_path(x)
        members = [i for i in range(300)
                   if list(paths[i, :k]) == list(x_path[:k])]
        for pos, t in enumerate(range(k + 1, model.n_trees_ + 1)):
            contributions = model.tree_contribution(t, X[members])
            at_x = model.tree_contribution(t, x.reshape(1, -1))[0]
            expected = np.mean([(c - at_x) ** 2 for c in contributions])
            assert abs(curve.v_values[pos] - expected) <= 1e-12

    def test_k_bounds(self):
        model = make_model([make_stump_tree(0.5, -1.0, 1.0)] * 2)
        with pytest.raises(ConfigError):
            decay_curve(model, np.zeros((3, 1)), np.array([0.0]), 2)

    def test_empty_region_rejected(self):
        model = make_model([make_stump_tree(0.5, -1.0, 1.0)] * 2)
        with pytest.raises(EmptyInputError):
            decay_curve(model, np.zeros((3, 1)), np.array([1.0]), 1)


class TestFitExponential:
    @staticmethod
    def curve(t_values, v_values):
        return DecayCurve(reference_x=np.array([0.0]), k=0,
                          t_values=np.asarray(t_values),
                          v_values=np.asarray(v_values, dtype=float),
                          n_region=1)

    def test_exact_geometric_data(self):
        t = np.arange(1, 6)
        fit = fit_exponential(self.curve(t, 4.0 * 0.5 ** t))
        assert fit.C == pytest.approx(4.0, abs=1e-9)
        assert fit.rho == pytest.approx(0.5, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-9)
        assert fit.decaying

    def test_constant_curve_flagged_non_decaying(self):
        fit = fit_exponential(self.curve(np.arange(1, 5), np.full(4, 2.0)))
        assert fit.C == pytest.approx(2.0)
        assert fit.rho == pytest.approx(1.0)
        assert not fit.decaying

    def test_zero_values_dropped(self):
        t = np.arange(1, 6)
        v = 4.0 * 0.5 ** t
        v[2] = 0.0
        fit = fit_exponential(self.curve(t, v))
        assert fit.n_zero_dropped == 1
        assert fit.n_points_used == 4
        assert fit.rho == pytest.approx(0.5, abs=1e-9)

    def test_too_few_positive_values(self):
        with pytest.raises(InsufficientDataError):
            fit_exponential(self.curve([1, 2, 3], [0.0, 0.0, 1.0]))

    def test_csv_rows_align_with_fit(self):
        t = np.arange(1, 4)
        curve = self.curve(t, 4.0 * 0.5 ** t)
        fit = fit_exponential(curve)
        rows = list(curve_csv_rows(curve, fit))
        assert [row[0] for row in rows] == [1, 2, 3]
        for t_i, v, fitted in rows:
            assert fitted == pytest.approx(v, rel=1e-9)
