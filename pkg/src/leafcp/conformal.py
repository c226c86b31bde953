"""Split-conformal calibration: global baseline and region-local variant.

Both variants use absolute residuals |y - g(x)| as nonconformity scores and
the finite-sample order-statistic quantile: the r-th smallest score with
r = ceil((m + 1) * (1 - alpha)), returning +inf when r exceeds the number
of scores. Interpolated quantiles would void the coverage guarantee, so
they are deliberately not offered.

Intervals are symmetric around the point prediction and represented as
(n, 2) arrays of [lower, upper]; endpoints may be infinite.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import ConfigError, EmptyInputError
from .partition import (DEFAULT_MIN_REGION_SIZE, build_partition,
                        compute_tree_weights, merge_partition)


def conformal_quantile(scores, alpha) -> float:
    """Order statistic S_(r) with r = ceil((m+1)(1-alpha)); +inf if r > m."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise EmptyInputError("empty score vector")
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must be in (0, 1)")
    m = scores.size
    r = math.ceil((m + 1) * (1.0 - alpha))
    if r > m:
        return np.inf
    return float(np.partition(scores, r - 1)[r - 1])


def calibrate_global(model, X_cal, y_cal, alpha) -> float:
    """Global half-width: conformal quantile of all calibration residuals."""
    scores = np.abs(np.asarray(y_cal, dtype=np.float64) - model.predict(X_cal))
    return conformal_quantile(scores, alpha)


def intervals_from_halfwidths(centers, halfwidths) -> np.ndarray:
    centers = np.asarray(centers, dtype=np.float64)
    halfwidths = np.asarray(halfwidths, dtype=np.float64)
    return np.column_stack([centers - halfwidths, centers + halfwidths])


class GlobalConformalRegressor(BaseEstimator):
    """Split-conformal intervals with one global residual quantile (ICP)."""

    def __init__(self, model=None, alpha=0.1):
        self.model = model
        self.alpha = alpha

    def fit(self, X, y):
        """Calibrate on held-out data; the base model must already be fit."""
        self.quantile_ = calibrate_global(self.model, X, y, self.alpha)
        return self

    def predict(self, X):
        return self.model.predict(X)

    def predict_interval(self, X) -> np.ndarray:
        centers = self.model.predict(X)
        return intervals_from_halfwidths(centers, self.quantile_)


class LocalConformalRegressor(BaseEstimator):
    """Locally calibrated intervals from the ensemble's own leaf paths.

    fit() extracts calibration leaf paths, builds the adaptive-depth
    partition, merges undersized regions under the weighted Hamming
    distance, and computes one conformal quantile per surviving region at
    level (1 - alpha)(1 + 1/m_region). Prediction routes each point through
    the partition trie to pick its local half-width. Regions whose quantile
    overflows to +inf are reported in ``infinite_region_ids_``, never
    silently widened.
    """

    def __init__(self, model=None, alpha=0.1,
                 n_part=DEFAULT_MIN_REGION_SIZE,
                 n_merge=DEFAULT_MIN_REGION_SIZE,
                 weight_scheme="variance", rho=None):
        self.model = model
        self.alpha = alpha
        self.n_part = n_part
        self.n_merge = n_merge
        self.weight_scheme = weight_scheme
        self.rho = rho

    def fit(self, X, y):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0, 1)")
        y = np.asarray(y, dtype=np.float64)
        paths = self.model.apply(X)
        scores = np.abs(y - self.model.predict(X))
        pre = build_partition(paths, self.n_part)
        weights = compute_tree_weights(self.model, X, self.weight_scheme,
                                       self.rho)
        self.partition_ = merge_partition(pre, self.n_merge, weights)
        self.region_quantiles_ = np.array([
            conformal_quantile(scores[region.member_indices], self.alpha)
            for region in self.partition_.regions])
        self.infinite_region_ids_ = [
            i for i, q in enumerate(self.region_quantiles_) if np.isinf(q)]
        self.global_quantile_ = conformal_quantile(scores, self.alpha)
        return self

    def region_of(self, X) -> np.ndarray:
        """Final region id of each row."""
        return self.partition_.locate_many(self.model.apply(X))

    def predict(self, X):
        return self.model.predict(X)

    def predict_interval(self, X) -> np.ndarray:
        centers = self.model.predict(X)
        halfwidths = self.region_quantiles_[self.region_of(X)]
        return intervals_from_halfwidths(centers, halfwidths)
