"""Squared-loss gradient-boosted regression trees with leaf-index exposure.

The ensemble is the standard additive model: a base value (training-target
mean) plus a shrunken sum of regression trees, each fit to the current
residuals by exact greedy CART splitting. What sets this implementation
apart from library boosters is the strict determinism contract and the
dense depth-first leaf numbering that the partition module relies on.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .exceptions import ConfigError, DimensionError
from .rng import RngStream

SERIAL_FORMAT = "leafcp-trees v1"


class RegressionTree:
    """A single CART regression tree stored as flat node arrays.

    Nodes are ordered depth-first, left before right; ``leaf_index`` gives
    leaves a dense 0..(num_leaves-1) numbering in that same order. Routing
    rule: go left iff feature value <= threshold.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value", "leaf_index",
                 "num_leaves")

    def __init__(self, feature, threshold, left, right, value, leaf_index):
        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.value = np.asarray(value, dtype=np.float64)
        self.leaf_index = np.asarray(leaf_index, dtype=np.intp)
        self.num_leaves = int((self.feature < 0).sum())

    def apply_nodes(self, X) -> np.ndarray:
        """Node id of the leaf each row reaches."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.intp)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] >= 0
        return node

    def apply(self, X) -> np.ndarray:
        """Dense depth-first leaf index each row reaches."""
        return self.leaf_index[self.apply_nodes(X)]

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply_nodes(X)]


def _build_tree(X, y, row_indices, max_depth, min_samples_leaf):
    """Exact greedy CART minimizing squared error.

    Splits over sorted unique feature values with midpoint thresholds.
    Equal-gain ties resolve to the lowest feature index, then the smallest
    threshold, which keeps tree construction fully deterministic.
    """
    feature, threshold, left, right, value, leaf_index = [], [], [], [], [], []
    n_leaves = 0

    def add_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        leaf_index.append(-1)
        return len(feature) - 1

    def best_split(idx):
        n = idx.size
        y_node = y[idx]
        sum_y = y_node.sum()
        sum_y2 = float(y_node @ y_node)
        parent_sse = sum_y2 - sum_y * sum_y / n
        if parent_sse <= 1e-12:
            return None
        best = None  # (children_sse, feature, threshold, order, split_pos)
        for j in range(X.shape[1]):
            xs_raw = X[idx, j]
            order = np.argsort(xs_raw, kind="stable")
            xs = xs_raw[order]
            ys = y_node[order]
            cs = np.cumsum(ys)
            cs2 = np.cumsum(ys * ys)
            counts = np.arange(1, n)          # rows in the left child
            boundary_ok = xs[:-1] != xs[1:]
            valid = (boundary_ok
                     & (counts >= min_samples_leaf)
                     & (n - counts >= min_samples_leaf))
            if not valid.any():
                continue
            left_sse = cs2[:-1] - cs[:-1] ** 2 / counts
            right_sum = sum_y - cs[:-1]
            right_sse = (sum_y2 - cs2[:-1]) - right_sum ** 2 / (n - counts)
            total = left_sse + right_sse
            total[~valid] = np.inf
            pos = int(np.argmin(total))       # first argmin = smallest threshold
            if best is None or total[pos] < best[0]:
                thr = 0.5 * (xs[pos] + xs[pos + 1])
                best = (total[pos], j, thr, order, pos)
        if best is None or parent_sse - best[0] <= 1e-12:
            return None
        return best

    def grow(idx, depth):
        nonlocal n_leaves
        node = add_node()
        split = None
        if depth < max_depth and idx.size >= 2 * min_samples_leaf:
            split = best_split(idx)
        if split is None:
            value[node] = float(y[idx].mean())
            leaf_index[node] = n_leaves
            n_leaves += 1
            return node
        _, j, thr, order, pos = split
        feature[node] = j
        threshold[node] = thr
        ordered = idx[order]
        left[node] = grow(np.sort(ordered[:pos + 1]), depth + 1)
        right[node] = grow(np.sort(ordered[pos + 1:]), depth + 1)
        return node

    grow(np.sort(row_indices), 0)
    return RegressionTree(feature, threshold, left, right, value, leaf_index)


class BoostedTreeRegressor(BaseEstimator, RegressorMixin):
    """Gradient-boosted regression trees with leaf-path access.

    Parameters mirror standard stochastic gradient boosting: shrinkage,
    per-tree row subsampling without replacement, and early stopping on a
    held-out validation slice of the shuffled training rows. Fitting is a
    pure function of (data, parameters): identical inputs yield
    bit-identical ensembles.
    """

    def __init__(self, n_estimators=300, learning_rate=0.1, max_depth=3,
                 min_samples_leaf=20, subsample=0.8, validation_fraction=0.1,
                 n_iter_no_change=15, random_state=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.subsample = subsample
        self.validation_fraction = validation_fraction
        self.n_iter_no_change = n_iter_no_change
        self.random_state = random_state

    def _check_params(self):
        if self.n_estimators < 1:
            raise ConfigError("n_estimators must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ConfigError("subsample must be in (0, 1]")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must be in [0, 1)")
        if self.n_iter_no_change < 0:
            raise ConfigError("n_iter_no_change must be >= 0")

    def _validate_X(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2:
            raise DimensionError("X must be a 2-D array")
        if hasattr(self, "n_features_in_") and X.shape[1] != self.n_features_in_:
            raise DimensionError(
                f"X has {X.shape[1]} features, model expects {self.n_features_in_}")
        if not np.all(np.isfinite(X)):
            raise DimensionError("X contains non-finite values")
        return X

    def fit(self, X, y):
        self._check_params()
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise DimensionError("X must be (n, p) and y length n")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ConfigError("training data contains non-finite values")
        n = X.shape[0]
        if n < 2 * self.min_samples_leaf:
            raise ConfigError(
                f"need at least {2 * self.min_samples_leaf} rows, got {n}")
        self.n_features_in_ = X.shape[1]

        stream = RngStream(self.random_state).derive("gbm")
        use_early_stop = self.n_iter_no_change > 0 and self.validation_fraction > 0
        if use_early_stop:
            order = stream.derive("validation-shuffle").generator().permutation(n)
            n_val = math.floor(self.validation_fraction * n)
            n_val = min(n_val, n - 2 * self.min_samples_leaf)
            fit_rows = order[:n - n_val]
            val_rows = order[n - n_val:]
            use_early_stop = n_val > 0
        else:
            fit_rows = np.arange(n)
            val_rows = np.empty(0, dtype=np.intp)

        X_fit, y_fit = X[fit_rows], y[fit_rows]
        X_val, y_val = X[val_rows], y[val_rows]
        n_fit = X_fit.shape[0]

        self.base_value_ = float(y_fit.mean())
        self.trees_ = []
        self.train_mse_path_ = []
        self.validation_mse_path_ = []

        if np.ptp(y_fit) == 0.0:
            # Constant target: nothing for any tree to fit.
            return self

        pred_fit = np.full(n_fit, self.base_value_)
        pred_val = np.full(X_val.shape[0], self.base_value_)
        n_sub = max(1, int(self.subsample * n_fit))
        best_val = np.inf
        stall = 0

        for t in range(1, self.n_estimators + 1):
            if n_sub < n_fit:
                gen = stream.derive(f"tree-subsample:{t}").generator()
                rows = np.sort(gen.permutation(n_fit)[:n_sub])
            else:
                rows = np.arange(n_fit)
            residuals = y_fit - pred_fit
            tree = _build_tree(X_fit, residuals, rows,
                               self.max_depth, self.min_samples_leaf)
            self.trees_.append(tree)
            pred_fit += self.learning_rate * tree.predict(X_fit)
            self.train_mse_path_.append(float(np.mean((y_fit - pred_fit) ** 2)))
            if use_early_stop:
                pred_val += self.learning_rate * tree.predict(X_val)
                val_mse = float(np.mean((y_val - pred_val) ** 2))
                self.validation_mse_path_.append(val_mse)
                if val_mse < best_val - 1e-12:
                    best_val = val_mse
                    stall = 0
                else:
                    stall += 1
                    if stall >= self.n_iter_no_change:
                        break
        return self

    @property
    def n_trees_(self) -> int:
        return len(self.trees_)

    def predict(self, X) -> np.ndarray:
        X = self._validate_X(X)
        out = np.full(X.shape[0], self.base_value_)
        for tree in self.trees_:
            out += self.learning_rate * tree.predict(X)
        return out

    def apply(self, X) -> np.ndarray:
        """Leaf paths: (n, n_trees_) array of dense depth-first leaf indices."""
        X = self._validate_X(X)
        if not self.trees_:
            return np.empty((X.shape[0], 0), dtype=np.intp)
        return np.column_stack([tree.apply(X) for tree in self.trees_])

    def leaf_path(self, x) -> np.ndarray:
        """Leaf path of a single feature vector, length n_trees_."""
        return self.apply(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]

    def tree_contribution(self, t, X) -> np.ndarray:
        """Raw leaf value of tree t (1-based) at X, without shrinkage."""
        if not 1 <= t <= len(self.trees_):
            raise IndexError(f"tree index {t} outside 1..{len(self.trees_)}")
        X = self._validate_X(X)
        return self.trees_[t - 1].predict(X)

    # -- plain-text serialization (golden-file friendly) --------------------

    def to_text(self) -> str:
        lines = [SERIAL_FORMAT,
                 f"base_value {self.base_value_!r} "
                 f"learning_rate {self.learning_rate!r} "
                 f"n_features {self.n_features_in_}"]
        for ti, tree in enumerate(self.trees_):
            lines.append(f"tree {ti} nodes {tree.feature.size}")
            for ni in range(tree.feature.size):
                if tree.feature[ni] >= 0:
                    lines.append(
                        f"node {ni} split feature {tree.feature[ni]} "
                        f"threshold {float(tree.threshold[ni])!r} "
                        f"left {tree.left[ni]} right {tree.right[ni]}")
                else:
                    lines.append(
                        f"node {ni} leaf index {tree.leaf_index[ni]} "
                        f"value {float(tree.value[ni])!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BoostedTreeRegressor":
        lines = text.strip().splitlines()
        if not lines or lines[0] != SERIAL_FORMAT:
            raise ConfigError(f"unrecognized model format header: {lines[:1]}")
        header = lines[1].split()
        model = cls(learning_rate=float(header[3]))
        model.base_value_ = float(header[1])
        model.n_features_in_ = int(header[5])
        model.trees_ = []
        i = 2
        while i < len(lines):
            parts = lines[i].split()
            if parts[0] != "tree":
                raise ConfigError(f"expected tree header at line {i + 1}")
            n_nodes = int(parts[3])
            feature = [-1] * n_nodes
            threshold = [0.0] * n_nodes
            left = [-1] * n_nodes
            right = [-1] * n_nodes
            value = [0.0] * n_nodes
            leaf_index = [-1] * n_nodes
            for k in range(n_nodes):
                p = lines[i + 1 + k].split()
                ni = int(p[1])
                if p[2] == "split":
                    feature[ni] = int(p[4])
                    threshold[ni] = float(p[6])
                    left[ni] = int(p[8])
                    right[ni] = int(p[10])
                else:
                    leaf_index[ni] = int(p[4])
                    value[ni] = float(p[6])
            model.trees_.append(RegressionTree(feature, threshold, left, right,
                                               value, leaf_index))
            i += 1 + n_nodes
        return model
