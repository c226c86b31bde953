"""Decay of within-region tree-contribution second moments.

For a reference point x and depth k, points sharing x's first k leaf
indices form a fixed-depth region. The curve V(t), t > k, averages
(h_t(X_i) - h_t(x))^2 over region members; fitting log V(t) ~ log C +
t log rho by ordinary least squares estimates the geometric decay rate of
later trees' influence inside the region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, EmptyInputError, InsufficientDataError


def fixed_k_region(paths, x_path, k) -> np.ndarray:
    """Indices of rows whose first k leaf indices equal x_path's.

    This is the exact fixed-depth grouping (no tunneling); k = 0 matches
    everything.
    """
    paths = np.asarray(paths)
    x_path = np.asarray(x_path)
    if paths.ndim != 2 or x_path.shape != (paths.shape[1],):
        raise ConfigError("paths must be (m, T) and x_path length T")
    if not 0 <= k <= paths.shape[1]:
        raise ConfigError(f"k={k} outside 0..{paths.shape[1]}")
    if k == 0:
        return np.arange(paths.shape[0])
    match = np.all(paths[:, :k] == x_path[:k], axis=1)
    return np.nonzero(match)[0]


@dataclass
class DecayCurve:
    reference_x: np.ndarray
    k: int
    t_values: np.ndarray
    v_values: np.ndarray
    n_region: int


@dataclass
class DecayFit:
    C: float
    rho: float
    r_squared: float
    n_points_used: int
    n_zero_dropped: int

    @property
    def decaying(self) -> bool:
        return 0.0 < self.rho < 1.0


def decay_curve(model, X_eval, x, k) -> DecayCurve:
    """Empirical V(t) for t = k+1..T over the region members around x."""
    X_eval = np.asarray(X_eval, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    T = model.n_trees_
    if not 0 <= k < T:
        raise ConfigError(f"k={k} must be below the {T} fitted trees")
    paths = model.apply(X_eval)
    members = fixed_k_region(paths, model.leaf_path(x), k)
    if members.size == 0:
        raise EmptyInputError("no evaluation points share the reference prefix")
    X_members = X_eval[members]
    t_values = np.arange(k + 1, T + 1)
    v_values = np.array([
        float(np.mean((model.tree_contribution(t, X_members)
                       - model.tree_contribution(t, x)[0]) ** 2))
        for t in t_values])
    return DecayCurve(reference_x=x[0], k=k, t_values=t_values,
                      v_values=v_values, n_region=int(members.size))


def fit_exponential(curve: DecayCurve) -> DecayFit:
    """Log-space OLS fit V(t) ~ C * rho^t over strictly positive values."""
    positive = curve.v_values > 0.0
    n_zero = int((~positive).sum())
    t = curve.t_values[positive].astype(np.float64)
    logv = np.log(curve.v_values[positive])
    if t.size < 2:
        raise InsufficientDataError(
            f"need >= 2 positive curve values, have {t.size}")
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    if ss_tot < 1e-30:
        # Constant curve: the flat fit is exact (rho = 1, non-decaying).
        slope, intercept = 0.0, float(logv.mean())
        r_squared = 1.0
    else:
        slope, intercept = np.polyfit(t, logv, 1)
        fitted = intercept + slope * t
        ss_res = float(np.sum((logv - fitted) ** 2))
        r_squared = 1.0 - ss_res / ss_tot
    return DecayFit(C=float(np.exp(intercept)), rho=float(np.exp(slope)),
                    r_squared=r_squared, n_points_used=int(t.size),
                    n_zero_dropped=n_zero)


def curve_csv_rows(curve: DecayCurve, fit: DecayFit):
    """Plot-ready rows: (t, empirical V(t), fitted C * rho^t)."""
    for t, v in zip(curve.t_values, curve.v_values):
        yield int(t), float(v), float(fit.C * fit.rho ** t)
