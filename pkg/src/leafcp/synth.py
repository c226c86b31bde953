"""Two synthetic heteroscedastic regression mechanisms with known oracles.

Setting ``heteroscedastic_1``: X ~ U[-2, 2], mean 3*sin(x), piecewise noise
scale with abrupt changes (including a quadratic band on the right edge).
Setting ``gap_support_2``: X uniform on [-2, -0.5) u (0.8, 2] with
length-proportional branch weights, regime-dependent mean and scale, and no
support in the central gap.

Because the generating process is known, the exact (1 - alpha) conditional
interval mu(x) +/- z * sigma(x) is available as an oracle for any point.
"""

from __future__ import annotations

import math

import numpy as np

from .data import Dataset
from .exceptions import ConfigError, SupportError
from .rng import RngStream

HETEROSCEDASTIC_1 = "heteroscedastic_1"
GAP_SUPPORT_2 = "gap_support_2"
SETTINGS = (HETEROSCEDASTIC_1, GAP_SUPPORT_2)

_GAP_LO, _GAP_HI = -0.5, 0.8
_LEFT_LEN = _GAP_LO - (-2.0)   # 1.5
_RIGHT_LEN = 2.0 - _GAP_HI     # 1.2


def _check_setting(setting):
    if setting not in SETTINGS:
        raise ConfigError(f"unknown setting {setting!r}; choose from {SETTINGS}")


def _check_support(setting, x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < -2.0) or np.any(x > 2.0):
        raise SupportError("x outside [-2, 2]")
    if setting == GAP_SUPPORT_2 and np.any((x >= _GAP_LO) & (x <= _GAP_HI)):
        raise SupportError(f"x in the unsupported gap [{_GAP_LO}, {_GAP_HI}]")
    return x


def mean_fn(setting, x):
    """Conditional mean mu(x); vectorized."""
    _check_setting(setting)
    x = _check_support(setting, x)
    if setting == HETEROSCEDASTIC_1:
        return 3.0 * np.sin(x)
    return np.where(x < _GAP_LO, -2.0 * x - 1.0, 2.0 * np.sin(3.0 * x))


def sigma_fn(setting, x):
    """Conditional noise scale sigma(x); piecewise, half-open boundaries."""
    _check_setting(setting)
    x = _check_support(setting, x)
    if setting == HETEROSCEDASTIC_1:
        return np.select([x < -0.8, x < 0.1, x < 1.4],
                         [np.full_like(x, 0.8), np.full_like(x, 2.0),
                          np.full_like(x, 1.0)],
                         default=x ** 2)
    return np.where(x < _GAP_LO, 0.3, 0.2 + 0.5 * x ** 2)


def segment_label(setting, x):
    """Integer segment per point: sigma breakpoints (setting 1, labels 1-4)
    or support branch (setting 2, labels 1-2)."""
    _check_setting(setting)
    x = _check_support(setting, x)
    if setting == HETEROSCEDASTIC_1:
        return (1 + (x >= -0.8).astype(int) + (x >= 0.1).astype(int)
                + (x >= 1.4).astype(int))
    return np.where(x < _GAP_LO, 1, 2)


def normal_quantile(p: float) -> float:
    """Standard-normal quantile via Acklam's rational approximation plus one
    Halley refinement step (absolute error well below 1e-9)."""
    if not 0.0 < p < 1.0:
        raise ConfigError("p must be in (0, 1)")
    a = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
    b = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)
    p_low, p_high = 0.02425, 1 - 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
             / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    elif p <= p_high:
        q = p - 0.5
        r = q * q
        x = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5])
             * q
             / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
              / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    # Halley refinement against the exact CDF (erfc-based).
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def _normal_draws(gen, n):
    # Inverse-CDF transform of the uniform stream: bit-reproducible given the
    # stream, unlike generator-internal normal sampling algorithms.
    u = gen.uniform(size=n)
    u = np.clip(u, 1e-15, 1 - 1e-15)
    return np.array([normal_quantile(v) for v in u])


def sample(setting, n, seed) -> Dataset:
    """Draw n points from the chosen mechanism; deterministic per seed."""
    _check_setting(setting)
    if n < 1:
        raise ConfigError("n must be >= 1")
    stream = RngStream(seed).derive(f"dgp:{setting}")
    gen_x = stream.derive("x").generator()
    gen_z = stream.derive("noise").generator()
    u = gen_x.uniform(size=n)
    if setting == HETEROSCEDASTIC_1:
        x = -2.0 + 4.0 * u
    else:
        # Uniform over the two branches with length-proportional weights:
        # stretch u over the total support length and skip the gap.
        x = -2.0 + (_LEFT_LEN + _RIGHT_LEN) * u
        x = np.where(x >= _GAP_LO, x + (_GAP_HI - _GAP_LO), x)
        x = np.clip(x, -2.0, 2.0)
    z = _normal_draws(gen_z, n)
    y = mean_fn(setting, x) + sigma_fn(setting, x) * z
    return Dataset(x.reshape(-1, 1), y, ("x",))


def oracle_interval(setting, x, alpha) -> np.ndarray:
    """Exact (1 - alpha) conditional interval mu(x) +/- z_(1-alpha/2) sigma(x).

    Returned as an (n, 2) array of [lower, upper].
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must be in (0, 1)")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    z = normal_quantile(1.0 - alpha / 2.0)
    mu = mean_fn(setting, x)
    half = z * sigma_fn(setting, x)
    return np.column_stack([mu - half, mu + half])
