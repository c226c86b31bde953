"""Interval evaluation: coverage, length, interval score, relative metrics.

Intervals are (n, 2) arrays of [lower, upper]; coverage uses the closed
interval. Infinite endpoints count as covered for AMC, contribute +inf to
length and interval score, and are tallied separately so aggregates stay
honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionError


@dataclass
class EvaluationReport:
    amc: float
    mean_interval_length: float
    smis: float
    mse: float
    calibration_seconds: float
    n_infinite: int = 0
    per_group_coverage: dict | None = None


def _check(intervals, y):
    intervals = np.asarray(intervals, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if intervals.ndim != 2 or intervals.shape[1] != 2 or intervals.shape[0] < 1:
        raise DimensionError("intervals must be a non-empty (n, 2) array")
    if y.shape != (intervals.shape[0],):
        raise DimensionError("targets length must match number of intervals")
    return intervals, y


def amc(intervals, y) -> float:
    """Fraction of targets inside their closed interval."""
    intervals, y = _check(intervals, y)
    inside = (intervals[:, 0] <= y) & (y <= intervals[:, 1])
    return float(inside.mean())


def mean_interval_length(intervals) -> float:
    intervals = np.asarray(intervals, dtype=np.float64)
    return float(np.mean(intervals[:, 1] - intervals[:, 0]))


def interval_score(lower, upper, y, alpha) -> np.ndarray:
    """Length plus (2/alpha)-scaled penalties for targets outside the bounds.

    Vectorized; scalar inputs give a scalar-shaped array. Infinite bounds
    yield +inf (inf - inf never arises because penalties only apply on the
    miss side).
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must be in (0, 1)")
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    length = upper - lower
    below = y < lower
    above = y > upper
    penalty = np.zeros_like(length)
    penalty = np.where(below, (2.0 / alpha) * (lower - y), penalty)
    penalty = np.where(above, (2.0 / alpha) * (y - upper), penalty)
    return length + penalty


def smis(intervals, y, alpha) -> float:
    """Mean interval score over the test set; lower is better."""
    intervals, y = _check(intervals, y)
    return float(np.mean(interval_score(intervals[:, 0], intervals[:, 1],
                                        y, alpha)))


def conditional_coverage(intervals, y, groups) -> dict:
    """Coverage restricted to each group label; empty labels are omitted."""
    intervals, y = _check(intervals, y)
    groups = np.asarray(groups)
    if groups.shape != y.shape:
        raise DimensionError("groups length must match targets")
    out = {}
    for label in np.unique(groups):
        mask = groups == label
        out[label.item() if hasattr(label, "item") else label] = amc(
            intervals[mask], y[mask])
    return out


def relative_metrics(ours: EvaluationReport, best: EvaluationReport) -> dict:
    """Comparison against the best competing method (percent / ratio terms)."""
    if ours.smis <= 0 or ours.calibration_seconds <= 0 or ours.mse <= 0:
        raise ZeroDivisionError("relative metrics need positive denominators")
    return {
        "smis_efficiency": 100.0 * best.smis / ours.smis,
        "speedup": best.calibration_seconds / ours.calibration_seconds,
        "mse_improvement": 100.0 * (best.mse / ours.mse - 1.0),
    }


def evaluate(intervals, y, centers, alpha, calibration_seconds=0.0,
             groups=None) -> EvaluationReport:
    """Bundle all absolute metrics for one method on one test set."""
    intervals, y = _check(intervals, y)
    centers = np.asarray(centers, dtype=np.float64)
    n_infinite = int(np.sum(~np.all(np.isfinite(intervals), axis=1)))
    return EvaluationReport(
        amc=amc(intervals, y),
        mean_interval_length=mean_interval_length(intervals),
        smis=smis(intervals, y, alpha),
        mse=float(np.mean((y - centers) ** 2)),
        calibration_seconds=calibration_seconds,
        n_infinite=n_infinite,
        per_group_coverage=(conditional_coverage(intervals, y, groups)
                            if groups is not None else None),
    )
