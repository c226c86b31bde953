"""Locally calibrated conformal prediction intervals for boosted trees.

The fitted ensemble's own leaf paths induce a multiscale partition of the
feature space; calibrating residual quantiles inside those regions yields
prediction intervals that adapt to local noise while keeping the standard
split-conformal coverage guarantee.
"""

from .conformal import (GlobalConformalRegressor, LocalConformalRegressor,
                        calibrate_global, conformal_quantile)
from .data import Dataset, DataSplit, SplitSpec, load_csv, split
from .gbm import BoostedTreeRegressor, RegressionTree
from .metrics import (EvaluationReport, amc, conditional_coverage,
                      interval_score, mean_interval_length, relative_metrics,
                      smis)
from .partition import (PartitionModel, Region, build_partition,
                        compute_tree_weights, merge_partition,
                        weighted_hamming)
from .rng import RngStream

__all__ = [
    "BoostedTreeRegressor", "RegressionTree",
    "Dataset", "DataSplit", "SplitSpec", "load_csv", "split",
    "GlobalConformalRegressor", "LocalConformalRegressor",
    "calibrate_global", "conformal_quantile",
    "PartitionModel", "Region", "build_partition", "compute_tree_weights",
    "merge_partition", "weighted_hamming",
    "EvaluationReport", "amc", "conditional_coverage", "interval_score",
    "mean_interval_length", "relative_metrics", "smis",
    "RngStream",
]

__version__ = "0.1.0"
