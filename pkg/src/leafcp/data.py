"""Dataset container, CSV ingestion, and train/calibration/test splitting."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, ParseError, SchemaError
from .rng import RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    """Immutable (features, targets) pair.

    features is an (n, p) float array, targets a length-n float vector.
    Rows with NaN/inf never survive construction.
    """

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise ConfigError("features must be a non-empty 2-D array")
        if targets.shape != (features.shape[0],):
            raise ConfigError(
                f"targets length {targets.shape} does not match "
                f"{features.shape[0]} feature rows")
        if not np.all(np.isfinite(features)) or not np.all(np.isfinite(targets)):
            raise ConfigError("non-finite values in dataset")
        features.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[indices], self.targets[indices],
                       self.feature_names)


@dataclass(frozen=True)
class SplitSpec:
    """Fractions and seed for the three-way split protocol."""

    train_frac: float = 0.4
    cal_frac: float = 0.4
    test_frac: float = 0.2
    native_cal_transfer: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in ("train_frac", "cal_frac", "test_frac"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name}={v} must be in (0, 1)")
        total = self.train_frac + self.cal_frac + self.test_frac
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(f"split fractions sum to {total}, expected 1")
        if not 0.0 <= self.native_cal_transfer < 1.0:
            raise ConfigError("native_cal_transfer must be in [0, 1)")


@dataclass(frozen=True)
class DataSplit:
    train: Dataset
    cal: Dataset
    test: Dataset
    train_indices: np.ndarray = field(repr=False, default=None)
    cal_indices: np.ndarray = field(repr=False, default=None)
    test_indices: np.ndarray = field(repr=False, default=None)


def load_csv(path, target_column=None) -> Dataset:
    """Read a numeric CSV (header required) into a Dataset.

    target_column defaults to the last column. Rows containing NaN or
    infinite values are dropped with a logged count; a cell that does not
    parse as a number at all raises ParseError with its location.
    """
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row")
        header = [name.strip() for name in header]
        if target_column is None:
            target_column = header[-1]
        if target_column not in header:
            raise SchemaError(
                f"{path}: target column {target_column!r} not in header {header}")
        target_idx = header.index(target_column)

        rows = []
        for row_number, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {row_number} has {len(row)} cells, "
                    f"expected {len(header)}", row=row_number)
            parsed = []
            for col, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell {cell!r} at row "
                        f"{row_number}, column {header[col]!r}",
                        row=row_number, column=header[col])
            rows.append(parsed)

    if not rows:
        raise SchemaError(f"{path}: no data rows")
    matrix = np.asarray(rows, dtype=np.float64)
    finite = np.all(np.isfinite(matrix), axis=1)
    n_dropped = int((~finite).sum())
    if n_dropped:
        logger.warning("%s: dropped %d rows with NaN/inf values", path, n_dropped)
        matrix = matrix[finite]
    if matrix.shape[0] == 0:
        raise SchemaError(f"{path}: all rows contained NaN/inf values")

    feature_cols = [i for i in range(len(header)) if i != target_idx]
    feature_names = tuple(header[i] for i in feature_cols)
    return Dataset(matrix[:, feature_cols], matrix[:, target_idx], feature_names)


def split(dataset: Dataset, spec: SplitSpec, native: bool = False) -> DataSplit:
    """Shuffle rows and partition into train/cal/test by the spec fractions.

    Sizes: test = floor(n * test_frac), cal = floor(n * cal_frac), remainder
    to train. When ``native`` is true, the first
    floor(native_cal_transfer * |cal|) calibration rows (in post-shuffle
    order) are moved into the training set. Deterministic for a fixed seed.
    """
    n = dataset.n
    if n < 10:
        raise ConfigError(f"need at least 10 rows to split, got {n}")
    gen = RngStream(spec.seed).derive("split").generator()
    order = gen.permutation(n)

    n_test = math.floor(n * spec.test_frac)
    n_cal = math.floor(n * spec.cal_frac)
    n_train = n - n_test - n_cal

    train_idx = order[:n_train]
    cal_idx = order[n_train:n_train + n_cal]
    test_idx = order[n_train + n_cal:]

    if native:
        n_transfer = math.floor(spec.native_cal_transfer * n_cal)
        train_idx = np.concatenate([train_idx, cal_idx[:n_transfer]])
        cal_idx = cal_idx[n_transfer:]

    return DataSplit(
        train=dataset.subset(train_idx),
        cal=dataset.subset(cal_idx),
        test=dataset.subset(test_idx),
        train_indices=train_idx,
        cal_indices=cal_idx,
        test_indices=test_idx,
    )
