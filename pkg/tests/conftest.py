"""Shared fixtures: one full simulation study reused by several tests."""

import csv
import time
from pathlib import Path

import pytest

PKG_ROOT = Path(__file__).resolve().parent.parent
DEMO_CSV = PKG_ROOT / "data" / "demo.csv"

# The simulation study behind the slow end-to-end tests: setting 1 at
# n=3000, alpha=0.1, 50 replications, with the merge floor (100) set below
# the partition floor (200) so regions that end up in [100, 200) survive
# merging and the local method actually differs from the global baseline.
STUDY_ARGS = ["--command", "simulate", "--dgp", "heteroscedastic_1",
              "--n", "3000", "--alpha", "0.1", "--reps", "50", "--seed", "0",
              "--m-part", "200", "--m-merge", "100"]


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


@pytest.fixture(scope="session")
def study(tmp_path_factory):
    """Run the full 50-replication study once; returns (rows, seconds)."""
    from leafcp.cli import main

    out = tmp_path_factory.mktemp("study")
    start = time.perf_counter()
    code = main(STUDY_ARGS + ["--out", str(out)])
    elapsed = time.perf_counter() - start
    assert code == 0
    return read_rows(out / "runs.csv"), elapsed


def method_values(rows, method, column):
    return [float(row[column]) for row in rows if row["method"] == method]
