"""Experiment driver: synthetic studies, CSV runs, diagnostics, dumps.

Every run is a pure function of (configuration, seed): replication streams
are derived from the base seed, and each output row carries the command,
seed, replication id, and a hash of the effective configuration so results
can be reproduced exactly. Timing columns can be zeroed with --no-timing
when byte-identical outputs are needed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
import time
from pathlib import Path

import numpy as np

from . import synth
from .conformal import GlobalConformalRegressor, LocalConformalRegressor
from .data import SplitSpec, load_csv, split
from .exceptions import (ConfigError, ParseError, SchemaError, SupportError)
from .gbm import BoostedTreeRegressor
from .diagnostics import curve_csv_rows, decay_curve, fit_exponential
from .metrics import evaluate
from .rng import RngStream

DEFAULTS = {
    "alpha": 0.1,
    "reps": 50,
    "seed": 0,
    "n": 3000,
    "m_part": 200,
    "m_merge": 200,
    "weights": "variance",
    "trees": 300,
    "lr": 0.1,
    "depth": 3,
    "min_leaf": 20,
    "subsample": 0.8,
    "k": 3,
    "target": None,
    "dgp": None,
    "csv": None,
    "ref_points": None,
    "out": "runs",
    "no_timing": False,
    "dump_data": False,
}

RUN_COLUMNS = ["command", "seed", "replication", "config_hash", "method",
               "amc", "il", "smis", "mse", "cal_seconds",
               "n_regions_pre", "n_regions_post", "n_merged", "n_infinite"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leafcp",
        description="Local conformal intervals from boosted-tree leaf paths.")
    parser.add_argument("--command", required=True,
                        choices=["simulate", "run-csv", "diagnose",
                                 "partition-dump"])
    parser.add_argument("--config", help="key = value file; flags override")
    parser.add_argument("--dgp", choices=list(synth.SETTINGS))
    parser.add_argument("--csv", help="input CSV path")
    parser.add_argument("--target", help="target column (default: last)")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--n", type=int, help="synthetic sample size")
    parser.add_argument("--reps", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--m-part", dest="m_part", type=int)
    parser.add_argument("--m-merge", dest="m_merge", type=int)
    parser.add_argument("--weights", help="variance or exp:RHO")
    parser.add_argument("--trees", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--depth", type=int)
    parser.add_argument("--min-leaf", dest="min_leaf", type=int)
    parser.add_argument("--subsample", type=float)
    parser.add_argument("--k", type=int, help="diagnostics region depth")
    parser.add_argument("--ref-points", dest="ref_points",
                        help="comma-separated diagnostics reference points")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--no-timing", dest="no_timing", action="store_true",
                        default=None,
                        help="write 0 in timing columns (reproducible output)")
    parser.add_argument("--dump-data", dest="dump_data", action="store_true",
                        default=None,
                        help="also write each replication's sampled dataset")
    return parser


def parse_config_file(path) -> dict:
    """Plain key = value lines; '#' starts a comment."""
    out = {}
    casts = {int: ("reps", "seed", "n", "m_part", "m_merge", "trees", "depth",
                   "min_leaf", "k"),
             float: ("alpha", "lr", "subsample")}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            for cast, keys in casts.items():
                if key in keys:
                    value = cast(value)
                    break
            else:
                if key in ("no_timing", "dump_data"):
                    value = value.lower() in ("1", "true", "yes")
            out[key] = value
    return out


def effective_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(parse_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    cfg["command"] = args.command
    if not 0.0 < cfg["alpha"] < 1.0:
        raise ConfigError("alpha must be in (0, 1)")
    if cfg["reps"] < 1:
        raise ConfigError("reps must be >= 1")
    return cfg


def config_hash(cfg) -> str:
    text = ";".join(f"{k}={cfg[k]}" for k in sorted(cfg)
                    if k not in ("out", "no_timing", "dump_data"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def parse_weight_scheme(spec):
    if spec == "variance":
        return "variance", None
    if spec.startswith("exp:"):
        try:
            rho = float(spec[4:])
        except ValueError:
            raise ConfigError(f"bad weight spec {spec!r}")
        return "exponential", rho
    raise ConfigError(f"weights must be 'variance' or 'exp:RHO', got {spec!r}")


def make_booster(cfg, seed) -> BoostedTreeRegressor:
    return BoostedTreeRegressor(
        n_estimators=cfg["trees"], learning_rate=cfg["lr"],
        max_depth=cfg["depth"], min_samples_leaf=cfg["min_leaf"],
        subsample=cfg["subsample"], random_state=seed)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _timer(cfg):
    return (lambda: 0.0) if cfg["no_timing"] else time.perf_counter


def run_replication(cfg, dataset, rep, base_stream, segments_of=None,
                    oracle_setting=None):
    """Fit one shared ensemble, calibrate both methods, evaluate on test.

    Returns a list of per-method row dicts.
    """
    rep_stream = base_stream.derive(f"rep:{rep}")
    spec = SplitSpec(seed=rep_stream.derive("split").stream_id)
    parts = split(dataset, spec, native=True)
    booster = make_booster(cfg, rep_stream.derive("fit").stream_id)
    booster.fit(parts.train.features, parts.train.targets)

    scheme, rho = parse_weight_scheme(cfg["weights"])
    clock = _timer(cfg)

    t0 = clock()
    icp = GlobalConformalRegressor(booster, cfg["alpha"]).fit(
        parts.cal.features, parts.cal.targets)
    icp_seconds = clock() - t0

    t0 = clock()
    local = LocalConformalRegressor(
        booster, cfg["alpha"], n_part=cfg["m_part"], n_merge=cfg["m_merge"],
        weight_scheme=scheme, rho=rho).fit(
        parts.cal.features, parts.cal.targets)
    local_seconds = clock() - t0

    X_test, y_test = parts.test.features, parts.test.targets
    centers = booster.predict(X_test)
    groups = segments_of(X_test) if segments_of is not None else None

    rows = []

    def row(method, report, partition=None):
        entry = {
            "command": cfg["command"], "seed": cfg["seed"], "replication": rep,
            "config_hash": config_hash(cfg), "method": method,
            "amc": report.amc, "il": report.mean_interval_length,
            "smis": report.smis, "mse": report.mse,
            "cal_seconds": report.calibration_seconds,
            "n_regions_pre": partition.pre_merge_count if partition else None,
            "n_regions_post": partition.n_regions if partition else None,
            "n_merged": partition.n_merged if partition else None,
            "n_infinite": report.n_infinite,
        }
        if report.per_group_coverage:
            for label, cov in sorted(report.per_group_coverage.items()):
                entry[f"cov_seg_{label}"] = cov
        rows.append(entry)

    row("icp", evaluate(icp.predict_interval(X_test), y_test, centers,
                        cfg["alpha"], icp_seconds, groups))
    row("local", evaluate(local.predict_interval(X_test), y_test, centers,
                            cfg["alpha"], local_seconds, groups),
        partition=local.partition_)
    if oracle_setting is not None:
        x1d = X_test[:, 0]
        oracle = synth.oracle_interval(oracle_setting, x1d, cfg["alpha"])
        row("oracle", evaluate(oracle, y_test,
                               synth.mean_fn(oracle_setting, x1d),
                               cfg["alpha"], 0.0, groups))
    return rows


def write_runs_csv(path, rows):
    seg_cols = sorted({key for row in rows for key in row
                       if key.startswith("cov_seg_")})
    columns = RUN_COLUMNS + seg_cols
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in columns])


def write_summary_csv(path, rows):
    """Per-method mean and 95% normal-approximation half-width per metric."""
    methods = sorted({row["method"] for row in rows})
    metric_cols = [col for col in RUN_COLUMNS[5:]] + sorted(
        {key for row in rows for key in row if key.startswith("cov_seg_")})
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "metric", "mean", "ci95_half", "n_reps"])
        for method in methods:
            sub = [row for row in rows if row["method"] == method]
            for metric in metric_cols:
                values = np.array([row[metric] for row in sub
                                   if row.get(metric) is not None],
                                  dtype=np.float64)
                if values.size == 0:
                    continue
                mean = float(values.mean())
                half = (1.959963984540054
                        * float(values.std(ddof=1)) / np.sqrt(values.size)
                        if values.size > 1 else 0.0)
                writer.writerow([method, metric, _fmt(mean), _fmt(half),
                                 values.size])


def dump_dataset_csv(path, dataset):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        names = list(dataset.feature_names or
                     [f"x{i}" for i in range(dataset.p)])
        writer.writerow(names + ["y"])
        for features, target in zip(dataset.features, dataset.targets):
            writer.writerow([_fmt(float(v)) for v in features]
                            + [_fmt(float(target))])


def _replication_loop(cfg, out_dir, dataset_for_rep, segments_of=None,
                      oracle_setting=None):
    base_stream = RngStream(cfg["seed"])
    rows, failures = [], 0
    for rep in range(cfg["reps"]):
        try:
            dataset = dataset_for_rep(rep, base_stream)
            if cfg["dump_data"]:
                dump_dataset_csv(out_dir / f"data_rep{rep}.csv", dataset)
            rows.extend(run_replication(cfg, dataset, rep, base_stream,
                                        segments_of, oracle_setting))
        except Exception as exc:  # noqa: BLE001 -- isolate replication failures
            failures += 1
            print(f"replication {rep} failed: {exc}", file=sys.stderr)
    if rows:
        write_runs_csv(out_dir / "runs.csv", rows)
        write_summary_csv(out_dir / "summary.csv", rows)
    return 1 if failures else 0


def cmd_simulate(cfg, out_dir) -> int:
    if cfg["dgp"] is None:
        raise ConfigError("simulate requires --dgp")
    setting = cfg["dgp"]

    def dataset_for_rep(rep, base_stream):
        seed = base_stream.derive(f"rep:{rep}").derive("sample").stream_id
        return synth.sample(setting, cfg["n"], seed)

    def segments_of(X):
        return synth.segment_label(setting, X[:, 0])

    return _replication_loop(cfg, out_dir, dataset_for_rep, segments_of,
                             oracle_setting=setting)


def cmd_run_csv(cfg, out_dir) -> int:
    if cfg["csv"] is None:
        raise ConfigError("run-csv requires --csv")
    dataset = load_csv(cfg["csv"], cfg["target"])
    return _replication_loop(cfg, out_dir, lambda rep, stream: dataset)


def cmd_diagnose(cfg, out_dir) -> int:
    if cfg["dgp"] is None:
        raise ConfigError("diagnose requires --dgp")
    setting = cfg["dgp"]
    base_stream = RngStream(cfg["seed"])
    dataset = synth.sample(setting, cfg["n"],
                           base_stream.derive("sample").stream_id)
    spec = SplitSpec(seed=base_stream.derive("split").stream_id)
    parts = split(dataset, spec, native=True)
    booster = make_booster(cfg, base_stream.derive("fit").stream_id)
    booster.fit(parts.train.features, parts.train.targets)
    if cfg["k"] >= booster.n_trees_:
        raise ConfigError(
            f"k={cfg['k']} not below the {booster.n_trees_} fitted trees")

    if cfg["ref_points"]:
        refs = [float(v) for v in cfg["ref_points"].split(",")]
    else:
        refs = list(np.quantile(parts.test.features[:, 0],
                                [0.2, 0.4, 0.6, 0.8]))
    # Support validation up front so a bad point is a config-level error.
    synth.mean_fn(setting, np.asarray(refs))

    with open(out_dir / "decay_summary.csv", "w", encoding="utf-8",
              newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["reference_x", "k", "n_region", "C", "rho",
                         "r_squared", "n_points_used", "n_zero_dropped"])
        for i, ref in enumerate(refs):
            curve = decay_curve(booster, parts.test.features,
                                np.array([ref]), cfg["k"])
            fit = fit_exponential(curve)
            writer.writerow([_fmt(ref), cfg["k"], curve.n_region, _fmt(fit.C),
                             _fmt(fit.rho), _fmt(fit.r_squared),
                             fit.n_points_used, fit.n_zero_dropped])
            with open(out_dir / f"decay_{i}.csv", "w", encoding="utf-8",
                      newline="") as curve_handle:
                curve_writer = csv.writer(curve_handle)
                curve_writer.writerow(["t", "v", "fitted"])
                for t, v, fitted in curve_csv_rows(curve, fit):
                    curve_writer.writerow([t, _fmt(v), _fmt(fitted)])
    return 0


def cmd_partition_dump(cfg, out_dir) -> int:
    base_stream = RngStream(cfg["seed"])
    if cfg["csv"] is not None:
        dataset = load_csv(cfg["csv"], cfg["target"])
    elif cfg["dgp"] is not None:
        dataset = synth.sample(cfg["dgp"], cfg["n"],
                               base_stream.derive("sample").stream_id)
    else:
        raise ConfigError("partition-dump requires --dgp or --csv")
    spec = SplitSpec(seed=base_stream.derive("split").stream_id)
    parts = split(dataset, spec, native=True)
    booster = make_booster(cfg, base_stream.derive("fit").stream_id)
    booster.fit(parts.train.features, parts.train.targets)
    scheme, rho = parse_weight_scheme(cfg["weights"])
    local = LocalConformalRegressor(
        booster, cfg["alpha"], n_part=cfg["m_part"], n_merge=cfg["m_merge"],
        weight_scheme=scheme, rho=rho).fit(
        parts.cal.features, parts.cal.targets)
    (out_dir / "partition.txt").write_text(local.partition_.dump(),
                                           encoding="utf-8")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = effective_config(args)
        out_dir = Path(cfg["out"])
        out_dir.mkdir(parents=True, exist_ok=True)
        handler = {"simulate": cmd_simulate,
                   "run-csv": cmd_run_csv,
                   "diagnose": cmd_diagnose,
                   "partition-dump": cmd_partition_dump}[cfg["command"]]
        return handler(cfg, out_dir)
    except (ConfigError, SchemaError, ParseError, SupportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
