"""Command-line front end: estimate effects, run benchmarks, export reductions.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.  Defaults for numeric flags can be overridden through environment
variables prefixed MIRE_ (e.g. MIRE_SEED=7).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import bench, effects, matching, pipeline
from .data import DataError, NumericalError, load_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    pass


def _env_default(name: str, fallback, cast):
    raw = os.environ.get(f"MIRE_{name.upper()}")
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"bad MIRE_{name.upper()} value {raw!r}") from None


def _parse_schema(text: str) -> dict:
    schema = {}
    for part in text.split(","):
        if "=" not in part:
            raise ConfigError(f"bad schema fragment {part!r}; expected role=COLUMN")
        role, col = part.split("=", 1)
        role = role.strip()
        if role not in ("t", "y", "y1", "y0"):
            raise ConfigError(f"unknown schema role {role!r}")
        schema[role] = col.strip()
    if "t" not in schema or "y" not in schema:
        raise ConfigError("schema must include t=COL and y=COL")
    return schema


def _add_common_flags(sub):
    sub.add_argument("--data", required=True, help="input CSV path")
    sub.add_argument("--schema", required=True, help="t=COL,y=COL[,y1=COL,y0=COL]")
    sub.add_argument("--k", type=int, default=None, help="reduction dimension (default 2)")
    sub.add_argument("--h", type=int, default=None, help="slice count (default 5)")
    sub.add_argument("--m", type=int, default=None, help="neighbors per match (default 1)")
    sub.add_argument("--weighting", choices=("identity", "ire"), default=None)
    sub.add_argument("--ridge", type=float, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--threads", type=int, default=1, help="max parallelism bound")
    sub.add_argument("--out", required=True, help="output path prefix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mire",
                                     description="Matching on reduced covariates")
    subs = parser.add_subparsers(dest="command", required=True)

    est = subs.add_parser("estimate", help="estimate effects on a CSV dataset")
    _add_common_flags(est)
    est.add_argument("--method", choices=pipeline.METHODS, default="mire")
    est.add_argument("--att-only", action="store_true",
                     help="match treated units only (ATT mode)")

    ben = subs.add_parser("bench", help="run a seeded replication benchmark")
    ben.add_argument("--config", required=True, help="bench config JSON")
    ben.add_argument("--threads", type=int, default=1)

    red = subs.add_parser("reduce", help="export reduced covariates for plotting")
    _add_common_flags(red)
    return parser


def _options_from_args(args) -> pipeline.EstimatorOptions:
    weighting = args.weighting if args.weighting is not None else \
        _env_default("weighting", "identity", str)
    return pipeline.EstimatorOptions(
        k=args.k if args.k is not None else _env_default("k", 2, int),
        h=args.h if args.h is not None else _env_default("h", 5, int),
        weighting={"identity": "identity", "ire": "ire_full"}.get(weighting, weighting),
        num_neighbors=args.m if args.m is not None else _env_default("m", 1, int),
        ridge=args.ridge,
        seed=args.seed if args.seed is not None else _env_default("seed", 0, int),
        direction="treated" if getattr(args, "att_only", False) else "both",
    )


def cmd_estimate(args) -> int:
    schema = _parse_schema(args.schema)
    opts = _options_from_args(args)
    ds = load_csv(args.data, schema)
    run = pipeline.run_method(ds, args.method, opts)

    report = pipeline.summarize(run)
    if "pehe" in report:
        report["sqrt_pehe"] = float(np.sqrt(report["pehe"]))
    with open(f"{args.out}_effects.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    matching.export_csv(run.result, run.dataset, f"{args.out}_matches.csv")

    red = run.reduced
    if red is None:
        red = matching.reduce(run.dataset, np.eye(run.dataset.p), ridge=opts.ridge)
    balance = matching.balance_diagnostics(run.dataset, red, run.result)
    with open(f"{args.out}_balance.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["space", "column", "smd_before", "smd_after"])
        for space in ("covariates", "reduced"):
            for name, (before, after) in balance[space].items():
                writer.writerow([space, name, repr(before), repr(after)])
    print(f"{args.method}: " + ", ".join(
        f"{k}={v:.6g}" for k, v in report.items() if isinstance(v, float)))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot open config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad config JSON: {exc}") from exc
    allowed = {"dataset", "schema", "generator", "methods", "k", "h", "weighting",
               "m", "replications", "seed", "output", "n", "protocol"}
    unknown = set(config) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = config.get("output", "bench")

    if config.get("protocol") == "jobs":
        if "dataset" not in config or "schema" not in config:
            raise ConfigError("jobs protocol needs dataset and schema")
        ds = load_csv(config["dataset"], config["schema"])
        opts = pipeline.EstimatorOptions(
            k=int(config.get("k", 2)), h=int(config.get("h", 5)),
            weighting={"ire": "ire_full"}.get(config.get("weighting", "identity"),
                                              config.get("weighting", "identity")),
            num_neighbors=int(config.get("m", 1)), seed=int(config.get("seed", 0)))
        table = bench.jobs_att_eval(ds, config.get("methods", ["mire", "nnm", "psm"]),
                                    opts)
        with open(f"{out}_jobs.json", "w", encoding="utf-8") as fh:
            json.dump(table, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(f"{out}_jobs.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"criterion_att={table['criterion_att']}",
                             f"criterion_se={table['criterion_se']}"])
            writer.writerow(["method", "att", "deviation_from_criterion", "att_unit_sd"])
            for row in table["rows"]:
                writer.writerow([row["method"], repr(row["att"]),
                                 repr(row["deviation_from_criterion"]),
                                 repr(row["att_unit_sd"])])
        for row in table["rows"]:
            if not np.isfinite(row["att"]):
                raise NumericalError(f"non-finite ATT for {row['method']}")
        print(f"jobs protocol: criterion {table['criterion_att']} "
              f"(se {table['criterion_se']}), {len(table['rows'])} methods")
        return EXIT_OK

    report = bench.run_replications(config)
    bench.write_report(report, f"{out}_rows.csv", f"{out}_summary.json",
                       plot_csv_path=f"{out}_plot.csv")
    print(f"bench: {len(report.rows)} rows over {len(report.seeds)} replications "
          f"-> {out}_rows.csv, {out}_summary.json, {out}_plot.csv")
    return EXIT_OK


def cmd_reduce(args) -> int:
    schema = _parse_schema(args.schema)
    opts = _options_from_args(args)
    ds = load_csv(args.data, schema)
    run = pipeline.run_method(ds, "mire", opts)
    Z = run.reduced.Z
    path = f"{args.out}_reduced.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"z{j + 1}" for j in range(Z.shape[1])] + ["y", "t"])
        for i in range(ds.n):
            writer.writerow([repr(float(v)) for v in Z[i]]
                            + [repr(float(ds.Y[i])), str(int(ds.T[i]))])
    print(f"wrote {path} ({Z.shape[1]} reduced columns, {ds.n} rows)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"estimate": cmd_estimate, "bench": cmd_bench, "reduce": cmd_reduce}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
