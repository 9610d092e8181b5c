"""Command-line front end: ``simulate``, ``sweep`` and ``spot-table``."""

from __future__ import annotations

import argparse
import csv
import datetime
import os
import sys

import numpy as np

from . import __version__, artifacts
from .config import ConfigError, build_experiment, echo, load
from .harness import aggregate, run_sweep, run_trial
from .optics import BeamSpec, peak_intensity_at, spot_radius_at
from .thermal import NumericalBlowup

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _manifest(config_path, out_dir, seed, kind: str, files: list[str]) -> dict:
    return {
        "tool": "thermolase",
        "version": __version__,
        "command": kind,
        "config_path": os.path.abspath(config_path),
        "output_dir": os.path.abspath(out_dir),
        "seed": seed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "schema_version": artifacts.SCHEMA_VERSION,
        "series_columns": list(artifacts.SERIES_HEADER),
        "aggregate_columns": list(artifacts.AGGREGATE_HEADER),
        "files": files,
    }


def cmd_simulate(args) -> int:
    loaded = load(args.config)
    values = {k: dict(v) for k, v in loaded.values.items()}
    if args.seed is not None:
        values["run"]["seed"] = args.seed
    values["run"]["trial_count"] = 1
    config = build_experiment(values)

    os.makedirs(args.out, exist_ok=True)
    result = run_trial(config)
    artifacts.write_trial(result, echo(values), args.out)
    artifacts.write_json(
        _manifest(args.config, args.out, config.seed, "simulate", ["series.csv", "summary.json"]),
        os.path.join(args.out, "manifest.json"),
    )
    print(f"{config.label}: rmse={result.rmse:.4f} K hold_rmse={result.hold_rmse:.4f} K -> {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    loaded = load(args.config)
    conditions = loaded.conditions()
    configs = [build_experiment(values) for _, values in conditions]

    os.makedirs(args.out, exist_ok=True)
    results = run_sweep(configs)
    files = []
    k = 0
    for (name, values), config in zip(conditions, configs):
        for i in range(config.trial_count):
            res = results[k]
            k += 1
            trial_values = {s: dict(v) for s, v in values.items()}
            trial_values["run"]["seed"] = res.seed
            trial_values["run"]["trial_count"] = 1
            rel = os.path.join(name, f"trial_{i:02d}")
            artifacts.write_trial(res, echo(trial_values), os.path.join(args.out, rel))
            files += [os.path.join(rel, "series.csv"), os.path.join(rel, "summary.json")]

    rows = aggregate(results)
    artifacts.write_aggregate_csv(rows, os.path.join(args.out, "aggregate.csv"))
    files.append("aggregate.csv")
    for row in rows:
        print(f"{row.condition}: n={row.n} mean_rmse={row.mean_rmse:.4f} K std_rmse={row.std_rmse:.4f} K")
    artifacts.write_json(
        _manifest(args.config, args.out, configs[0].seed, "sweep", files),
        os.path.join(args.out, "manifest.json"),
    )
    return EXIT_OK


def cmd_spot_table(args) -> int:
    try:
        beam = BeamSpec(args.wavelength_um * 1e-6, args.waist_mm * 1e-3, args.power_w)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not args.step_mm > 0:
        raise ConfigError("--step-mm must be positive")
    if args.max_df_mm < 0:
        raise ConfigError("--max-df-mm must be nonnegative")
    n = int(np.floor(args.max_df_mm / args.step_mm + 1e-9)) + 1
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("d_f_mm", "spot_radius_mm", "peak_intensity_Wcm2"))
    for i in range(n):
        d_mm = i * args.step_mm
        d = d_mm * 1e-3
        w.writerow((f"{d_mm:.6g}", f"{spot_radius_at(beam, d) * 1e3:.6g}", f"{peak_intensity_at(beam, d) / 1e4:.6g}"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermolase", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one closed-loop trial")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run every condition x repetition of a sweep config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spot-table", help="print spot radius and peak intensity vs focal distance")
    p.add_argument("--wavelength-um", type=float, required=True)
    p.add_argument("--waist-mm", type=float, required=True)
    p.add_argument("--power-w", type=float, required=True)
    p.add_argument("--max-df-mm", type=float, required=True)
    p.add_argument("--step-mm", type=float, required=True)
    p.set_defaults(func=cmd_spot_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowup as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
