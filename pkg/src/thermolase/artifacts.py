"""CSV and JSON artifacts written by the command-line tools."""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .harness import ConditionSummary, TrialResult

SCHEMA_VERSION = "1"
SERIES_HEADER = ("t", "r", "T_peak", "f", "I_cmd_Wcm2", "I_applied_Wcm2", "d_f_mm")
AGGREGATE_HEADER = ("condition", "mean_rmse", "std_rmse")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_series_csv(result: TrialResult, path) -> None:
    cols = (
        result.t,
        result.r,
        result.T_peak,
        result.f,
        result.I_cmd / 1e4,
        result.I_applied / 1e4,
        result.d_f * 1e3,
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])


def read_series_csv(path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}


def summary_dict(result: TrialResult, config_echo: dict) -> dict:
    return {
        "label": result.label,
        "seed": result.seed,
        "rmse": result.rmse,
        "ramp_rmse": result.ramp_rmse,
        "hold_rmse": result.hold_rmse,
        "hold_mean_error": result.hold_mean_error,
        "n_samples": int(result.t.size),
        "final_coefficients": [float(a) for a in result.coefficients[-1]],
        "config": config_echo,
    }


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def write_aggregate_csv(rows: list[ConditionSummary], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for row in rows:
            w.writerow([row.condition, _fmt(row.mean_rmse), _fmt(row.std_rmse)])


def write_trial(result: TrialResult, config_echo: dict, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    write_series_csv(result, os.path.join(directory, "series.csv"))
    write_json(summary_dict(result, config_echo), os.path.join(directory, "summary.json"))
