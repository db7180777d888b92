"""Delimited outputs: per-acquisition estimates, sweep tables, regression blocks."""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .estimator import EstimateResult, EstimateStats

ESTIMATE_COLUMNS = ("run_id", "esr_entered_mohm", "esr_est_mohm", "r_load_ohm", "c_uf", "l_uh")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def estimate_row(run_id, result: EstimateResult, esr_entered: float | None = None) -> list[str]:
    return [
        str(run_id),
        _fmt(None if esr_entered is None else esr_entered * 1e3),
        _fmt(result.esr_est * 1e3),
        _fmt(result.r_load_est),
        _fmt(result.c_est * 1e6),
        _fmt(result.l_est * 1e6),
    ]


def stats_footer(stats: EstimateStats, label: str = "") -> list[str]:
    """Comment lines with mean and standard deviation in table units."""
    prefix = f"# stats {label} " if label else "# stats "
    parts = [f"n={stats.n_acquisitions}"]
    for key, name, scale in (("esr_est", "esr_est_mohm", 1e3), ("r_load_est", "r_load_ohm", 1.0),
                             ("c_est", "c_uf", 1e6), ("l_est", "l_uh", 1e6)):
        std = math.sqrt(stats.variance[key]) if stats.variance[key] == stats.variance[key] else float("nan")
        parts.append(f"{name}_mean={stats.mean[key] * scale!r}")
        parts.append(f"{name}_std={std * scale!r}")
    return [prefix + " ".join(parts)]


def write_estimates(fh, rows, footers=()) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(ESTIMATE_COLUMNS)
    for row in rows:
        writer.writerow(row)
    for line in footers:
        fh.write(line + "\n")


def write_table(fh, rows: list[dict]) -> None:
    if not rows:
        return
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        out = []
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                try:
                    parsed[k] = float(v) if v != "" else float("nan")
                except ValueError:
                    parsed[k] = v
            out.append(parsed)
        return out


def write_regressions(fh, blocks: list[dict]) -> None:
    json.dump(blocks, fh, indent=2, default=_json_default)
    fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
