"""Text output formats. Every file starts with the schema header line."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .experiments import ROW_FIELDS
from .graph import CONFIG_TAG

__all__ = [
    "format_float",
    "write_path_csv",
    "read_path_csv",
    "write_event_log",
    "write_nimfa_vertices",
    "write_study_rows",
    "write_aggregates",
    "write_slopes",
    "write_sidecar",
]


def format_float(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    return "%.17g" % v


def _open(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = path.open("w", newline="\n")
    fh.write(CONFIG_TAG + "\n")
    return fh


def write_path_csv(path, times, values, prefix):
    """CSV ``t,<prefix>_1,...`` with one row per grid time."""
    values = np.asarray(values)
    with _open(path) as fh:
        cols = ",".join(f"{prefix}_{s + 1}" for s in range(values.shape[1]))
        fh.write(f"t,{cols}\n")
        for t, row in zip(times, values):
            fh.write(",".join(format_float(v) for v in (t, *row)) + "\n")


def read_path_csv(path):
    """Inverse of :func:`write_path_csv`: ``(times, values, header)``."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return data[:, 0], data[:, 1:], header


def write_event_log(path, log):
    """One ``t i s k`` record per event (``s`` from, ``k`` to)."""
    with _open(path) as fh:
        for t, i, s, k in zip(log.times, log.vertices, log.from_states, log.to_states):
            fh.write(f"{format_float(t)} {i} {s} {k}\n")


def write_nimfa_vertices(path, solution):
    """Long-format per-vertex dump ``t,i,z_1,...``."""
    if solution.z is None:
        raise ValueError("solution was computed with store_z=False")
    with _open(path) as fh:
        S = solution.z.shape[2]
        fh.write("t,i," + ",".join(f"z_{s + 1}" for s in range(S)) + "\n")
        for t, zt in zip(solution.times, solution.z):
            tt = format_float(t)
            for i, zi in enumerate(zt):
                fh.write(f"{tt},{i}," + ",".join(format_float(v) for v in zi) + "\n")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def write_study_rows(path, rows, wall_clock=True):
    """Per-row study CSV; ``wall_clock=False`` blanks the timing column."""
    with _open(path) as fh:
        fh.write(",".join(ROW_FIELDS) + "\n")
        for row in rows:
            cells = [_cell(row[f]) for f in ROW_FIELDS]
            if not wall_clock:
                cells[-1] = ""
            fh.write(",".join(cells) + "\n")


def write_aggregates(path, aggregates):
    with _open(path) as fh:
        fh.write("n,metric,mean,median,stderr\n")
        for a in aggregates:
            fh.write(
                f"{a['n']},{a['metric']},{format_float(a['mean'])},"
                f"{format_float(a['median'])},{format_float(a['stderr'])}\n"
            )


def write_slopes(path, slopes):
    with _open(path) as fh:
        fh.write("metric slope intercept r2_fit\n")
        for metric, fit in slopes.items():
            fh.write(
                f"{metric} {format_float(fit.slope)} {format_float(fit.intercept)} "
                f"{format_float(fit.r2)}\n"
            )


def write_sidecar(path, values):
    """``key value`` diagnostics file."""
    with _open(path) as fh:
        for key, v in values.items():
            fh.write(f"{key} {_cell(v)}\n")
