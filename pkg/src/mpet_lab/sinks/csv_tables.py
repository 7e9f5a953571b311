"""CSV result tables with a fixed column order.

Floats are written with repr (shortest round-trip form) and nothing
time-dependent is recorded, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, is_dataclass
from pathlib import Path

SWEEP_COLUMNS = (
    "point",
    "n",
    "nx",
    "mu",
    "lam",
    "K",
    "c_p",
    "beta_tilde",
    "tau",
    "dofs",
    "xi_min",
    "xi_max",
    "kappa",
    "iterations",
    "residual",
    "converged",
    "status",
    "error",
)
TRAJECTORY_COLUMNS = (
    "step",
    "t",
    "iterations",
    "residual",
    "mass_residual_max",
    "velocity_residual_max",
    "w_norm",
)
CONSTANTS_COLUMNS = ("nx", "h", "c0", "c1", "c2", "c3", "alpha_a", "beta_s", "beta_v")
CONVERGENCE_COLUMNS = ("tau", "difference", "rate")


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, list | tuple):
        return " ".join(format_cell(v) for v in value)
    try:
        return repr(float(value))  # numpy scalars
    except (TypeError, ValueError):
        return str(value)


def _as_mapping(row) -> Mapping:
    if is_dataclass(row):
        return asdict(row)
    return row


def render_csv(columns: Sequence[str], rows: Iterable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        mapping = _as_mapping(row)
        writer.writerow([format_cell(mapping.get(column)) for column in columns])
    return buffer.getvalue()


def write_csv(path: Path | str, columns: Sequence[str], rows: Iterable) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(columns, rows), encoding="utf-8")
    return path
