"""Reading benchmark run logs.

A run is stored as two files sharing a base name: `<name>.csv` with one
row per time step and `<name>.json` with the run header (configuration)
and summary totals. This module validates the frozen CSV schema and
reports violations as SchemaError naming the offending column.
"""

import csv
import json
import pathlib
from dataclasses import dataclass, field

import numpy as np

INT_COLUMNS = ("step", "iterations", "projected_iters", "chol_failures")
FLOAT_COLUMNS = ("time_s", "alpha_min", "alpha_mean", "beta_final",
                 "criterion_value", "energy", "wall_ms")
CSV_COLUMNS = ("step", "time_s", "iterations", "alpha_min", "alpha_mean",
               "beta_final", "projected_iters", "chol_failures",
               "criterion_value", "energy", "wall_ms")


class SchemaError(ValueError):
    """A run log file does not match the frozen CSV/JSON contract."""


@dataclass
class RunLog:
    path: pathlib.Path
    header: dict
    summary: dict
    columns: dict = field(default_factory=dict)

    @property
    def config(self):
        return self.header.get("config", {})

    def label(self):
        """Short human-readable identity of the run."""
        cfg = self.config
        parts = [cfg.get("solver", self.path.stem)]
        if "tolerance" in cfg:
            parts.append(f"tol={cfg['tolerance']:g}")
        return " ".join(parts)


def _json_sidecar(csv_path):
    return csv_path.with_suffix(".json")


def load_run_log(csv_path):
    """Load one run (CSV + JSON side-car) with schema validation."""
    csv_path = pathlib.Path(csv_path)
    json_path = _json_sidecar(csv_path)
    if not csv_path.exists():
        raise SchemaError(f"{csv_path}: file not found")
    if not json_path.exists():
        raise SchemaError(f"{json_path}: missing JSON side-car")
    with open(json_path) as f:
        try:
            meta = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{json_path}: invalid JSON ({exc})") from exc
    for key in ("header", "summary"):
        if key not in meta:
            raise SchemaError(f"{json_path}: missing top-level key {key!r}")

    raw = {name: [] for name in CSV_COLUMNS}
    with open(csv_path, newline="") as f:
        reader = csv.DictReader(f)
        fieldnames = reader.fieldnames or []
        missing = [c for c in CSV_COLUMNS if c not in fieldnames]
        if missing:
            raise SchemaError(
                f"{csv_path}: missing column {missing[0]!r}")
        for line, row in enumerate(reader, start=2):
            for name in CSV_COLUMNS:
                cast = int if name in INT_COLUMNS else float
                try:
                    raw[name].append(cast(row[name]))
                except (TypeError, ValueError) as exc:
                    raise SchemaError(
                        f"{csv_path}:{line}: column {name!r}: "
                        f"cannot parse {row[name]!r}") from exc
    columns = {name: np.array(values) for name, values in raw.items()}
    return RunLog(path=csv_path, header=meta["header"],
                  summary=meta["summary"], columns=columns)


def load_many(paths):
    return [load_run_log(p) for p in paths]
