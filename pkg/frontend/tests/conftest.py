import csv
import json

import numpy as np
import pytest

from newtonplots.logs import CSV_COLUMNS, INT_COLUMNS


def write_log(directory, name, iterations, scene="beam", solver="newton",
              tolerance=0.01, drop_column=None, corrupt=None,
              extra_config=None):
    """Write a synthetic CSV + JSON run-log pair and return the CSV path.

    corrupt is an optional (row_index, column, text) triple; drop_column
    removes a column from the CSV entirely.
    """
    iterations = list(iterations)
    columns = list(CSV_COLUMNS)
    if drop_column is not None:
        columns.remove(drop_column)
    csv_path = directory / f"{name}.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for i, iters in enumerate(iterations):
            row = {
                "step": i, "time_s": 0.01 * (i + 1), "iterations": iters,
                "alpha_min": 1.0, "alpha_mean": 1.0, "beta_final": 1.0,
                "projected_iters": 0, "chol_failures": 0,
                "criterion_value": 1e-3, "energy": -1.0 - i,
                "wall_ms": 5.0,
            }
            if corrupt is not None and corrupt[0] == i:
                row[corrupt[1]] = corrupt[2]
            writer.writerow([row[c] for c in columns])
    config = {"scene": scene, "solver": solver, "tolerance": tolerance}
    config.update(extra_config or {})
    meta = {
        "header": {"config": config, "num_steps": len(iterations)},
        "summary": {
            "total_iterations": int(np.sum(iterations)),
            "mean_iterations_per_step":
                float(np.mean(iterations)) if iterations else 0.0,
            "completed": True,
            "failure_reason": "none",
        },
    }
    with open(directory / f"{name}.json", "w") as f:
        json.dump(meta, f)
    return csv_path


@pytest.fixture
def log_factory(tmp_path):
    def make(name, iterations, **kwargs):
        return write_log(tmp_path, name, iterations, **kwargs)
    return make
