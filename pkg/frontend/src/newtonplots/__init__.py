"""Plotting companion for newtonlab benchmark run logs."""

from .figures import (CUMULATIVE_LINES, FIGURE_KINDS, GROUPED_BARS,
                      PER_STEP_LINES, FigureResult, FigureSpec, plot)
from .logs import RunLog, SchemaError, load_many, load_run_log

__all__ = [
    "CUMULATIVE_LINES", "FIGURE_KINDS", "GROUPED_BARS", "PER_STEP_LINES",
    "FigureResult", "FigureSpec", "plot",
    "RunLog", "SchemaError", "load_many", "load_run_log",
]
