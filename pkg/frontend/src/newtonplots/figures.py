"""Figure construction from benchmark run logs.

Three figure kinds:

* per-step-lines: solver iterations per time step, one curve per run.
* cumulative-lines: running total of iterations per time step; each
  curve is annotated with its total and mean iterations per step.
* grouped-bars: mean iterations per step as bars, positioned by one
  configuration key and colored by a second (solver x tolerance by
  default).

Figures are deterministic: runs are ordered by label and colors are
assigned by solver name from a fixed palette.
"""

import pathlib
from dataclasses import dataclass, field
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .logs import SchemaError, load_many

PER_STEP_LINES = "per-step-lines"
CUMULATIVE_LINES = "cumulative-lines"
GROUPED_BARS = "grouped-bars"

FIGURE_KINDS = (PER_STEP_LINES, CUMULATIVE_LINES, GROUPED_BARS)

# Fixed solver colors so repeated invocations and reorderings of the
# input list always render identically.
SOLVER_COLORS = {
    "newton": "#1f77b4",
    "pn": "#d62728",
    "pod": "#2ca02c",
    "kn": "#9467bd",
}
FALLBACK_COLORS = ("#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    out: str
    labels: Optional[tuple] = None
    group_keys: tuple = ("solver", "tolerance")

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input log is required")
        if self.labels is not None and len(self.labels) != len(self.inputs):
            raise ValueError("labels must match inputs one-to-one")
        if len(self.group_keys) != 2:
            raise ValueError("grouped bars need exactly two grouping keys")


@dataclass
class Curve:
    label: str
    x: np.ndarray
    y: np.ndarray
    annotation: str = ""
    total: int = 0
    mean: float = 0.0


@dataclass
class FigureResult:
    """What was drawn, exposed for testing and downstream reporting."""
    out: pathlib.Path
    curves: list = field(default_factory=list)


def _color_for(label, fallback_index):
    for solver, color in SOLVER_COLORS.items():
        if label.split()[0] == solver:
            return color
    return FALLBACK_COLORS[fallback_index % len(FALLBACK_COLORS)]


def _labeled_logs(spec):
    logs = load_many(spec.inputs)
    labels = (list(spec.labels) if spec.labels is not None
              else [log.label() for log in logs])
    seen = {}
    for i, label in enumerate(labels):
        if label in seen:
            labels[i] = f"{label} ({i})"
        seen[label] = True
    pairs = sorted(zip(labels, logs), key=lambda pair: pair[0])
    return pairs


def _require_single_scene(pairs, kind):
    scenes = {log.config.get("scene") for _, log in pairs}
    if len(scenes) > 1:
        raise ValueError(
            f"{kind} figures require runs of a single scene, "
            f"got {sorted(map(str, scenes))}")


def _line_figure(spec, cumulative):
    pairs = _labeled_logs(spec)
    _require_single_scene(pairs, spec.kind)
    result = FigureResult(out=pathlib.Path(spec.out))
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, (label, log) in enumerate(pairs):
        steps = log.columns["step"]
        iters = log.columns["iterations"]
        y = np.cumsum(iters) if cumulative else iters
        curve = Curve(label=label, x=steps, y=y,
                      total=int(iters.sum()),
                      mean=float(iters.mean()) if len(iters) else 0.0)
        if cumulative:
            curve.annotation = (f"{label}: {curve.total} total, "
                                f"{curve.mean:.2f}/step")
        ax.plot(steps, y, label=curve.annotation or label,
                color=_color_for(label, i), linewidth=1.5)
        result.curves.append(curve)
    ax.set_xlabel("time step")
    ax.set_ylabel("cumulative solver iterations" if cumulative
                  else "solver iterations")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(result.out)
    plt.close(fig)
    return result


def _bar_figure(spec):
    pairs = _labeled_logs(spec)
    key_a, key_b = spec.group_keys
    positions = sorted({str(log.config.get(key_a)) for _, log in pairs})
    groups = sorted({str(log.config.get(key_b)) for _, log in pairs})
    result = FigureResult(out=pathlib.Path(spec.out))
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(groups), 1)
    for gi, group in enumerate(groups):
        xs, ys = [], []
        for label, log in pairs:
            if str(log.config.get(key_b)) != group:
                continue
            mean = float(log.summary["mean_iterations_per_step"])
            pos = positions.index(str(log.config.get(key_a)))
            xs.append(pos + (gi - (len(groups) - 1) / 2) * width)
            ys.append(mean)
            result.curves.append(Curve(
                label=f"{key_a}={log.config.get(key_a)} "
                      f"{key_b}={log.config.get(key_b)}",
                x=np.array([xs[-1]]), y=np.array([mean]),
                total=int(log.summary["total_iterations"]), mean=mean))
        ax.bar(xs, ys, width=width, label=f"{key_b}={group}")
    ax.set_xticks(range(len(positions)), positions)
    ax.set_xlabel(key_a)
    ax.set_ylabel("mean solver iterations per step")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(result.out)
    plt.close(fig)
    return result


def plot(spec):
    """Render a FigureSpec to its output file; returns a FigureResult."""
    if spec.kind == PER_STEP_LINES:
        return _line_figure(spec, cumulative=False)
    if spec.kind == CUMULATIVE_LINES:
        return _line_figure(spec, cumulative=True)
    return _bar_figure(spec)
