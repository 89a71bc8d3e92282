"""Figure rendering: convergence curves with interquartile bands and
acquisition-timing bars.

Values are plotted exactly as read from the CSVs (no smoothing); rendering
the same inputs twice produces byte-identical SVG output. Input directories
are never written to.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "boplots"

import matplotlib.pyplot as plt
import numpy as np

from .io import AggregateSeries, discover_aggregates, read_timing

_PALETTE = plt.get_cmap("tab10").colors


@dataclass(frozen=True)
class PlotSpec:
    input_dir: str
    out_dir: str = "figures"
    problems: tuple[str, ...] = ()    # empty tuple: all
    algorithms: tuple[str, ...] = ()
    x_axis: str = "iterations"        # or "evaluations"
    fmt: str = "svg"                  # or "png"
    log_scale: bool = True

    def __post_init__(self):
        if self.x_axis not in ("iterations", "evaluations"):
            raise ValueError("x_axis must be 'iterations' or 'evaluations'")
        if self.fmt not in ("svg", "png"):
            raise ValueError("fmt must be 'svg' or 'png'")


def _style_for(label: str, ordered_labels: list[str]):
    i = ordered_labels.index(label)
    return _PALETTE[i % len(_PALETTE)]


def _save(fig, path: Path, fmt: str) -> None:
    # Dropping the Date metadata (with a fixed svg.hashsalt) makes SVG
    # output a pure function of the plotted data.
    metadata = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, format=fmt, metadata=metadata)
    plt.close(fig)


def figure_convergence(
    series: list[AggregateSeries], x_axis: str, log_scale: bool = True
):
    """One problem's figure. Returns (fig, plotted) where plotted maps each
    curve label to the exact arrays drawn."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    labels = sorted(s.label for s in series)  # deterministic color assignment
    plotted: dict[str, dict[str, np.ndarray]] = {}
    for s in sorted(series, key=lambda s: s.label):
        color = _style_for(s.label, labels)
        x = s.x(x_axis)
        ax.fill_between(x, s.q1, s.q3, color=color, alpha=0.2, linewidth=0)
        ax.plot(x, s.median, color=color, label=s.label, marker="o", markersize=3)
        plotted[s.label] = {"x": x, "median": s.median, "q1": s.q1, "q3": s.q3}
    ax.set_xlabel(x_axis)
    ax.set_ylabel("simple regret")
    if log_scale:
        ax.set_yscale("log")
    ax.set_title(series[0].problem)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig, plotted


def plot_convergence(spec: PlotSpec) -> tuple[list[str], list[str]]:
    """Render one convergence figure per problem; returns (paths, warnings)."""
    series = discover_aggregates(spec.input_dir)
    if spec.problems:
        series = [s for s in series if s.problem in spec.problems]
    if spec.algorithms:
        series = [s for s in series if s.algorithm in spec.algorithms]
    wanted = spec.problems or sorted({s.problem for s in series})
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    warnings: list[str] = []
    for problem in wanted:
        group = [s for s in series if s.problem == problem]
        if not group:
            warnings.append(f"no aggregate data for problem {problem!r}; skipped")
            continue
        fig, _ = figure_convergence(group, spec.x_axis, spec.log_scale)
        path = out_dir / f"convergence__{problem}.{spec.fmt}"
        _save(fig, path, spec.fmt)
        written.append(str(path))
    return written, warnings


def timing_bars(rows: list[dict], algorithms: tuple[str, ...] = ()):
    """Mean acquisition time per (algorithm, q) cohort, deterministic order."""
    if algorithms:
        rows = [r for r in rows if r["algorithm"] in algorithms]
    groups: dict[tuple[str, int], list[float]] = {}
    for r in rows:
        groups.setdefault((r["algorithm"], r["q"]), []).append(r["mean_iter_acq_ms"])
    keys = sorted(groups)
    heights = [float(np.mean(groups[k])) for k in keys]
    labels = [f"{a}\nq={q}" for a, q in keys]
    return keys, labels, heights


def figure_timing(rows: list[dict], algorithms: tuple[str, ...] = ()):
    keys, labels, heights = timing_bars(rows, algorithms)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    colors = [_PALETTE[i % len(_PALETTE)] for i in range(len(keys))]
    ax.bar(np.arange(len(keys)), heights, color=colors)
    ax.set_xticks(np.arange(len(keys)), labels, fontsize=8)
    ax.set_ylabel("mean acquisition time per iteration (ms)")
    fig.tight_layout()
    return fig, dict(zip(labels, heights))


def plot_timing(spec: PlotSpec) -> tuple[list[str], list[str]]:
    """Render the acquisition-timing bar chart; returns (paths, warnings).

    A missing timing.csv raises FileNotFoundError naming the file.
    """
    rows = read_timing(spec.input_dir)
    if not rows:
        return [], ["timing.csv has no rows; nothing to plot"]
    fig, _ = figure_timing(rows, spec.algorithms)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"timing.{spec.fmt}"
    _save(fig, path, spec.fmt)
    return [str(path)], []
