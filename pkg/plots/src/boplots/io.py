"""Readers for the benchmark harness CSV contract.

Aggregate files live under <results>/aggregates/ and are named
<problem>__<algorithm>__q<q>.csv with columns
iteration,evaluations,regret_median,regret_q1,regret_q3. The timing file is
<results>/timing.csv with one row per run. '#'-prefixed lines are headers.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_AGG_NAME = re.compile(r"^(?P<problem>.+)__(?P<algorithm>.+)__q(?P<q>\d+)\.csv$")


@dataclass(frozen=True)
class AggregateSeries:
    problem: str
    algorithm: str
    q: int
    iteration: np.ndarray
    evaluations: np.ndarray
    median: np.ndarray
    q1: np.ndarray
    q3: np.ndarray

    @property
    def label(self) -> str:
        return f"{self.algorithm} q={self.q}"

    def x(self, axis: str) -> np.ndarray:
        if axis == "iterations":
            return self.iteration
        if axis == "evaluations":
            return self.evaluations
        raise ValueError(f"unknown x axis {axis!r}")


def _data_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    columns = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if columns is None:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    if columns is None:
        raise ValueError(f"{path}: no header row")
    return columns, rows


def read_aggregate(path) -> AggregateSeries:
    path = Path(path)
    m = _AGG_NAME.match(path.name)
    if not m:
        raise ValueError(f"{path.name}: not an aggregate file name")
    columns, rows = _data_rows(path)
    idx = {name: i for i, name in enumerate(columns)}
    need = ("iteration", "evaluations", "regret_median", "regret_q1", "regret_q3")
    missing = [c for c in need if c not in idx]
    if missing:
        raise ValueError(f"{path.name}: missing columns {missing}")
    data = np.asarray([[float(v) for v in row] for row in rows])
    return AggregateSeries(
        problem=m.group("problem"),
        algorithm=m.group("algorithm"),
        q=int(m.group("q")),
        iteration=data[:, idx["iteration"]],
        evaluations=data[:, idx["evaluations"]],
        median=data[:, idx["regret_median"]],
        q1=data[:, idx["regret_q1"]],
        q3=data[:, idx["regret_q3"]],
    )


def discover_aggregates(input_dir) -> list[AggregateSeries]:
    agg_dir = Path(input_dir) / "aggregates"
    series = []
    if agg_dir.is_dir():
        for path in sorted(agg_dir.glob("*.csv")):
            series.append(read_aggregate(path))
    return series


def read_timing(input_dir) -> list[dict]:
    path = Path(input_dir) / "timing.csv"
    if not path.exists():
        raise FileNotFoundError(f"missing timing file: {path}")
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(r for r in fh if not r.startswith("#"))
        rows = []
        for row in reader:
            rows.append({
                "problem": row["problem"],
                "algorithm": row["algorithm"],
                "q": int(row["q"]),
                "mean_iter_acq_ms": float(row["mean_iter_acq_ms"]),
                "mean_iter_fit_ms": float(row["mean_iter_fit_ms"]),
            })
    return rows
