"""Evaluated data: the design matrix, objective values, and the incumbent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Incumbent:
    """Best evaluated solution so far: the point and its objective value."""

    x_min: np.ndarray
    f_min: float

    def __post_init__(self):
        x = np.asarray(self.x_min, dtype=float).copy()
        x.setflags(write=False)
        object.__setattr__(self, "x_min", x)
        object.__setattr__(self, "f_min", float(self.f_min))


@dataclass(frozen=True)
class ObservationSet:
    """Immutable evaluated dataset. Extension returns a new value.

    Invariant: incumbent.f_min == min(values), incumbent.x_min is the row
    achieving it (first occurrence on ties).
    """

    design: np.ndarray
    values: np.ndarray
    incumbent: Incumbent

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.design, dtype=float))
        y = np.atleast_1d(np.asarray(self.values, dtype=float))
        if X.shape[0] != y.shape[0]:
            raise ValueError("design rows and value count differ")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "values", y)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def dim(self) -> int:
        return self.design.shape[1]

    @staticmethod
    def from_data(design: np.ndarray, values: np.ndarray) -> "ObservationSet":
        X = np.atleast_2d(np.asarray(design, dtype=float))
        y = np.atleast_1d(np.asarray(values, dtype=float))
        if y.size < 1:
            raise ValueError("need at least one observation")
        best = int(np.argmin(y))  # first occurrence wins ties
        return ObservationSet(X, y, Incumbent(X[best], float(y[best])))

    def extend(self, design: np.ndarray, values: np.ndarray) -> "ObservationSet":
        X2 = np.atleast_2d(np.asarray(design, dtype=float))
        y2 = np.atleast_1d(np.asarray(values, dtype=float))
        X = np.vstack([self.design, X2])
        y = np.concatenate([self.values, y2])
        if np.min(y2) < self.incumbent.f_min:
            k = int(np.argmin(y2))
            inc = Incumbent(X2[k], float(y2[k]))
        else:
            inc = self.incumbent
        return ObservationSet(X, y, inc)
