"""Seeded initial designs: Latin hypercube sampling and plain uniform sampling.

Design matrices are plain float arrays of shape (n, d); one row per point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import rng_for


@dataclass(frozen=True)
class Box:
    """Axis-aligned search domain: lower[i] < upper[i] for every coordinate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.ndim != 1 or hi.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("box bounds must be 1-D arrays of equal length")
        if lo.size < 1:
            raise ValueError("box must have dimension >= 1")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("box bounds must be finite")
        if not np.all(lo < hi):
            bad = int(np.argmax(~(lo < hi)))
            raise ValueError(
                f"invalid box: lower[{bad}]={lo[bad]} is not < upper[{bad}]={hi[bad]}"
            )
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x: np.ndarray, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol)
        )

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def subset(self, indices) -> "Box":
        """The box restricted to the given coordinate indices."""
        idx = np.asarray(indices, dtype=int)
        return Box(self.lower[idx], self.upper[idx])

    @staticmethod
    def cube(lo: float, hi: float, d: int) -> "Box":
        return Box(np.full(d, float(lo)), np.full(d, float(hi)))


def latin_hypercube(n: int, box: Box, seed: int) -> np.ndarray:
    """Latin hypercube design: n points in the box, one per stratum per axis.

    Each 1-D projection places exactly one point in each of the n equal-width
    strata of [lower[i], upper[i]). Strata are paired by an independent random
    permutation per dimension; the position inside a stratum is uniform.
    Deterministic for a fixed (n, box, seed).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = box.dim
    rng = rng_for(seed)
    offsets = rng.random((n, d))  # in [0, 1)
    cells = np.empty((n, d), dtype=float)
    for j in range(d):
        cells[:, j] = rng.permutation(n)
    unit = (cells + offsets) / n
    return box.lower + unit * box.width


def uniform_sample(n: int, box: Box, seed: int) -> np.ndarray:
    """n i.i.d. uniform points in the box; deterministic for a fixed seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng_for(seed)
    return box.lower + rng.random((n, box.dim)) * box.width
