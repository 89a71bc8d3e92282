"""Random axis-aligned subspace selection.

A subspace is a sorted set of distinct coordinate indices. In the default
mode a draw first picks the subspace dimension s uniformly from {1..d}, then
an s-subset uniformly among all size-s subsets (partial shuffle), so the full
2^d - 1 catalogue is never enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import rng_for

MODE_RANDOM = "random-dimension"
MODE_FIXED = "fixed-dimension"
MODE_FULL = "full-space"
_MODES = (MODE_RANDOM, MODE_FIXED, MODE_FULL)

_REJECTION_CAP_PER_DRAW = 1000


@dataclass(frozen=True)
class Subspace:
    """Strictly increasing, distinct coordinate indices; 1 <= size <= d."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) < 1:
            raise ValueError("subspace must contain at least one coordinate")
        if any(i < 0 for i in idx):
            raise ValueError("coordinate indices must be nonnegative")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError("coordinate indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return len(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int)


@dataclass(frozen=True)
class SubspaceStrategy:
    mode: str = MODE_RANDOM
    fixed_s: int | None = None
    dedup: bool = False

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {_MODES}")
        if self.mode == MODE_FIXED:
            if self.fixed_s is None or self.fixed_s < 1:
                raise ValueError("fixed-dimension mode needs fixed_s >= 1")


def count_subspaces(d: int) -> int:
    """Number of nonempty axis-aligned subspaces of a d-dimensional space."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return 2**d - 1


def _draw_one(rng: np.random.Generator, d: int, strategy: SubspaceStrategy) -> Subspace:
    if strategy.mode == MODE_FULL:
        return Subspace(tuple(range(d)))
    if strategy.mode == MODE_FIXED:
        s = strategy.fixed_s
        if s > d:
            raise ValueError(f"fixed_s={s} exceeds dimension {d}")
    else:
        s = int(rng.integers(1, d + 1))
    picked = rng.permutation(d)[:s]
    picked.sort()
    return Subspace(tuple(int(i) for i in picked))


def draw_subspace(d: int, strategy: SubspaceStrategy, seed: int) -> Subspace:
    """One random subspace; deterministic per seed."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return _draw_one(rng_for(seed), d, strategy)


def draw_batch(d: int, q: int, strategy: SubspaceStrategy, seed: int) -> list[Subspace]:
    """q random subspaces; with dedup enabled they are pairwise distinct.

    Dedup uses rejection sampling (capped at 1000 attempts per slot) and
    requires q <= 2^d - 1.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if q < 1:
        raise ValueError("batch size must be >= 1")
    if strategy.dedup:
        total = count_subspaces(d)
        if q > total:
            raise ValueError(
                f"cannot draw {q} distinct subspaces: only {total} exist for d={d}"
            )
    rng = rng_for(seed)
    out: list[Subspace] = []
    seen: set[tuple[int, ...]] = set()
    for _ in range(q):
        attempts = 0
        while True:
            cand = _draw_one(rng, d, strategy)
            attempts += 1
            if not strategy.dedup or cand.indices not in seen:
                break
            if attempts >= _REJECTION_CAP_PER_DRAW:
                raise RuntimeError(
                    "subspace rejection sampling exceeded the attempt cap"
                )
        seen.add(cand.indices)
        out.append(cand)
    return out
