"""Real-coded genetic algorithm with simulated binary crossover and
polynomial mutation, used to maximize acquisition functions and the GP
likelihood.

Selection is binary tournament; replacement is (mu+lambda): parents and
offspring are pooled and the best half survives, which makes the
generation-best trace nondecreasing. The objective is called exactly
population * (generations + 1) times.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .doe import Box
from .rng import rng_for


@dataclass(frozen=True)
class GAConfig:
    population: int
    generations: int
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None: resolved to 1/k for a k-dim search
    eta_crossover: float = 20.0
    eta_mutation: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.population < 2 or self.population % 2 != 0:
            raise ValueError("population must be >= 2 and even")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.eta_crossover <= 0 or self.eta_mutation <= 0:
            raise ValueError("distribution indices must be positive")

    def with_seed(self, seed: int) -> "GAConfig":
        return replace(self, seed=seed)


def _sbx_pairs(
    rng: np.random.Generator,
    p1: np.ndarray,
    p2: np.ndarray,
    eta: float,
    crossover_rate: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized SBX on stacked parent pairs (m, k). Children are NOT clipped.

    A pair crosses with probability crossover_rate; within a crossing pair each
    variable crosses with probability 0.5. All random draws happen
    unconditionally so the stream consumed is independent of outcomes.
    """
    m, k = p1.shape
    pair_on = rng.random(m) < crossover_rate
    var_on = rng.random((m, k)) < 0.5
    u = rng.random((m, k))
    exponent = 1.0 / (eta + 1.0)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** exponent,
        (1.0 / (2.0 * (1.0 - u))) ** exponent,
    )
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    mask = pair_on[:, None] & var_on
    return np.where(mask, c1, p1), np.where(mask, c2, p2)


def _polynomial_mutation(
    rng: np.random.Generator,
    x: np.ndarray,
    eta: float,
    rate: float,
    box: Box,
) -> np.ndarray:
    """Bounded polynomial mutation on a stack of points (m, k); clipped to box."""
    m, k = x.shape
    lo, hi = box.lower, box.upper
    width = hi - lo
    gate = rng.random((m, k)) < rate
    u = rng.random((m, k))
    d1 = (x - lo) / width
    d2 = (hi - x) / width
    exponent = 1.0 / (eta + 1.0)
    low_branch = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)) ** exponent - 1.0
    high_branch = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)) ** exponent
    delta = np.where(u < 0.5, low_branch, high_branch)
    out = np.where(gate, x + delta * width, x)
    return np.clip(out, lo, hi)


def sbx_crossover(
    p1: np.ndarray,
    p2: np.ndarray,
    eta: float,
    box: Box,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """SBX for one parent pair; children clipped to the box.

    Each variable crosses with probability 0.5 using the eta-parameterized
    spread distribution; before clipping c1 + c2 equals p1 + p2 per variable.
    """
    p1 = np.atleast_1d(np.asarray(p1, dtype=float))
    p2 = np.atleast_1d(np.asarray(p2, dtype=float))
    if p1.shape != p2.shape:
        raise ValueError("parents must have equal length")
    rng = rng_for(seed)
    c1, c2 = _sbx_pairs(rng, p1[None, :], p2[None, :], eta, crossover_rate=1.0)
    return box.clip(c1[0]), box.clip(c2[0])


def polynomial_mutation(
    x: np.ndarray,
    eta: float,
    rate: float,
    box: Box,
    seed: int,
) -> np.ndarray:
    """Bounded polynomial mutation of a single point; output inside the box."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rng = rng_for(seed)
    return _polynomial_mutation(rng, x[None, :], eta, rate, box)[0]


def maximize(
    objective,
    box: Box,
    config: GAConfig,
    vectorized: bool = False,
    callback=None,
    initial: np.ndarray | None = None,
) -> tuple[np.ndarray, float, int]:
    """Maximize objective over the box; returns (best_x, best_value, evals).

    The objective must be total on the box; non-finite returns count as -inf
    fitness. With vectorized=True the objective receives an (m, k) array and
    must return m values. callback(generation, best_value), when given, is
    invoked after the initial evaluation and after every generation.
    `initial` warm-starts the search: its rows (clipped to the box) replace
    the first rows of the otherwise-uniform initial population. Deterministic
    for a fixed (config, objective, initial).
    """
    k = box.dim
    pop_size = config.population
    rate = config.mutation_rate if config.mutation_rate is not None else 1.0 / k
    rng = rng_for(config.seed)

    def evaluate(X: np.ndarray) -> np.ndarray:
        if vectorized:
            vals = np.asarray(objective(X), dtype=float)
        else:
            vals = np.array([float(objective(x)) for x in X], dtype=float)
        if vals.shape != (X.shape[0],):
            raise ValueError("objective returned wrong number of values")
        return np.where(np.isfinite(vals), vals, -np.inf)

    pop = box.lower + rng.random((pop_size, k)) * box.width
    if initial is not None:
        seeds = np.clip(np.atleast_2d(np.asarray(initial, dtype=float)),
                        box.lower, box.upper)
        m = min(seeds.shape[0], pop_size)
        pop[:m] = seeds[:m]
    fit = evaluate(pop)
    evals = pop_size
    if callback is not None:
        callback(0, float(np.max(fit)))

    for gen in range(1, config.generations + 1):
        contenders = rng.integers(0, pop_size, size=(pop_size, 2))
        a, b = contenders[:, 0], contenders[:, 1]
        winners = np.where(fit[a] >= fit[b], a, b)
        c1, c2 = _sbx_pairs(
            rng,
            pop[winners[0::2]],
            pop[winners[1::2]],
            config.eta_crossover,
            config.crossover_rate,
        )
        children = np.empty_like(pop)
        children[0::2] = c1
        children[1::2] = c2
        children = np.clip(children, box.lower, box.upper)
        children = _polynomial_mutation(rng, children, config.eta_mutation, rate, box)

        child_fit = evaluate(children)
        evals += pop_size
        pool = np.vstack([pop, children])
        pool_fit = np.concatenate([fit, child_fit])
        order = np.argsort(-pool_fit, kind="stable")[:pop_size]
        pop = pool[order]
        fit = pool_fit[order]
        if callback is not None:
            callback(gen, float(fit[0]))

    best = int(np.argmax(fit))
    return pop[best].copy(), float(fit[best]), evals
