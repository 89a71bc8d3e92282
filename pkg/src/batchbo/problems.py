"""Synthetic black-box benchmark suite with certified global minima and
seeded shift/rotation.

An instance evaluates f(x) = g(R (x - o) + z*) + bias, where g is one of the
analytic bases, z* its canonical minimizer, o a shift drawn inside the
central 80% of the box, and R a seeded uniform random orthogonal matrix.
Translating the inner argument by z* keeps the instance minimizer at x* = o,
which always lies inside the box; every base satisfies g(z) >= g(z*) on all
of R^d, so (x*, f* = bias) is a true global minimum even under rotation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .doe import Box
from .rng import rng_for


def _sphere(Z: np.ndarray) -> np.ndarray:
    return np.sum(Z * Z, axis=1)


def _ellipsoid(Z: np.ndarray) -> np.ndarray:
    d = Z.shape[1]
    if d == 1:
        w = np.ones(1)
    else:
        w = 10.0 ** (6.0 * np.arange(d) / (d - 1))
    return (Z * Z) @ w


def _rosenbrock(Z: np.ndarray) -> np.ndarray:
    a = Z[:, :-1]
    b = Z[:, 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2, axis=1)


def _rastrigin(Z: np.ndarray) -> np.ndarray:
    d = Z.shape[1]
    return 10.0 * d + np.sum(Z * Z - 10.0 * np.cos(2.0 * np.pi * Z), axis=1)


def _ackley(Z: np.ndarray) -> np.ndarray:
    d = Z.shape[1]
    rms = np.sqrt(np.sum(Z * Z, axis=1) / d)
    return (
        -20.0 * np.exp(-0.2 * rms)
        - np.exp(np.sum(np.cos(2.0 * np.pi * Z), axis=1) / d)
        + 20.0
        + np.e
    )


def _griewank(Z: np.ndarray) -> np.ndarray:
    d = Z.shape[1]
    scale = np.sqrt(np.arange(1, d + 1))
    return np.sum(Z * Z, axis=1) / 4000.0 - np.prod(np.cos(Z / scale), axis=1) + 1.0


def _levy(Z: np.ndarray) -> np.ndarray:
    W = 1.0 + (Z - 1.0) / 4.0
    head = np.sin(np.pi * W[:, 0]) ** 2
    mid = np.sum(
        (W[:, :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * W[:, :-1] + 1.0) ** 2),
        axis=1,
    )
    tail = (W[:, -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * W[:, -1]) ** 2)
    return head + mid + tail


def _schwefel_argmax() -> tuple[float, float]:
    """Locate max_t t*sin(sqrt(t)) on [0, 500] to machine precision.

    Newton refinement on h(r) = sin(r) + (r/2) cos(r) with r = sqrt(t),
    starting from the textbook value 420.9687.
    """
    r = float(np.sqrt(420.9687))
    for _ in range(40):
        h = np.sin(r) + 0.5 * r * np.cos(r)
        hp = 1.5 * np.cos(r) - 0.5 * r * np.sin(r)
        step = h / hp
        r -= step
        if abs(step) < 1e-16:
            break
    t = r * r
    return t, float(t * np.sin(r))


_SCHWEFEL_T, _SCHWEFEL_C = _schwefel_argmax()


def _schwefel_like(Z: np.ndarray) -> np.ndarray:
    # Classic Schwefel shape on [-500, 500]; outside that range the value is
    # frozen at the boundary and a positive quadratic penalty is added, which
    # keeps g >= 0 on all of R^d (needed under rotation).
    t = np.clip(Z, -500.0, 500.0)
    inner = _SCHWEFEL_C - t * np.sin(np.sqrt(np.abs(t)))
    excess = np.maximum(np.abs(Z) - 500.0, 0.0)
    return np.sum(inner + 1e-2 * excess * excess, axis=1)


@dataclass(frozen=True)
class _Base:
    fn: Callable[[np.ndarray], np.ndarray]
    default_box: tuple[float, float]
    min_dim: int
    minimizer: Callable[[int], np.ndarray]


_BASES: dict[str, _Base] = {
    "sphere": _Base(_sphere, (-5.12, 5.12), 1, lambda d: np.zeros(d)),
    "ellipsoid": _Base(_ellipsoid, (-5.12, 5.12), 1, lambda d: np.zeros(d)),
    "rosenbrock": _Base(_rosenbrock, (-2.048, 2.048), 2, lambda d: np.ones(d)),
    "rastrigin": _Base(_rastrigin, (-5.12, 5.12), 1, lambda d: np.zeros(d)),
    "ackley": _Base(_ackley, (-32.768, 32.768), 1, lambda d: np.zeros(d)),
    "griewank": _Base(_griewank, (-600.0, 600.0), 1, lambda d: np.zeros(d)),
    "levy": _Base(_levy, (-10.0, 10.0), 1, lambda d: np.ones(d)),
    "schwefel-like-multimodal": _Base(
        _schwefel_like, (-500.0, 500.0), 1, lambda d: np.full(d, _SCHWEFEL_T)
    ),
}

# Short registry aliases.
_ALIASES = {"schwefel": "schwefel-like-multimodal"}


def base_names() -> list[str]:
    return sorted(_BASES)


def register_base(
    name: str,
    fn: Callable[[np.ndarray], np.ndarray],
    default_box: tuple[float, float],
    min_dim: int,
    minimizer: Callable[[int], np.ndarray],
) -> None:
    """Extend the suite with a custom base function.

    fn maps an (n, d) array to n values; minimizer(d) must be its global
    minimizer over R^d (shift/rotation keep the instance minimum certified
    only when fn(z) >= fn(minimizer) holds globally).
    """
    if name in _BASES or name in _ALIASES:
        raise ValueError(f"base {name!r} already registered")
    _BASES[name] = _Base(fn, default_box, min_dim, minimizer)


@dataclass(frozen=True)
class ProblemInstance:
    base: str
    dim: int
    box: Box
    shift: np.ndarray
    rotation: np.ndarray
    f_star: float
    x_star: np.ndarray
    name: str
    bias: float = 0.0  # f_star minus the base function's own minimum value

    def __post_init__(self):
        for field in ("shift", "rotation", "x_star"):
            arr = np.asarray(getattr(self, field), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)


def _random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform (Haar) orthogonal matrix: QR of a Gaussian with sign fix."""
    A = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


def make_problem(
    base: str,
    d: int,
    transform_seed: int | None,
    box: Box | None = None,
) -> ProblemInstance:
    """Instantiate a benchmark problem; transform_seed=None means identity
    (no shift, no rotation: the instance equals the raw base function)."""
    key = _ALIASES.get(base, base)
    if key not in _BASES:
        raise ValueError(
            f"unknown base {base!r}; valid names: {', '.join(base_names())}"
        )
    spec = _BASES[key]
    if d < spec.min_dim:
        raise ValueError(f"{key} requires dimension >= {spec.min_dim}")
    if box is None:
        box = Box.cube(spec.default_box[0], spec.default_box[1], d)
    if box.dim != d:
        raise ValueError("box dimension mismatch")
    z_star = spec.minimizer(d)
    f_base = float(spec.fn(z_star[None, :])[0])

    if transform_seed is None:
        shift = z_star.copy()
        rotation = np.eye(d)
        bias = 0.0
        name = f"{key}-d{d}-identity"
    else:
        rng = rng_for(int(transform_seed), 0x9B1E)
        margin = 0.1 * box.width
        shift = rng.uniform(box.lower + margin, box.upper - margin)
        rotation = _random_rotation(rng, d)
        bias = float(rng.uniform(0.0, 100.0))
        name = f"{key}-d{d}-seed{int(transform_seed)}"

    inst = ProblemInstance(
        base=key,
        dim=d,
        box=box,
        shift=shift,
        rotation=rotation,
        f_star=f_base + bias,
        x_star=shift.copy(),
        name=name,
        bias=bias,
    )
    check = evaluate(inst, inst.x_star)
    if abs(check - inst.f_star) > 1e-8:
        raise RuntimeError(
            f"inconsistent instance: f(x_star)={check} but f_star={inst.f_star}"
        )
    return inst


def evaluate_batch(problem: ProblemInstance, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != problem.dim:
        raise ValueError("point dimension mismatch")
    if np.any(X < problem.box.lower - 1e-12) or np.any(X > problem.box.upper + 1e-12):
        raise ValueError("point outside the problem box")
    spec = _BASES[problem.base]
    z_star = spec.minimizer(problem.dim)
    Z = (X - problem.shift) @ problem.rotation.T + z_star
    return spec.fn(Z) + problem.bias


def evaluate(problem: ProblemInstance, x: np.ndarray) -> float:
    """Objective value at x; pure and deterministic."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("evaluate expects a single point")
    return float(evaluate_batch(problem, x[None, :])[0])


def global_minimum(problem: ProblemInstance) -> tuple[float, np.ndarray]:
    return problem.f_star, problem.x_star.copy()


_NAME_RE = re.compile(r"^(?P<base>[a-z0-9-]+?)-d(?P<dim>\d+)-(?:seed(?P<seed>\d+)|identity)$")


def problem_from_name(name: str) -> ProblemInstance:
    """Resolve a registry id of the form base-dD-seedS or base-dD-identity."""
    m = _NAME_RE.match(name.strip().lower())
    if not m:
        raise ValueError(
            f"bad problem name {name!r}; expected e.g. 'sphere-d5-seed3' or "
            "'rastrigin-d10-identity'"
        )
    seed = m.group("seed")
    return make_problem(
        m.group("base"),
        int(m.group("dim")),
        None if seed is None else int(seed),
    )
