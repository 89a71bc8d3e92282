"""Optimization loops: sequential expected improvement, the batch
subspace-improvement loop, the Kriging-believer batch baseline, and random
search.

All loops share the same skeleton: a Latin hypercube initial design, then
iterations that (re)train the model, select one batch of query points,
evaluate them, and update the dataset. Randomness is consumed through
per-purpose streams derived from (run seed, stream tag, iteration, task), so
a run is reproducible bit-for-bit regardless of scheduling and worker count.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import gp
from .acquisition import (
    AcquisitionSpec,
    embed,
    essi_batch,
    expected_improvement_batch,
)
from .doe import Box, latin_hypercube
from .ga import GAConfig, maximize
from .observations import Incumbent, ObservationSet
from .problems import ProblemInstance, evaluate_batch
from .records import RunRecord
from .rng import (
    STREAM_ACQ,
    STREAM_DESIGN,
    STREAM_FIT,
    STREAM_JITTER,
    STREAM_SEARCH,
    STREAM_SUBSPACE,
    derive_seed,
    rng_for,
)
from .subspace import Subspace, SubspaceStrategy, draw_batch

DUPLICATE_TOL = 1e-9     # normalized distance below which a query is a duplicate
JITTER_SCALE = 1e-6      # jitter amplitude as a fraction of box width


@dataclass(frozen=True)
class LoopConfig:
    """Settings shared by all loops.

    ga=None applies the sizing rule population = max(20, 10k) for a k-dim
    acquisition search with ga_generations generations; an explicit GAConfig
    is used verbatim (its seed is replaced per task). fit=None uses FitConfig
    defaults with the problem box.
    """

    n_init: int
    n_max: int
    seed: int
    q: int = 1
    ga: GAConfig | None = None
    ga_generations: int = 100
    subspace_strategy: SubspaceStrategy = field(default_factory=SubspaceStrategy)
    refit_every: int = 1
    fit: gp.FitConfig | None = None
    workers: int = 1

    def __post_init__(self):
        if self.n_init < 2:
            raise ValueError("n_init must be >= 2")
        if self.n_max < self.n_init:
            raise ValueError("n_max must be >= n_init")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.refit_every < 1:
            raise ValueError("refit_every must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def digest(self, algorithm: str, problem_name: str, q: int) -> str:
        payload = {
            "algorithm": algorithm,
            "problem": problem_name,
            "n_init": self.n_init,
            "n_max": self.n_max,
            "q": q,
            "seed": self.seed,
            "refit_every": self.refit_every,
            "ga": None if self.ga is None else {
                "population": self.ga.population,
                "generations": self.ga.generations,
                "crossover_rate": self.ga.crossover_rate,
                "mutation_rate": self.ga.mutation_rate,
                "eta_crossover": self.ga.eta_crossover,
                "eta_mutation": self.ga.eta_mutation,
            },
            "ga_generations": self.ga_generations,
            "subspace": {
                "mode": self.subspace_strategy.mode,
                "fixed_s": self.subspace_strategy.fixed_s,
                "dedup": self.subspace_strategy.dedup,
            },
            "fit": None if self.fit is None else {
                "population": self.fit.population,
                "generations": self.fit.generations,
                "nugget_factor": self.fit.nugget_factor,
                "isotropic": self.fit.isotropic,
            },
        }
        text = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _ga_for(config: LoopConfig, k: int, task_seed: int) -> GAConfig:
    if config.ga is not None:
        return config.ga.with_seed(task_seed)
    pop = max(20, 10 * k)
    pop += pop % 2
    return GAConfig(
        population=pop,
        generations=config.ga_generations,
        crossover_rate=0.9,
        mutation_rate=None,  # resolved to 1/k by the GA
        eta_crossover=20.0,
        eta_mutation=20.0,
        seed=task_seed,
    )


def _fit_config(config: LoopConfig, box: Box) -> gp.FitConfig:
    base = config.fit if config.fit is not None else gp.FitConfig()
    if base.box is None:
        base = replace(base, box=box)
    return base


class _RunBuilder:
    """Accumulates evaluations and per-iteration bookkeeping for a record."""

    def __init__(self, algorithm: str, problem: ProblemInstance,
                 config: LoopConfig, q: int):
        self.algorithm = algorithm
        self.problem = problem
        self.config = config
        self.q = q
        self.xs: list[np.ndarray] = []
        self.fs: list[float] = []
        self.iters: list[int] = []
        self.slots: list[int] = []
        self.trace: list[float] = []
        self.acq_t: list[float] = []
        self.fit_t: list[float] = []
        self.debug: dict = {"iterations": []}
        self.failed = False

    def add_batch(self, t: int, X: np.ndarray, f: np.ndarray,
                  incumbent: Incumbent, acq_s: float, fit_s: float) -> None:
        for i in range(X.shape[0]):
            self.xs.append(np.asarray(X[i], dtype=float))
            self.fs.append(float(f[i]))
            self.iters.append(t)
            self.slots.append(i)
        self.trace.append(incumbent.f_min)
        self.acq_t.append(acq_s)
        self.fit_t.append(fit_s)

    def build(self) -> RunRecord:
        return RunRecord(
            algorithm=self.algorithm,
            problem_name=self.problem.name,
            seed=self.config.seed,
            q=self.q,
            n_init=self.config.n_init,
            config_digest=self.config.digest(
                self.algorithm, self.problem.name, self.q
            ),
            X=np.asarray(self.xs, dtype=float),
            f=np.asarray(self.fs, dtype=float),
            iteration=np.asarray(self.iters, dtype=np.int64),
            worker_slot=np.asarray(self.slots, dtype=np.int64),
            incumbent_trace=np.asarray(self.trace, dtype=float),
            acq_time_s=np.asarray(self.acq_t, dtype=float),
            fit_time_s=np.asarray(self.fit_t, dtype=float),
            failed=self.failed,
            debug=self.debug,
        )


def _initial_observations(
    problem: ProblemInstance, config: LoopConfig, builder: _RunBuilder
) -> ObservationSet:
    design = latin_hypercube(
        config.n_init, problem.box, derive_seed(config.seed, STREAM_DESIGN)
    )
    values = evaluate_batch(problem, design)
    obs = ObservationSet.from_data(design, values)
    builder.add_batch(0, design, values, obs.incumbent, 0.0, 0.0)
    return obs


def _update_model(
    model: gp.GaussianProcessModel | None,
    obs: ObservationSet,
    config: LoopConfig,
    fit_cfg: gp.FitConfig,
    t: int,
) -> gp.GaussianProcessModel:
    """Refit hyperparameters on schedule; otherwise re-condition on all data.

    A failed fit is retried once with a doubled nugget; a second failure
    propagates so the loop can abort with a flagged partial record.
    """
    fit_seed = derive_seed(config.seed, STREAM_FIT, t)
    if model is None or (t - 1) % config.refit_every == 0:
        try:
            return gp.fit(obs, fit_cfg, fit_seed)
        except (gp.GPNumericalError, gp.GPFitError):
            bigger = replace(fit_cfg, nugget_factor=fit_cfg.nugget_factor * 2.0)
            return gp.fit(obs, bigger, fit_seed)
    try:
        return gp.condition(model, obs)
    except gp.GPNumericalError:
        return gp.fit(obs, fit_cfg, fit_seed)


def _apply_jitter(
    X: np.ndarray,
    obs: ObservationSet,
    box: Box,
    config: LoopConfig,
    t: int,
) -> tuple[np.ndarray, list[bool]]:
    """Nudge query points that duplicate an evaluated (or same-batch) point."""
    width = box.width
    seen = (obs.design - box.lower) / width
    out = X.copy()
    flags: list[bool] = []
    for i in range(out.shape[0]):
        xn = (out[i] - box.lower) / width
        dmin = float(np.min(np.linalg.norm(seen - xn, axis=1)))
        if dmin < DUPLICATE_TOL:
            rng = rng_for(config.seed, STREAM_JITTER, t, i)
            out[i] = box.clip(
                out[i] + rng.uniform(-1.0, 1.0, box.dim) * width * JITTER_SCALE
            )
            xn = (out[i] - box.lower) / width
            flags.append(True)
        else:
            flags.append(False)
        seen = np.vstack([seen, xn[None, :]])
    return out, flags


def _n_iterations(config: LoopConfig, q: int, algorithm: str) -> int:
    budget = config.n_max - config.n_init
    if budget % q != 0:
        raise ValueError(
            f"{algorithm}: acquisition budget {budget} not divisible by q={q}"
        )
    return budget // q


def _maximize_ei_task(model, f_min: float, box: Box, ga_cfg: GAConfig) -> np.ndarray:
    def objective(X):
        return expected_improvement_batch(model, f_min, X)

    best_x, _, _ = maximize(objective, box, ga_cfg, vectorized=True)
    return best_x


def _run_model_loop(
    problem: ProblemInstance,
    config: LoopConfig,
    algorithm: str,
    q: int,
    select_batch,
) -> RunRecord:
    """Shared driver: init design, then T iterations of fit/select/evaluate."""
    builder = _RunBuilder(algorithm, problem, config, q)
    obs = _initial_observations(problem, config, builder)
    n_iters = _n_iterations(config, q, algorithm)
    fit_cfg = _fit_config(config, problem.box)
    model = None
    for t in range(1, n_iters + 1):
        t0 = time.perf_counter()
        try:
            model = _update_model(model, obs, config, fit_cfg, t)
        except (gp.GPNumericalError, gp.GPFitError):
            builder.failed = True
            break
        t1 = time.perf_counter()
        X, iter_debug = select_batch(model, obs, t)
        X, jittered = _apply_jitter(X, obs, problem.box, config, t)
        t2 = time.perf_counter()
        values = evaluate_batch(problem, X)
        obs = obs.extend(X, values)
        iter_debug["jittered"] = jittered
        builder.debug["iterations"].append(iter_debug)
        builder.add_batch(t, X, values, obs.incumbent, t2 - t1, t1 - t0)
    return builder.build()


def run_sequential_ei(problem: ProblemInstance, config: LoopConfig) -> RunRecord:
    """Standard one-point-per-iteration loop maximizing EI over the full box."""

    def select(model, obs, t):
        ga_cfg = _ga_for(config, problem.dim, derive_seed(config.seed, STREAM_ACQ, t, 0))
        x = _maximize_ei_task(model, obs.incumbent.f_min, problem.box, ga_cfg)
        return x[None, :], {"x_min": obs.incumbent.x_min.copy()}

    return _run_model_loop(problem, config, "sequential-ei", 1, select)


def run_batch_essi(problem: ProblemInstance, config: LoopConfig) -> RunRecord:
    """Batch loop: q random subspaces, one acquisition maximizer in each,
    embedded into the iteration's incumbent.

    The q subspace searches are independent and run concurrently when
    config.workers > 1; per-task seed streams keep the result identical to
    the serial schedule.
    """
    q = config.q

    def select(model, obs, t):
        inc = obs.incumbent  # one snapshot for all q subproblems
        subspaces = draw_batch(
            problem.dim, q, config.subspace_strategy,
            derive_seed(config.seed, STREAM_SUBSPACE, t),
        )

        def task(i: int) -> np.ndarray:
            sub = subspaces[i]
            spec = AcquisitionSpec(
                model, inc, sub, problem.box.subset(sub.as_array())
            )
            ga_cfg = _ga_for(
                config, sub.size, derive_seed(config.seed, STREAM_ACQ, t, i)
            )

            def objective(Y):
                return essi_batch(spec, Y)

            y_best, _, _ = maximize(objective, spec.box, ga_cfg, vectorized=True)
            return embed(inc, sub, y_best)

        if config.workers > 1 and q > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                points = list(pool.map(task, range(q)))
        else:
            points = [task(i) for i in range(q)]
        debug = {
            "x_min": inc.x_min.copy(),
            "subspaces": [s.indices for s in subspaces],
            "pre_jitter": [p.copy() for p in points],
        }
        return np.asarray(points), debug

    return _run_model_loop(problem, config, "batch-essi", q, select)


def run_batch_kb(problem: ProblemInstance, config: LoopConfig) -> RunRecord:
    """Kriging-believer batch: points picked one at a time against a model
    conditioned on its own mean predictions; fantasies are discarded before
    the real evaluations.

    EI always uses the true observed minimum, never a fantasy value.
    """
    q = config.q

    def select(model, obs, t):
        f_min_real = obs.incumbent.f_min
        fantasy = model
        points: list[np.ndarray] = []
        fantasy_values: list[float] = []
        for i in range(q):
            ga_cfg = _ga_for(
                config, problem.dim, derive_seed(config.seed, STREAM_ACQ, t, i)
            )
            x = _maximize_ei_task(fantasy, f_min_real, problem.box, ga_cfg)
            y_fake, _ = gp.predict(fantasy, x)
            fantasy_values.append(float(y_fake))
            if i < q - 1:
                try:
                    fantasy = gp.fantasy_update(fantasy, x, y_fake)
                except ValueError:
                    rng = rng_for(config.seed, STREAM_JITTER, t, i, 1)
                    x = problem.box.clip(
                        x + rng.uniform(-1.0, 1.0, problem.dim)
                        * problem.box.width * JITTER_SCALE
                    )
                    y_fake, _ = gp.predict(fantasy, x)
                    fantasy_values[-1] = float(y_fake)
                    try:
                        fantasy = gp.fantasy_update(fantasy, x, y_fake)
                    except (ValueError, gp.GPNumericalError):
                        pass  # keep selecting against the current fantasy model
                except gp.GPNumericalError:
                    pass
            points.append(x)
        debug = {
            "x_min": obs.incumbent.x_min.copy(),
            "fantasy_values": fantasy_values,
        }
        return np.asarray(points), debug

    return _run_model_loop(problem, config, "batch-kb", q, select)


def run_random_search(problem: ProblemInstance, config: LoopConfig) -> RunRecord:
    """LHS initialization plus uniform sampling, batched by q for fair
    iteration accounting."""
    q = config.q
    builder = _RunBuilder("random", problem, config, q)
    obs = _initial_observations(problem, config, builder)
    n_iters = _n_iterations(config, q, "random")
    for t in range(1, n_iters + 1):
        rng = rng_for(config.seed, STREAM_SEARCH, t)
        X = problem.box.lower + rng.random((q, problem.dim)) * problem.box.width
        values = evaluate_batch(problem, X)
        obs = obs.extend(X, values)
        builder.debug["iterations"].append({})
        builder.add_batch(t, X, values, obs.incumbent, 0.0, 0.0)
    return builder.build()


ALGORITHMS = {
    "sequential-ei": run_sequential_ei,
    "batch-essi": run_batch_essi,
    "batch-kb": run_batch_kb,
    "random": run_random_search,
}


def run_algorithm(name: str, problem: ProblemInstance, config: LoopConfig) -> RunRecord:
    if name not in ALGORITHMS:
        raise ValueError(
            f"unknown algorithm {name!r}; expected one of {sorted(ALGORITHMS)}"
        )
    return ALGORITHMS[name](problem, config)
