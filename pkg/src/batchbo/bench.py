"""Experiment orchestration: planning, persistence, statistics, reporting.

Outputs under an experiment directory:

    records/<problem>__<algorithm>__q<q>__r<repeat>.csv   one per run
    summary.csv        final regret per run
    significance.csv   Wilcoxon verdicts of every cohort against the baseline
    timing.csv         per-run mean per-iteration acquisition/fit wall time
    manifest.json      file inventory and per-run status
    aggregates/        written by `report`: median and quartile regret curves

Quartiles use linear interpolation between closest ranks (numpy's default
percentile rule); the rule is restated in every aggregate file header.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .bo import LoopConfig, run_algorithm, ALGORITHMS
from .ga import GAConfig
from .gp import FitConfig
from .problems import problem_from_name
from .records import RunRecord
from .rng import derive_seed
from .subspace import SubspaceStrategy

PERCENTILE_RULE = "linear interpolation between closest ranks (numpy 'linear')"


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def simple_regret(record: RunRecord, f_star: float) -> np.ndarray:
    """Per-iteration difference between the found minimum and the true one."""
    if record.failed:
        raise ValueError("record is a flagged partial run")
    return record.incumbent_trace - float(f_star)


@dataclass(frozen=True)
class AggregateCurve:
    """Pointwise median and quartiles of simple regret across repeats."""

    median: np.ndarray
    q1: np.ndarray
    q3: np.ndarray

    def __post_init__(self):
        if not (self.q1.shape == self.median.shape == self.q3.shape):
            raise ValueError("quartile arrays must share one shape")
        if np.any(self.q1 > self.median + 1e-12) or np.any(self.median > self.q3 + 1e-12):
            raise ValueError("expected q1 <= median <= q3 pointwise")


def aggregate(records: list[RunRecord], f_star: float) -> AggregateCurve:
    """Pointwise order statistics of the regret traces of a cohort."""
    if not records:
        raise ValueError("no records to aggregate")
    lengths = {r.incumbent_trace.size for r in records}
    if len(lengths) != 1:
        raise ValueError(f"records have mismatched iteration counts: {sorted(lengths)}")
    traces = np.vstack([simple_regret(r, f_star) for r in records])
    q1, med, q3 = np.percentile(traces, [25.0, 50.0, 75.0], axis=0, method="linear")
    return AggregateCurve(median=med, q1=q1, q3=q3)


def _exact_two_sided_p(ranks: np.ndarray, w_plus: float) -> float:
    """Doubled-tail p of W+ by full enumeration of the 2^n sign patterns."""
    n = ranks.size
    bits = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
    dist = bits @ ranks
    eps = 1e-9
    p_low = float(np.mean(dist <= w_plus + eps))
    p_high = float(np.mean(dist >= w_plus - eps))
    return min(1.0, 2.0 * min(p_low, p_high))


def _approx_two_sided_p(ranks: np.ndarray, w_plus: float) -> float:
    """Normal approximation with continuity and tie corrections."""
    n = ranks.size
    mn = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(ranks, return_counts=True)
    var -= float(np.sum(counts**3 - counts)) / 48.0
    dev = w_plus - mn
    cc = 0.5 * np.sign(dev)
    z = (dev - cc) / math.sqrt(var) if var > 0 else 0.0
    p = 2.0 * 0.5 * (1.0 - math.erf(abs(z) / math.sqrt(2.0)))
    return min(1.0, p)


def wilcoxon_signed_rank(
    a, b, alpha: float = 0.05
) -> tuple[float, float, str]:
    """Two-sided Wilcoxon signed-rank test of paired samples.

    Zero differences are dropped; tied absolute differences get averaged
    ranks. The null distribution is enumerated exactly for n <= 12 and
    normal-approximated (continuity correction) above. Returns
    (statistic, p, verdict) where the statistic is min(W+, W-) and the
    verdict encodes the direction: 'better' means a is significantly lower
    than b at level alpha, 'worse' the opposite, 'similar' otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("need paired 1-D samples of equal length")
    diff = a - b
    nz = diff[diff != 0.0]
    if nz.size == 0:
        return 0.0, 1.0, "similar"
    if nz.size < 5:
        raise ValueError(
            f"need >= 5 nonzero differences for the test, got {nz.size}"
        )
    ranks = rankdata(np.abs(nz))
    w_plus = float(np.sum(ranks[nz > 0]))
    w_minus = float(np.sum(ranks)) - w_plus
    statistic = min(w_plus, w_minus)
    if nz.size <= 12:
        p = _exact_two_sided_p(ranks, w_plus)
    else:
        p = _approx_two_sided_p(ranks, w_plus)
    median_diff = float(np.median(diff))
    if p < alpha and median_diff < 0.0:
        verdict = "better"
    elif p < alpha and median_diff > 0.0:
        verdict = "worse"
    else:
        verdict = "similar"
    return statistic, p, verdict


_VERDICT_SYMBOL = {"better": "+", "worse": "-", "similar": "~", "n/a": "?"}


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce an experiment directory.

    n_init=0 means the 10*d rule; ga_population=0 means the acquisition-GA
    sizing rule max(20, 10k). The key names match the config-file keys
    one-to-one (see load_config).
    """

    problems: tuple[str, ...]
    algorithms: tuple[str, ...]
    batch_sizes: tuple[int, ...] = (4,)
    repeats: int = 30
    base_seed: int = 2024
    output_dir: str = "results"
    parallel_workers: int = 1
    alpha: float = 0.05
    baseline: str = ""
    n_init: int = 0
    budget: int = 512
    refit_every: int = 1
    subspace_dedup: bool = False
    ga_population: int = 0
    ga_generations: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float = -1.0
    eta: float = 20.0
    fit_population: int = 30
    fit_generations: int = 50

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.problems:
            raise ValueError("no problems configured")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ValueError(
                    f"unknown algorithm {algo!r}; expected one of {sorted(ALGORITHMS)}"
                )
        for q in self.batch_sizes:
            if q < 1:
                raise ValueError("batch sizes must be >= 1")
            if self.budget % q != 0:
                raise ValueError(f"budget {self.budget} not divisible by q={q}")

    def baseline_algorithm(self) -> str:
        return self.baseline if self.baseline else self.algorithms[0]


_DEFAULTS = ExperimentConfig(problems=("sphere-d5-seed1",), algorithms=("sequential-ei",))


def load_config(path) -> ExperimentConfig:
    """Read a key = value config file ([experiment] and [loop] sections)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    exp = parser["experiment"] if parser.has_section("experiment") else {}
    loop = parser["loop"] if parser.has_section("loop") else {}

    def split_list(raw: str) -> tuple[str, ...]:
        return tuple(s.strip() for s in raw.split(",") if s.strip())

    def get(section, key, cast, default):
        if key not in section:
            return default
        if cast is bool:
            return str(section[key]).strip().lower() in ("1", "true", "yes", "on")
        return cast(section[key])

    return ExperimentConfig(
        problems=split_list(exp.get("problems", "")),
        algorithms=split_list(exp.get("algorithms", "")) or ("sequential-ei",),
        batch_sizes=tuple(
            int(s) for s in split_list(exp.get("batch_sizes", "4"))
        ),
        repeats=get(exp, "repeats", int, _DEFAULTS.repeats),
        base_seed=get(exp, "base_seed", int, _DEFAULTS.base_seed),
        output_dir=exp.get("output_dir", _DEFAULTS.output_dir),
        parallel_workers=get(exp, "parallel_workers", int, 1),
        alpha=get(exp, "alpha", float, 0.05),
        baseline=exp.get("baseline", ""),
        n_init=get(loop, "n_init", int, 0),
        budget=get(loop, "budget", int, 512),
        refit_every=get(loop, "refit_every", int, 1),
        subspace_dedup=get(loop, "subspace_dedup", bool, False),
        ga_population=get(loop, "ga_population", int, 0),
        ga_generations=get(loop, "ga_generations", int, 100),
        crossover_rate=get(loop, "crossover_rate", float, 0.9),
        mutation_rate=get(loop, "mutation_rate", float, -1.0),
        eta=get(loop, "eta", float, 20.0),
        fit_population=get(loop, "fit_population", int, 30),
        fit_generations=get(loop, "fit_generations", int, 50),
    )


# ---------------------------------------------------------------------------
# planning and execution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunSpec:
    problem: str
    algorithm: str
    q: int
    repeat: int

    def filename(self) -> str:
        return f"{self.problem}__{self.algorithm}__q{self.q}__r{self.repeat}.csv"


def _name_hash(text: str) -> int:
    import hashlib

    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def plan_runs(config: ExperimentConfig) -> list[RunSpec]:
    runs = []
    for problem in config.problems:
        for algorithm in config.algorithms:
            qs = (1,) if algorithm == "sequential-ei" else config.batch_sizes
            for q in qs:
                for r in range(config.repeats):
                    runs.append(RunSpec(problem, algorithm, q, r))
    return runs


def loop_config_for(config: ExperimentConfig, spec: RunSpec, dim: int) -> LoopConfig:
    n_init = config.n_init if config.n_init > 0 else 10 * dim
    # The run seed depends only on (base seed, problem, repeat): every
    # algorithm sees the same initial design for a given repeat.
    run_seed = derive_seed(config.base_seed, _name_hash(spec.problem), spec.repeat)
    ga = None
    if config.ga_population > 0:
        ga = GAConfig(
            population=config.ga_population,
            generations=config.ga_generations,
            crossover_rate=config.crossover_rate,
            mutation_rate=None if config.mutation_rate < 0 else config.mutation_rate,
            eta_crossover=config.eta,
            eta_mutation=config.eta,
        )
    return LoopConfig(
        n_init=n_init,
        n_max=n_init + config.budget,
        seed=run_seed,
        q=spec.q,
        ga=ga,
        ga_generations=config.ga_generations,
        subspace_strategy=SubspaceStrategy(dedup=config.subspace_dedup),
        refit_every=config.refit_every,
        fit=FitConfig(
            population=config.fit_population,
            generations=config.fit_generations,
        ),
    )


def execute_run(config: ExperimentConfig, spec: RunSpec, records_dir) -> dict:
    """Run one (problem, algorithm, q, repeat) cell and write its CSV."""
    path = Path(records_dir) / spec.filename()
    try:
        problem = problem_from_name(spec.problem)
        loop_cfg = loop_config_for(config, spec, problem.dim)
        expected_digest = loop_cfg.digest(spec.algorithm, problem.name, spec.q)
        if path.exists():
            try:
                header = RunRecord.read_header(path)
            except (ValueError, OSError):
                header = None
            if (
                header
                and header.get("config_digest") == expected_digest
                and not header.get("failed", False)
            ):
                return {"file": path.name, "status": "cached", **spec.__dict__}
        record = run_algorithm(spec.algorithm, problem, loop_cfg)
    except Exception as exc:  # a crashed run must not poison the experiment
        return {"file": path.name, "status": f"error: {exc}", **spec.__dict__}
    record.to_csv(path)
    status = "partial" if record.failed else "completed"
    return {"file": path.name, "status": status, **spec.__dict__}


def _execute_run_star(args):
    return execute_run(*args)


def run_experiment(config: ExperimentConfig, force: bool = False) -> dict:
    """Execute all planned runs (skipping digest-matched completed ones),
    then write the summary, significance, and timing files.

    Returns the manifest; a nonzero number of failures is reported in it and
    should map to a nonzero process exit code.
    """
    out = Path(config.output_dir)
    records_dir = out / "records"
    records_dir.mkdir(parents=True, exist_ok=True)
    runs = plan_runs(config)
    if force:
        for spec in runs:
            p = records_dir / spec.filename()
            if p.exists():
                p.unlink()

    args = [(config, spec, records_dir) for spec in runs]
    if config.parallel_workers > 1:
        with ProcessPoolExecutor(max_workers=config.parallel_workers) as pool:
            results = list(pool.map(_execute_run_star, args))
    else:
        results = [execute_run(*a) for a in args]

    manifest = {
        "schema": "batchbo-manifest-v1",
        "output_dir": str(out),
        "baseline": config.baseline_algorithm(),
        "alpha": config.alpha,
        "runs": results,
        "failures": [r for r in results if r["status"].startswith(("error", "partial"))],
    }
    _write_summary(config, records_dir, out)
    _write_significance(config, out)
    _write_timing(out)
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def _load_cohorts(records_dir) -> dict[tuple[str, str, int], list[RunRecord]]:
    cohorts: dict[tuple[str, str, int], list[RunRecord]] = {}
    for path in sorted(Path(records_dir).glob("*.csv")):
        try:
            rec = RunRecord.from_csv(path)
        except (ValueError, OSError):
            continue
        if rec.failed:
            continue
        cohorts.setdefault((rec.problem_name, rec.algorithm, rec.q), []).append(rec)
    return cohorts


def _write_summary(config: ExperimentConfig, records_dir, out: Path) -> None:
    rows = []
    for path in sorted(Path(records_dir).glob("*.csv")):
        try:
            rec = RunRecord.from_csv(path)
        except (ValueError, OSError):
            continue
        if rec.failed:
            continue
        f_star = problem_from_name(rec.problem_name).f_star
        rows.append({
            "problem": rec.problem_name,
            "algorithm": rec.algorithm,
            "q": rec.q,
            "seed": rec.seed,
            "final_fmin": repr(rec.final_f_min()),
            "final_regret": repr(rec.final_f_min() - f_star),
            "n_evaluations": rec.n_evaluations,
            "total_acq_s": repr(float(np.sum(rec.acq_time_s))),
            "total_fit_s": repr(float(np.sum(rec.fit_time_s))),
            "file": path.name,
        })
    _write_csv(out / "summary.csv", rows, header_note="final values per run")


def significance_rows(summary_path, baseline: str, alpha: float) -> list[dict]:
    """Recompute the verdict table from a summary file.

    Rows are keyed by (problem, q, algorithm) and compared against the
    baseline cohort (q=1 when the baseline is sequential-ei, same q
    otherwise).
    """
    by_cohort: dict[tuple[str, str, int], dict[str, float]] = {}
    with open(summary_path, encoding="utf-8") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for row in reader:
            key = (row["problem"], row["algorithm"], int(row["q"]))
            by_cohort.setdefault(key, {})[row["file"]] = float(row["final_regret"])
    rows = []
    for (problem, algorithm, q) in sorted(by_cohort):
        if algorithm == baseline:
            continue
        base_q = 1 if baseline == "sequential-ei" else q
        base_key = (problem, baseline, base_q)
        if base_key not in by_cohort:
            continue
        ours = [v for _, v in sorted(by_cohort[(problem, algorithm, q)].items())]
        theirs = [v for _, v in sorted(by_cohort[base_key].items())]
        if len(ours) != len(theirs):
            continue
        try:
            stat, p, verdict = wilcoxon_signed_rank(ours, theirs, alpha)
        except ValueError:
            stat, p, verdict = float("nan"), float("nan"), "n/a"
        rows.append({
            "problem": problem,
            "q": q,
            "algorithm": algorithm,
            "baseline": baseline,
            "statistic": repr(stat),
            "p_value": repr(p),
            "verdict": verdict,
            "symbol": _VERDICT_SYMBOL[verdict],
        })
    return rows


def _write_significance(config: ExperimentConfig, out: Path) -> None:
    rows = significance_rows(
        out / "summary.csv", config.baseline_algorithm(), config.alpha
    )
    _write_csv(
        out / "significance.csv",
        rows,
        header_note=(
            f"two-sided Wilcoxon signed-rank vs baseline at alpha={config.alpha}; "
            "+ better, - worse, ~ similar"
        ),
    )


def _write_timing(out: Path) -> None:
    rows = []
    records_dir = out / "records"
    for path in sorted(records_dir.glob("*.csv")):
        try:
            rec = RunRecord.from_csv(path)
        except (ValueError, OSError):
            continue
        iters = rec.iterations
        mean_acq = float(np.mean(rec.acq_time_s[1:]) * 1e3) if iters else 0.0
        mean_fit = float(np.mean(rec.fit_time_s[1:]) * 1e3) if iters else 0.0
        rows.append({
            "problem": rec.problem_name,
            "algorithm": rec.algorithm,
            "q": rec.q,
            "seed": rec.seed,
            "mean_iter_acq_ms": repr(mean_acq),
            "mean_iter_fit_ms": repr(mean_fit),
            "iterations": iters,
            "file": path.name,
        })
    _write_csv(out / "timing.csv", rows,
               header_note="per-iteration wall time averaged within each run")


def _write_csv(path, rows: list[dict], header_note: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_note:
            fh.write(f"# {header_note}\n")
        if not rows:
            fh.write("# (no rows)\n")
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

def write_aggregates(output_dir) -> tuple[list[str], list[str]]:
    """Aggregate every complete cohort into a median/quartile curve CSV.

    Returns (written files, warnings about skipped cohorts). Both x-axes are
    emitted: the iteration index and the cumulative evaluation count.
    """
    out = Path(output_dir)
    cohorts = _load_cohorts(out / "records")
    agg_dir = out / "aggregates"
    agg_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    warnings: list[str] = []
    sizes = {}
    for (problem, algorithm, q), recs in cohorts.items():
        sizes.setdefault(problem, set()).add(len(recs))
    for (problem, algorithm, q), recs in sorted(cohorts.items()):
        expected = max(sizes[problem])
        if len(recs) < expected:
            warnings.append(
                f"cohort {problem}/{algorithm}/q{q}: only {len(recs)} of "
                f"{expected} runs usable; skipped"
            )
            continue
        f_star = problem_from_name(problem).f_star
        try:
            curve = aggregate(recs, f_star)
        except ValueError as exc:
            warnings.append(f"cohort {problem}/{algorithm}/q{q}: {exc}")
            continue
        n_init = recs[0].n_init
        path = agg_dir / f"{problem}__{algorithm}__q{q}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# aggregate of {len(recs)} runs; quartile rule: {PERCENTILE_RULE}\n")
            fh.write(f"# problem = {problem}\n# algorithm = {algorithm}\n# q = {q}\n")
            fh.write("iteration,evaluations,regret_median,regret_q1,regret_q3\n")
            for t in range(curve.median.size):
                evals = n_init + t * q
                fh.write(
                    f"{t},{evals},{float(curve.median[t])!r},"
                    f"{float(curve.q1[t])!r},{float(curve.q3[t])!r}\n"
                )
        written.append(str(path))
    return written, warnings
