"""Acceptance suite: one test per release criterion, fast ones first.

Each test prints `ACCEPTANCE <id> <slug>: PASS|FAIL (elapsed)` so the run log
doubles as the acceptance report. The suite exercises only the primary
package (no plotting component involved).
"""

import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
import scipy.stats

from batchbo.acquisition import (
    AcquisitionSpec,
    essi_batch,
    expected_improvement_batch,
    expected_improvement_values,
)
from batchbo.bench import ExperimentConfig, run_experiment, wilcoxon_signed_rank
from batchbo.bo import LoopConfig, run_batch_essi, run_batch_kb, run_sequential_ei
from batchbo.doe import Box
from batchbo.ga import GAConfig
from batchbo.gp import (
    FitConfig,
    KernelParams,
    build_model,
    fantasy_update,
    kernel_eval,
    predict,
    predict_batch,
)
from batchbo.observations import Incumbent
from batchbo.problems import make_problem, problem_from_name
from batchbo.records import RunRecord
from batchbo.subspace import Subspace, count_subspaces


@contextmanager
def criterion(tag: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {tag}: FAIL ({time.perf_counter() - start:.1f}s)",
              flush=True)
        raise
    print(f"\nACCEPTANCE {tag}: PASS ({time.perf_counter() - start:.1f}s)",
          flush=True)


def random_model(d: int, n: int, seed: int):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 3.0, (n, d))
    y = rng.standard_normal(n)
    sv = float(rng.uniform(0.5, 2.0))
    params = KernelParams(sv, rng.uniform(0.3, 2.0, d), 1e-10 * sv)
    return build_model(X, y, float(np.mean(y)), params), X, y


def test_c01_subspace_counting():
    with criterion("C01 subspace-counting"):
        assert count_subspaces(10) == 1023
        assert count_subspaces(20) == 1_048_575


def test_c02_essi_ei_identity():
    # Full-space subspace acquisition must equal plain EI to 1e-12 on
    # 20 random models across d in {2, 5, 10}, 100 points each.
    with criterion("C02 essi-ei-identity"):
        cases = [(2, 7), (5, 7), (10, 6)]
        seed = 0
        for d, n_models in cases:
            for _ in range(n_models):
                seed += 1
                model, X, y = random_model(d, 12 + d, seed)
                k = int(np.argmin(y))
                inc = Incumbent(X[k], float(y[k]))
                spec = AcquisitionSpec(
                    model, inc, Subspace(tuple(range(d))), Box.cube(-1.0, 3.0, d)
                )
                pts = np.random.default_rng(1000 + seed).uniform(-1, 3, (100, d))
                gap = np.abs(
                    essi_batch(spec, pts)
                    - expected_improvement_batch(model, inc.f_min, pts)
                )
                assert np.max(gap) <= 1e-12


def test_c03_ei_closed_form_vs_monte_carlo():
    # Closed form vs 1e7-sample Monte Carlo of E[max(f_min - N(mu, s^2), 0)]
    # within 3 standard errors on >= 48 of 50 random triples.
    with criterion("C03 ei-monte-carlo"):
        rng = np.random.default_rng(7)
        n_draws = 10_000_000
        ok = 0
        for _ in range(50):
            mu = float(rng.uniform(-1.0, 1.0))
            sigma = float(rng.uniform(0.2, 2.5))
            f_min = mu + sigma * float(rng.uniform(-2.0, 2.0))
            draws = mu + sigma * rng.standard_normal(n_draws)
            imp = np.maximum(f_min - draws, 0.0)
            mc = float(np.mean(imp))
            se = float(np.std(imp)) / math.sqrt(n_draws)
            closed = float(
                expected_improvement_values(
                    f_min, np.array([mu]), np.array([sigma**2])
                )[0]
            )
            ok += abs(closed - mc) <= 3.0 * se
        assert ok >= 48, f"only {ok}/50 triples within 3 standard errors"


def test_c04_gp_oracle_equivalence():
    # predict vs a dense matrix-inverse implementation of the posterior
    # formulas on 3- and 30-point datasets; fantasy update vs full rebuild.
    with criterion("C04 gp-oracle-equivalence"):
        def dense(X, y, mean_constant, params, x):
            n = X.shape[0]
            K = np.array(
                [[kernel_eval(params, X[i], X[j]) for j in range(n)] for i in range(n)]
            ) + params.nugget * np.eye(n)
            Kinv = np.linalg.inv(K)
            ks = np.array([kernel_eval(params, x, X[i]) for i in range(n)])
            return (
                ks @ Kinv @ (y - mean_constant) + mean_constant,
                kernel_eval(params, x, x) - ks @ Kinv @ ks,
            )

        for n, d, seed in ((3, 1, 1), (30, 3, 2)):
            model, X, y = random_model(d, n, seed)
            rng = np.random.default_rng(100 + seed)
            for _ in range(30):
                x = rng.uniform(-1, 3, d)
                mean, var = predict(model, x)
                dm, dv = dense(X, y, model.mean_constant, model.kernel, x)
                assert abs(mean - dm) < 1e-8
                assert abs(var - max(dv, 0.0)) < 1e-8

        model, X, y = random_model(2, 12, 9)
        x_new = np.array([0.5, 2.5])
        updated = fantasy_update(model, x_new, 0.33)
        rebuilt = build_model(
            np.vstack([X, x_new]),
            np.concatenate([y, [0.33]]),
            model.mean_constant,
            model.kernel,
        )
        pts = np.random.default_rng(11).uniform(-1, 3, (100, 2))
        mu_u, var_u = predict_batch(updated, pts)
        mu_r, var_r = predict_batch(rebuilt, pts)
        assert np.max(np.abs(mu_u - mu_r)) < 1e-8
        assert np.max(np.abs(var_u - var_r)) < 1e-8


def test_c05_statistics_exact_wilcoxon():
    # Exact p-values against a brute-force enumeration oracle for every sign
    # pattern at n = 5 and n = 6.
    with criterion("C05 wilcoxon-exact"):
        def oracle(diffs):
            ranks = scipy.stats.rankdata(np.abs(diffs))
            w_obs = ranks[diffs > 0].sum()
            dist = [
                sum(r for r, bit in zip(ranks, bits) if bit)
                for bits in itertools.product((0, 1), repeat=len(diffs))
            ]
            dist = np.asarray(dist)
            p_low = np.mean(dist <= w_obs + 1e-9)
            p_high = np.mean(dist >= w_obs - 1e-9)
            return min(1.0, 2.0 * min(p_low, p_high))

        for n in (5, 6):
            mags = np.arange(1.0, n + 1)
            for signs in itertools.product((1.0, -1.0), repeat=n):
                diffs = mags * np.asarray(signs)
                _, p, _ = wilcoxon_signed_rank(diffs, np.zeros(n))
                assert p == pytest.approx(oracle(diffs), abs=1e-12)


def test_c06_iteration_accounting():
    # 512 post-init evaluations with q in {2..128} must run exactly
    # {256,...,4} iterations (5-D sphere, stubbed 1-generation GA).
    with criterion("C06 iteration-accounting"):
        p = problem_from_name("sphere-d5-seed1")
        expected = {2: 256, 4: 128, 8: 64, 16: 32, 32: 16, 64: 8, 128: 4}
        for q, iters in expected.items():
            cfg = LoopConfig(
                n_init=50,
                n_max=50 + 512,
                seed=1000 + q,
                q=q,
                ga=GAConfig(population=20, generations=1),
                fit=FitConfig(population=2, generations=1),
            )
            rec = run_batch_essi(p, cfg)
            assert rec.iterations == iters, f"q={q}: {rec.iterations} iterations"
            assert rec.n_evaluations == 562


def test_c07_subspace_structure_invariant():
    # Over a full seeded 5-D q=8 run, every query point agrees with the
    # iteration incumbent on all non-subspace coordinates exactly.
    with criterion("C07 subspace-structure"):
        p = problem_from_name("rastrigin-d5-seed2")
        cfg = LoopConfig(n_init=20, n_max=100, seed=77, q=8)
        rec = run_batch_essi(p, cfg)
        assert rec.iterations == 10
        checked = 0
        for info in rec.debug["iterations"]:
            x_min = info["x_min"]
            for sub, point in zip(info["subspaces"], info["pre_jitter"]):
                outside = [j for j in range(5) if j not in sub]
                assert np.array_equal(point[outside], x_min[outside])
                checked += len(outside)
        assert checked > 0


def test_c08_degeneration_checks():
    # Batch loops with q=1 must reproduce sequential EI bit-exactly
    # (d=1 for the subspace loop, where the only subspace is the full space).
    with criterion("C08 degeneration"):
        p1 = problem_from_name("sphere-d1-seed3")
        cfg1 = LoopConfig(n_init=6, n_max=16, seed=5, q=1)
        assert run_batch_essi(p1, cfg1).digest() == run_sequential_ei(p1, cfg1).digest()

        p2 = problem_from_name("ackley-d2-seed4")
        cfg2 = LoopConfig(n_init=8, n_max=16, seed=6, q=1)
        assert run_batch_kb(p2, cfg2).digest() == run_sequential_ei(p2, cfg2).digest()


def test_c09_parallel_determinism():
    # One worker vs eight workers: identical trajectory digests.
    with criterion("C09 parallel-determinism"):
        import dataclasses

        p = problem_from_name("griewank-d5-seed5")
        cfg = LoopConfig(n_init=20, n_max=60, seed=21, q=8, workers=1)
        cfg8 = dataclasses.replace(cfg, workers=8)
        assert run_batch_essi(p, cfg).digest() == run_batch_essi(p, cfg8).digest()


def test_c10_behavioral_check(tmp_path):
    # Scaled-down analogue of the headline comparison: on four seeded 5-D
    # instances with 50 + 128 evaluations and 10 repeats, batch-ESSI q=4 must
    # beat random search on all four medians and match or beat sequential EI
    # on at least two.
    with criterion("C10 behavioral"):
        config = ExperimentConfig(
            problems=(
                "sphere-d5-seed1",
                "ellipsoid-d5-seed1",
                "rosenbrock-d5-seed1",
                "rastrigin-d5-seed1",
            ),
            algorithms=("sequential-ei", "batch-essi", "random"),
            batch_sizes=(4,),
            repeats=10,
            base_seed=424242,
            output_dir=str(tmp_path / "behavioral"),
            n_init=50,
            budget=128,
        )
        manifest = run_experiment(config)
        assert not manifest["failures"], manifest["failures"]

        import csv

        medians: dict[tuple[str, str], float] = {}
        grouped: dict[tuple[str, str], list[float]] = {}
        with open(tmp_path / "behavioral" / "summary.csv", encoding="utf-8") as fh:
            for row in csv.DictReader(r for r in fh if not r.startswith("#")):
                grouped.setdefault(
                    (row["problem"], row["algorithm"]), []
                ).append(float(row["final_regret"]))
        for key, vals in grouped.items():
            assert len(vals) == 10
            medians[key] = float(np.median(vals))

        beats_random = 0
        at_or_below_seq = 0
        for prob in config.problems:
            essi = medians[(prob, "batch-essi")]
            rand = medians[(prob, "random")]
            seq = medians[(prob, "sequential-ei")]
            print(f"  {prob}: essi={essi:.4g} seq={seq:.4g} random={rand:.4g}",
                  flush=True)
            beats_random += essi < rand
            at_or_below_seq += essi <= seq
        assert beats_random == 4, f"batch-essi beat random on {beats_random}/4"
        assert at_or_below_seq >= 2, (
            f"batch-essi at/below sequential on {at_or_below_seq}/4"
        )
