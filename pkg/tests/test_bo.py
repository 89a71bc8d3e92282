import dataclasses

import numpy as np
import pytest

from batchbo.bo import (
    LoopConfig,
    run_batch_essi,
    run_batch_kb,
    run_random_search,
    run_sequential_ei,
)
from batchbo.ga import GAConfig
from batchbo.gp import FitConfig, fit, predict
from batchbo.observations import ObservationSet
from batchbo.problems import evaluate, make_problem
from batchbo.records import RunRecord
from batchbo.rng import STREAM_FIT, derive_seed

SMALL_GA = GAConfig(population=12, generations=6)
SMALL_FIT = FitConfig(population=8, generations=4)


def small_config(n_init, n_max, seed, q=1, **kw):
    return LoopConfig(
        n_init=n_init, n_max=n_max, seed=seed, q=q,
        ga=kw.pop("ga", SMALL_GA), fit=kw.pop("fit", SMALL_FIT), **kw,
    )


ALL_LOOPS = [run_sequential_ei, run_batch_essi, run_batch_kb, run_random_search]


class TestCommonContracts:
    def test_zero_iteration_budget(self):
        p = make_problem("sphere", 2, 1)
        cfg = small_config(6, 6, seed=3)
        rec = run_sequential_ei(p, cfg)
        assert rec.n_evaluations == 6
        assert rec.iterations == 0
        assert rec.incumbent_trace[0] == np.min(rec.f)

    @pytest.mark.parametrize("loop", ALL_LOOPS)
    def test_budget_and_monotonicity(self, loop):
        p = make_problem("rastrigin", 2, 2)
        cfg = small_config(6, 14, seed=5, q=2)
        rec = loop(p, cfg)
        assert rec.n_evaluations == cfg.n_max
        assert np.all(np.diff(rec.incumbent_trace) <= 0.0)
        assert np.all(rec.X >= p.box.lower) and np.all(rec.X <= p.box.upper)

    @pytest.mark.parametrize("loop", ALL_LOOPS)
    def test_seed_determinism(self, loop):
        p = make_problem("ackley", 2, 3)
        cfg = small_config(6, 12, seed=11, q=2)
        assert loop(p, cfg).digest() == loop(p, cfg).digest()

    def test_divisibility_enforced(self):
        p = make_problem("sphere", 2, 1)
        cfg = small_config(6, 13, seed=1, q=4)
        with pytest.raises(ValueError, match="divisible"):
            run_batch_essi(p, cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LoopConfig(n_init=1, n_max=5, seed=0)
        with pytest.raises(ValueError):
            LoopConfig(n_init=4, n_max=2, seed=0)
        with pytest.raises(ValueError):
            LoopConfig(n_init=4, n_max=8, seed=0, q=0)

    def test_true_objective_called_exactly_n_max_times(self):
        from batchbo import problems as problems_mod

        calls = {"n": 0}

        def counting_sphere(Z):
            calls["n"] += Z.shape[0]
            return np.sum(Z * Z, axis=1)

        try:
            problems_mod.register_base(
                "counting-sphere", counting_sphere, (-5.0, 5.0), 1,
                lambda d: np.zeros(d),
            )
        except ValueError:
            pass
        p = make_problem("counting-sphere", 2, None)
        calls["n"] = 0
        cfg = small_config(6, 14, seed=7, q=2)
        rec = run_batch_kb(p, cfg)  # KB uses fantasies: they must not count
        # one extra evaluation per make_problem consistency check is avoided
        # by constructing the problem before resetting the counter
        assert calls["n"] == cfg.n_max
        assert rec.n_evaluations == cfg.n_max


class TestSequentialEI:
    def test_x_sin_x_regret(self):
        # Fig-style 1-D demo: f(x) = x sin(x) on [0, 10]; the oracle minimum
        # comes from a dense grid.
        from batchbo import problems as problems_mod

        try:
            problems_mod.register_base(
                "xsinx",
                lambda Z: Z[:, 0] * np.sin(Z[:, 0]),
                (0.0, 10.0),
                1,
                lambda d: np.full(d, 10.0),  # grid-located boundary minimum
            )
        except ValueError:
            pass
        grid = np.linspace(0.0, 10.0, 1_000_001)
        f_star = float(np.min(grid * np.sin(grid)))
        p = make_problem("xsinx", 1, None)
        assert abs(p.f_star - f_star) < 1e-6
        hits = 0
        for seed in range(10):
            cfg = LoopConfig(
                n_init=6, n_max=26, seed=seed,
                ga=GAConfig(population=20, generations=40),
                fit=FitConfig(population=16, generations=12),
            )
            rec = run_sequential_ei(p, cfg)
            if rec.final_f_min() - f_star < 0.1:
                hits += 1
        assert hits >= 8

    def test_record_shape(self):
        p = make_problem("sphere", 2, 4)
        cfg = small_config(6, 10, seed=2)
        rec = run_sequential_ei(p, cfg)
        assert rec.iterations == 4
        assert rec.q == 1
        assert np.all(rec.iteration[6:] == np.arange(1, 5))
        assert np.all(rec.worker_slot[6:] == 0)
        assert rec.incumbent_trace.size == 5
        assert rec.acq_time_s.size == 5 and rec.fit_time_s.size == 5
        assert np.all(rec.fit_time_s[1:] > 0.0)


class TestBatchESSI:
    def test_iteration_accounting_small(self):
        p = make_problem("sphere", 3, 5)
        for q, iters in [(2, 6), (4, 3), (12, 1)]:
            cfg = small_config(6, 18, seed=4, q=q)
            rec = run_batch_essi(p, cfg)
            assert rec.iterations == iters
            assert rec.n_evaluations == 18

    def test_subspace_structure_invariant(self):
        p = make_problem("rastrigin", 4, 6)
        cfg = small_config(8, 24, seed=9, q=4)
        rec = run_batch_essi(p, cfg)
        for t, info in enumerate(rec.debug["iterations"], start=1):
            x_min = info["x_min"]
            for i, sub in enumerate(info["subspaces"]):
                point = info["pre_jitter"][i]
                outside = [j for j in range(4) if j not in sub]
                assert np.array_equal(point[outside], x_min[outside]), (
                    f"iteration {t} task {i} moved off-subspace coordinates"
                )

    def test_d1_q1_degenerates_to_sequential(self):
        p = make_problem("sphere", 1, 8)
        cfg = small_config(5, 12, seed=21, q=1)
        assert run_batch_essi(p, cfg).digest() == run_sequential_ei(p, cfg).digest()

    def test_parallel_serial_equivalence(self):
        p = make_problem("griewank", 3, 2)
        cfg = small_config(6, 18, seed=31, q=4, workers=1)
        cfg8 = dataclasses.replace(cfg, workers=8)
        assert run_batch_essi(p, cfg).digest() == run_batch_essi(p, cfg8).digest()

    def test_jitter_applied_on_duplicate(self):
        # Force duplicates: a flat objective makes the incumbent a training
        # point and zero-variance acquisition everywhere, so selected points
        # often coincide with the incumbent.
        from batchbo import problems as problems_mod

        try:
            problems_mod.register_base(
                "flatline", lambda Z: np.zeros(Z.shape[0]), (0.0, 1.0), 1,
                lambda d: np.zeros(d),
            )
        except ValueError:
            pass
        p = make_problem("flatline", 2, None)
        cfg = small_config(4, 10, seed=3, q=2)
        rec = run_batch_essi(p, cfg)
        assert rec.n_evaluations == 10
        # no exact duplicate rows were evaluated
        seen = {tuple(row) for row in rec.X}
        assert len(seen) == 10


class TestBatchKB:
    def test_q1_degenerates_to_sequential(self):
        p = make_problem("ackley", 2, 12)
        cfg = small_config(6, 12, seed=13, q=1)
        assert run_batch_kb(p, cfg).digest() == run_sequential_ei(p, cfg).digest()

    def test_fantasy_values_are_model_means(self):
        p = make_problem("sphere", 2, 3)
        cfg = small_config(6, 14, seed=17, q=4)
        rec = run_batch_kb(p, cfg)
        # Reconstruct iteration 1's model deterministically and check the
        # first fantasy value equals its prediction at the first pick.
        init_rows = rec.iteration == 0
        obs = ObservationSet.from_data(rec.X[init_rows], rec.f[init_rows])
        fit_cfg = dataclasses.replace(SMALL_FIT, box=p.box)
        model = fit(obs, fit_cfg, derive_seed(cfg.seed, STREAM_FIT, 1))
        first_pick = rec.X[np.nonzero(rec.iteration == 1)[0][0]]
        mean, _ = predict(model, first_pick)
        recorded = rec.debug["iterations"][0]["fantasy_values"][0]
        assert abs(recorded - mean) <= 1e-12

    def test_batch_points_distinct(self):
        p = make_problem("rastrigin", 2, 9)
        cfg = small_config(8, 16, seed=19, q=4,
                           ga=GAConfig(population=20, generations=20))
        rec = run_batch_kb(p, cfg)
        for t in (1, 2):
            pts = rec.X[rec.iteration == t]
            for i in range(4):
                for j in range(i + 1, 4):
                    assert np.linalg.norm(pts[i] - pts[j]) > 1e-6

    def test_no_fantasy_persisted(self):
        p = make_problem("griewank", 2, 5)
        cfg = small_config(6, 14, seed=23, q=2)
        rec = run_batch_kb(p, cfg)
        for i in range(rec.n_evaluations):
            # every stored value is a real evaluation, never a model mean
            # (tolerance covers gemm/gemv rounding between batch layouts)
            assert rec.f[i] == pytest.approx(evaluate(p, rec.X[i]), rel=1e-12)


class TestRefitSchedule:
    def test_refit_every_k_still_conditions_on_all_data(self):
        p = make_problem("sphere", 2, 6)
        cfg = small_config(6, 14, seed=41, refit_every=3)
        rec = run_sequential_ei(p, cfg)
        assert rec.n_evaluations == 14
        assert np.all(np.diff(rec.incumbent_trace) <= 0.0)
        # every iteration still pays a (re)conditioning cost
        assert np.all(rec.fit_time_s[1:] > 0.0)
        assert rec.digest() == run_sequential_ei(p, cfg).digest()


class TestEssiVsRandomSphere:
    def test_paired_runs_median_beats_random(self):
        # 5-D shifted sphere, q=4, 64 additional evaluations, 10 seeds:
        # the batch loop's median final regret must be strictly below the
        # random-search median under the same budgets and designs.
        p = make_problem("sphere", 5, 1)
        essi, rand = [], []
        for seed in range(10):
            cfg = LoopConfig(
                n_init=50, n_max=114, seed=1000 + seed, q=4,
                fit=FitConfig(population=16, generations=25),
            )
            essi.append(run_batch_essi(p, cfg).final_f_min() - p.f_star)
            rand.append(run_random_search(p, cfg).final_f_min() - p.f_star)
        assert np.median(essi) < np.median(rand)


class TestRandomSearch:
    def test_contracts(self):
        p = make_problem("levy", 3, 7)
        cfg = small_config(6, 18, seed=29, q=4)
        rec = run_random_search(p, cfg)
        assert rec.n_evaluations == 18
        assert rec.iterations == 3
        assert np.all(np.diff(rec.incumbent_trace) <= 0.0)
        assert rec.digest() == run_random_search(p, cfg).digest()


class TestRecordIO:
    def test_csv_roundtrip_preserves_digest(self, tmp_path):
        p = make_problem("sphere", 3, 2)
        cfg = small_config(6, 14, seed=37, q=2)
        rec = run_batch_essi(p, cfg)
        path = tmp_path / "rec.csv"
        rec.to_csv(path)
        back = RunRecord.from_csv(path)
        assert back.digest() == rec.digest()
        assert back.algorithm == rec.algorithm
        assert back.q == rec.q
        assert np.array_equal(back.incumbent_trace, rec.incumbent_trace)
        header = RunRecord.read_header(path)
        assert header["stored_digest"] == rec.digest()
        assert header["config_digest"] == rec.config_digest
