import numpy as np

from batchbo.cli import main
from batchbo.problems import evaluate, problem_from_name


def write_config(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(
        f"""
[experiment]
problems = sphere-d2-seed1
algorithms = random, batch-essi
batch_sizes = 2
repeats = 2
base_seed = 5
output_dir = {tmp_path / 'out'}

[loop]
n_init = 6
budget = 4
ga_population = 8
ga_generations = 2
fit_population = 4
fit_generations = 2
""",
        encoding="utf-8",
    )
    return path


def test_problem_list(capsys):
    assert main(["problem", "list"]) == 0
    out = capsys.readouterr().out
    assert "sphere" in out and "rosenbrock" in out and "identity" in out


def test_problem_eval(capsys):
    assert main(["problem", "eval", "--name", "sphere-d2-identity",
                 "--point", "0.5,0.5"]) == 0
    printed = float(capsys.readouterr().out.strip())
    p = problem_from_name("sphere-d2-identity")
    assert printed == evaluate(p, np.array([0.5, 0.5]))


def test_run_report_compare(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["run", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "4 runs" in out and "0 failures" in out

    # rerun hits the cache
    assert main(["run", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "4 cached" in out

    assert main(["report", "--dir", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "aggregates" in out

    assert main(["compare", "--dir", str(tmp_path / "out"),
                 "--baseline", "random", "--alpha", "0.05"]) == 0
    out = capsys.readouterr().out
    assert "batch-essi" in out


def test_run_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(
        f"""
[experiment]
problems = not-a-problem
algorithms = random
batch_sizes = 2
repeats = 1
output_dir = {tmp_path / 'out'}

[loop]
n_init = 4
budget = 4
""",
        encoding="utf-8",
    )
    assert main(["run", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "FAILED" in err


def test_report_missing_dir(tmp_path, capsys):
    assert main(["report", "--dir", str(tmp_path / "nope")]) == 1


def test_compare_missing_summary(tmp_path):
    assert main(["compare", "--dir", str(tmp_path), "--baseline", "x"]) == 1
