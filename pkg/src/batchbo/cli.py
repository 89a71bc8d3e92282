"""Command-line interface.

    batchbo run --config FILE [--workers N] [--resume | --force]
    batchbo report --dir DIR
    batchbo compare --dir DIR --baseline ALGO [--alpha A]
    batchbo problem list
    batchbo problem eval --name ID --point CSV
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import bench, problems


def _cmd_run(args) -> int:
    config = bench.load_config(args.config)
    if args.workers is not None:
        config = dataclasses.replace(config, parallel_workers=args.workers)
    manifest = bench.run_experiment(config, force=args.force)
    n_runs = len(manifest["runs"])
    n_bad = len(manifest["failures"])
    cached = sum(1 for r in manifest["runs"] if r["status"] == "cached")
    print(f"{n_runs} runs ({cached} cached), {n_bad} failures")
    for failure in manifest["failures"]:
        print(f"  FAILED {failure['file']}: {failure['status']}", file=sys.stderr)
    print(f"results in {manifest['output_dir']}")
    return 1 if n_bad else 0


def _cmd_report(args) -> int:
    out = Path(args.dir)
    if not (out / "records").is_dir():
        print(f"no records directory under {out}", file=sys.stderr)
        return 1
    written, warnings = bench.write_aggregates(out)
    for path in written:
        print(f"wrote {path}")
    sig = out / "significance.csv"
    if sig.exists():
        print(sig.read_text(encoding="utf-8"), end="")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0 if written else 1


def _cmd_compare(args) -> int:
    summary = Path(args.dir) / "summary.csv"
    if not summary.exists():
        print(f"missing {summary}", file=sys.stderr)
        return 1
    rows = bench.significance_rows(summary, args.baseline, args.alpha)
    if not rows:
        print("no cohorts to compare", file=sys.stderr)
        return 1
    print("problem,q,algorithm,baseline,p_value,verdict,symbol")
    for r in rows:
        print(
            f"{r['problem']},{r['q']},{r['algorithm']},{r['baseline']},"
            f"{float(r['p_value']):.6g},{r['verdict']},{r['symbol']}"
        )
    return 0


def _cmd_problem(args) -> int:
    if args.problem_cmd == "list":
        print("bases:", ", ".join(problems.base_names()))
        print("instance ids: <base>-d<dim>-seed<int> or <base>-d<dim>-identity")
        return 0
    inst = problems.problem_from_name(args.name)
    x = np.array([float(v) for v in args.point.split(",")], dtype=float)
    print(repr(problems.evaluate(inst, x)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="batchbo", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--workers", type=int, default=None,
                     help="concurrent runs (overrides the config)")
    group = run.add_mutually_exclusive_group()
    group.add_argument("--resume", action="store_true", default=True,
                       help="skip digest-matched completed runs (default)")
    group.add_argument("--force", action="store_true",
                       help="recompute everything")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="aggregate curves + significance table")
    rep.add_argument("--dir", required=True)
    rep.set_defaults(func=_cmd_report)

    cmp_ = sub.add_parser("compare", help="verdicts against a chosen baseline")
    cmp_.add_argument("--dir", required=True)
    cmp_.add_argument("--baseline", required=True)
    cmp_.add_argument("--alpha", type=float, default=0.05)
    cmp_.set_defaults(func=_cmd_compare)

    prob = sub.add_parser("problem", help="inspect the benchmark registry")
    prob_sub = prob.add_subparsers(dest="problem_cmd", required=True)
    prob_sub.add_parser("list")
    ev = prob_sub.add_parser("eval")
    ev.add_argument("--name", required=True)
    ev.add_argument("--point", required=True, help="comma-separated coordinates")
    prob.set_defaults(func=_cmd_problem)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
