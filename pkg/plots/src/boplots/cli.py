"""boplot: figures from a batchbo results directory.

    boplot convergence --dir RESULTS [--out DIR] [--problems a,b] \
        [--algos x,y] [--x-axis iterations|evaluations] [--fmt svg|png] [--linear]
    boplot timing --dir RESULTS [--out DIR] [--algos x,y] [--fmt svg|png]
"""

from __future__ import annotations

import argparse
import sys

from .render import PlotSpec, plot_convergence, plot_timing


def _split(raw: str | None) -> tuple[str, ...]:
    if not raw:
        return ()
    return tuple(s.strip() for s in raw.split(",") if s.strip())


def _spec_from(args) -> PlotSpec:
    return PlotSpec(
        input_dir=args.dir,
        out_dir=args.out,
        problems=_split(getattr(args, "problems", None)),
        algorithms=_split(args.algos),
        x_axis=getattr(args, "x_axis", "iterations"),
        fmt=args.fmt,
        log_scale=not getattr(args, "linear", False),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boplot", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    conv = sub.add_parser("convergence", help="median + quartile-band regret curves")
    conv.add_argument("--dir", required=True, help="results directory")
    conv.add_argument("--out", default="figures")
    conv.add_argument("--problems", default=None, help="comma-separated filter")
    conv.add_argument("--algos", default=None, help="comma-separated filter")
    conv.add_argument("--x-axis", dest="x_axis", default="iterations",
                      choices=("iterations", "evaluations"))
    conv.add_argument("--fmt", default="svg", choices=("svg", "png"))
    conv.add_argument("--linear", action="store_true",
                      help="linear regret axis (default: log)")
    conv.set_defaults(fn=plot_convergence)

    tim = sub.add_parser("timing", help="acquisition-time bars")
    tim.add_argument("--dir", required=True)
    tim.add_argument("--out", default="figures")
    tim.add_argument("--algos", default=None)
    tim.add_argument("--fmt", default="svg", choices=("svg", "png"))
    tim.set_defaults(fn=plot_timing)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written, warnings = args.fn(_spec_from(args))
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0 if written else 1


if __name__ == "__main__":
    raise SystemExit(main())
