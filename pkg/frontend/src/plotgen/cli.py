"""plotgen command line: study CSV in, figure out."""
from __future__ import annotations

import argparse
import sys

from .render import PlotInputError, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotgen",
        description="Render a convergence-study CSV as a log-log figure.",
    )
    parser.add_argument(
        "--in", dest="inputs", action="append", required=True,
        metavar="CSV", help="study CSV (repeat to overlay several studies)",
    )
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--mode", choices=("errors", "ratio"), default="errors")
    parser.add_argument(
        "--linear", action="store_true", help="linear axes instead of log-log"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(
            inputs=tuple(args.inputs),
            output=args.out,
            mode=args.mode,
            log_log=not args.linear,
        )
        result = render(spec)
    except (PlotInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    note = f", fitted slope {result.slope:.3f}" if result.slope is not None else ""
    print(f"wrote {result.output} ({len(result.series)} series{note})", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
