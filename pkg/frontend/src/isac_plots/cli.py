"""Command-line entry point: one CSV in, one SVG out.

Usage::

    isac-plots --csv <path> --kind <kind> --out <path> [--units bits|nats]

Kinds: region, waterfill, sweep, compound, ba-distributions. Exit codes:
0 success, 2 bad arguments or schema mismatch, 3 empty dataset.
"""

from __future__ import annotations

import argparse
import sys

from .render import render
from .spec import (AxisUnits, EmptyDataError, FigureKind, FigureSpec,
                   PlotError)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_EMPTY = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isac-plots",
        description="Render a figure from an isac-limits CSV dataset")
    parser.add_argument("--csv", required=True, help="input CSV file")
    parser.add_argument("--kind", required=True,
                        choices=[k.value for k in FigureKind])
    parser.add_argument("--out", required=True, help="output SVG path")
    parser.add_argument("--units", default="nats",
                        choices=[u.value for u in AxisUnits],
                        help="rate-axis units (default nats)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(input_csv=args.csv,
                      figure_kind=FigureKind(args.kind),
                      output_path=args.out,
                      axis_units=AxisUnits(args.units))
    try:
        render(spec)
    except EmptyDataError as exc:
        print(f"empty dataset: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except PlotError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
