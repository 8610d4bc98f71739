"""Command line entry: ``ttfigures render --kind ... --in ... --out ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FigureSpec, RenderError, render

__all__ = ["main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttfigures", description="Render figures from ttmemory CSV tables"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from CSV input")
    p.add_argument(
        "--kind",
        required=True,
        choices=("dynamics", "quantifiers", "violation"),
        help="figure kind; decides the expected CSV schema and layout",
    )
    p.add_argument(
        "--in",
        dest="inputs",
        required=True,
        nargs="+",
        type=Path,
        help="one or more input CSV files (concatenated)",
    )
    p.add_argument("--out", required=True, type=Path, help="output image path")
    p.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        spec = FigureSpec(kind=args.kind, inputs=args.inputs, output=args.out, dpi=args.dpi)
        fig = render(spec)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({len(fig.axes)} panels)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
