"""Command line: figures <kind> --in CSV [--in CSV ...] --out IMG."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures", description="Render figures from experiment CSVs"
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        metavar="CSV",
        help="input CSV, repeatable",
    )
    parser.add_argument("--out", required=True, help="output image (PNG or SVG)")
    parser.add_argument("--title", help="figure title")
    parser.add_argument(
        "--n", type=int, default=200, help="nodes per instance (threshold marker)"
    )
    parser.add_argument(
        "--rho", type=float, default=0.2, help="edge density (threshold marker)"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        inputs=tuple(args.inputs),
        output=args.out,
        title=args.title,
        sbm_nodes=args.n,
        sbm_density=args.rho,
    )
    try:
        render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
