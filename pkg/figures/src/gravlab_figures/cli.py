"""Command-line entry points: sweep, evolution, and fieldpair figures."""

from __future__ import annotations

import argparse
import sys

from .io import SchemaError
from .plots import FigureRecipe, render_recipe


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravlab-figs",
        description="Render figures from gravlab run artifacts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="peak-density curves, one per beta")
    p.add_argument("sweep_csv")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--log", action="store_true", help="log-scale density axis")
    p.add_argument("--title", default="")

    p = sub.add_parser("evolution", help="initial/final overlay plus evolution")
    p.add_argument("series_csv")
    p.add_argument("snapshots", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--title", default="")

    p = sub.add_parser("fieldpair", help="density and potential side by side")
    p.add_argument("rho_snapshot")
    p.add_argument("pot_snapshot")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--title", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "sweep":
        recipe = FigureRecipe("sweep", [args.sweep_csv], args.output,
                              log_scale=args.log, title=args.title)
    elif args.command == "evolution":
        recipe = FigureRecipe("evolution", [args.series_csv, *args.snapshots],
                              args.output, title=args.title)
    else:
        recipe = FigureRecipe("fieldpair", [args.rho_snapshot, args.pot_snapshot],
                              args.output, title=args.title)
    try:
        out = render_recipe(recipe)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
