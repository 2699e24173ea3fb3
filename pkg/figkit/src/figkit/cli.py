"""Command line entry point: regenerate figures from run directories."""

import argparse
import sys

from .figures import FIGURE_IDS, FigureRequest, render
from .io import SchemaError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="figkit",
        description="Render publication figures from simulator run outputs")
    parser.add_argument("out_dir", help="directory to write PNGs into")
    parser.add_argument("--figure", choices=FIGURE_IDS, action="append",
                        help="figure id to render (repeatable; default all)")
    parser.add_argument("--run", action="append", metavar="LABEL=DIR",
                        required=True,
                        help="labelled run directory, e.g. base=out/base")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def parse_runs(pairs):
    runs = {}
    for pair in pairs:
        label, sep, path = pair.partition("=")
        if not sep or not label or not path:
            raise ValueError(f"expected LABEL=DIR, got {pair!r}")
        runs[label] = path
    return runs


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        runs = parse_runs(args.run)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    figure_ids = args.figure or list(FIGURE_IDS)
    status = 0
    for figure_id in figure_ids:
        if figure_id == "perturbation_compare" and len(runs) < 2:
            print(f"skip: {figure_id} needs multiple --run directories",
                  file=sys.stderr)
            continue
        request = FigureRequest(figure_id=figure_id, run_dirs=runs,
                                out_dir=args.out_dir, dpi=args.dpi)
        try:
            path = render(request)
        except (SchemaError, ValueError) as exc:
            print(f"error: {figure_id}: {exc}", file=sys.stderr)
            status = 1
            continue
        print(path)
    return status


if __name__ == "__main__":
    sys.exit(main())
