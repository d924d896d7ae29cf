"""Command line entry point: plot --kind KIND --inputs FILES... --out FILE."""

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, plot
from .logs import SchemaError

EXIT_OK = 0
EXIT_SCHEMA_ERROR = 2
EXIT_CONFIG_ERROR = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render figures from newtonlab run logs (CSV + JSON).")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--inputs", required=True, nargs="+", metavar="CSV",
                        help="run log CSV files (JSON side-cars are implied)")
    parser.add_argument("--out", required=True, help="output image file")
    parser.add_argument("--labels", nargs="+", default=None,
                        help="one label per input (defaults to run config)")
    parser.add_argument("--group-keys", nargs=2, default=("solver", "tolerance"),
                        metavar=("KEY_A", "KEY_B"),
                        help="bar position / bar color config keys "
                             "(grouped-bars only)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, inputs=tuple(args.inputs),
                          out=args.out,
                          labels=tuple(args.labels) if args.labels else None,
                          group_keys=tuple(args.group_keys))
        result = plot(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    print(result.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
