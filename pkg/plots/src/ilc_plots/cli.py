"""Command line front end: `plot spec.json` or `plot run.csv --kind regret`."""

import argparse
import sys

from ilc_plots.figures import KINDS, PlotError, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render trace CSVs to a figure; a single .json argument "
                    "is read as a full plot spec instead.",
    )
    parser.add_argument("paths", nargs="+", metavar="PATH",
                        help="spec JSON, or one or more trace CSVs")
    parser.add_argument("--kind", choices=KINDS,
                        help="figure kind (required with CSV inputs)")
    parser.add_argument("--out", help="output image path (required with CSV inputs)")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    parser.add_argument("--title")
    return parser


def spec_from_args(args) -> PlotSpec:
    if len(args.paths) == 1 and args.paths[0].endswith(".json"):
        if args.kind or args.out:
            raise PlotError("--kind/--out belong in the spec JSON")
        return PlotSpec.from_file(args.paths[0])
    if not args.kind or not args.out:
        raise PlotError("CSV inputs need both --kind and --out")
    return PlotSpec(inputs=tuple(args.paths), output=args.out, kind=args.kind,
                    xlabel=args.xlabel, ylabel=args.ylabel, title=args.title)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = render(spec_from_args(args))
    except (PlotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
