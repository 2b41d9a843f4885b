"""Command-line entry: one figure per invocation.

    kinetic-gpc-plot --kind defect_scaling --in scaling.csv --out defect.png

writes the image and a ``defect.png.fit.json`` sidecar.  Exit 2 on a
malformed request (unknown kind, missing column, too few rows).
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, MissingColumnError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinetic-gpc-plot")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="csv_path", required=True)
    parser.add_argument("--out", dest="image_path", required=True)
    parser.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, csv_path=args.csv_path,
                      image_path=args.image_path, title=args.title)
    try:
        render(spec)
    except MissingColumnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
