"""`trotterlab-fig <kind> --in PATH [--aux PATH] --out PATH`.

Exit codes: 0 success, 2 schema or argument error.
"""

from __future__ import annotations

import argparse
import sys

from trotterlab_figures.io import SCHEMAS, SchemaError, load_report, load_table
from trotterlab_figures.plots import FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trotterlab-fig",
        description="Render sweep CSV/JSON outputs as raster figures.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in SCHEMAS:
        sp = sub.add_parser(kind, help=f"render a {kind} figure")
        sp.add_argument("--in", dest="source", required=True, help="input CSV")
        sp.add_argument("--aux", default=None, help="companion JSON report")
        sp.add_argument("--out", required=True, help="output image path")
        sp.add_argument("--colormap", default="viridis")
        sp.add_argument("--marker-size", type=float, default=2.0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        source=args.source,
        out=args.out,
        aux=args.aux,
        colormap=args.colormap,
        marker_size=args.marker_size,
    )
    try:
        cols = load_table(spec.source, spec.kind)
        report = load_report(spec.aux) if spec.aux else None
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return 2
    render(spec, cols, report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
