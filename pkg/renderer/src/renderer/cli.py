"""Command-line entry point: render one artifact into one figure kind."""
from __future__ import annotations

import argparse
import sys

from .figures import (
    render_contours,
    render_flow,
    render_metric_bars,
    render_profiles,
)
from .schemas import KINDS, SchemaMismatch, load_artifact

EXIT_OK = 0
EXIT_SCHEMA = 2

RENDERERS = {
    "contour": render_contours,
    "flow": render_flow,
    "profile-bars": render_profiles,
    "metric-bars": render_metric_bars,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sembn-render",
        description="render pipeline JSON artifacts as figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one artifact")
    p.add_argument("artifact", help="pipeline JSON artifact")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--colormap", default="viridis")
    p.add_argument("--dpi", type=int, default=150)
    p.add_argument("--format", default="png", choices=("png", "svg"))
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    style = {"colormap": args.colormap, "dpi": args.dpi,
             "format": args.format}
    try:
        doc = load_artifact(args.artifact)
        result = RENDERERS[args.kind](doc, args.out, style)
    except SchemaMismatch as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    for path in result.paths:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
