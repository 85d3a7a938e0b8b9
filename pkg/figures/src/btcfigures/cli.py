"""figures: batch renderer for simulator CSV outputs.

``figures render --spec spec.json`` reads one figure specification (or a
list of them) and writes the images.  Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .render import FIGURE_KINDS, FigureSpec, render
from .schemas import SchemaError


def cmd_render(args) -> int:
    raw = json.loads(Path(args.spec).read_text())
    entries = raw if isinstance(raw, list) else [raw]
    for entry in entries:
        spec = FigureSpec.from_dict(entry)
        out = render(spec)
        print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description=f"Render simulator CSVs to images; kinds: {', '.join(FIGURE_KINDS)}",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render figures from a JSON spec")
    p.add_argument("--spec", required=True, help="path to the figure-spec JSON")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
