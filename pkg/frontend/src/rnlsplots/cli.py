"""rnls-plots render --spec FILE [--spec FILE ...]

Each spec file is a JSON FigureSpec:
    {"kind": "timeseries" | "heatmap" | "sweep",
     "inputs": {...paths...},
     "output": "figure.png",
     "style": {...}}
"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import FigureSpec, render
from .schema import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rnls-plots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    rend = sub.add_parser("render", help="render one or more figure specs")
    rend.add_argument("--spec", action="append", required=True,
                      help="JSON figure spec (repeatable)")
    args = parser.parse_args(argv)

    status = 0
    for spec_path in args.spec:
        try:
            with open(spec_path) as fh:
                spec = FigureSpec.from_dict(json.load(fh))
            written = render(spec)
            for path in written:
                print(path)
        except (SchemaError, OSError, json.JSONDecodeError) as exc:
            print(f"error: {spec_path}: {exc}", file=sys.stderr)
            status = 2
    return status


if __name__ == "__main__":
    sys.exit(main())
