"""plot <kind> --csv PATH... --out PATH

Reads the experiment runner's documented CSV schemas and writes a vector
image (format from the output extension; SVG by default).
"""

from __future__ import annotations

import argparse
import sys

from .core import DataError, SchemaError, plot_boxplots, plot_loglog, plot_restarts

KINDS = {
    "boxplots": plot_boxplots,
    "loglog": plot_loglog,
    "restarts": plot_restarts,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plot")
    parser.add_argument("kind", choices=sorted(KINDS))
    parser.add_argument("--csv", nargs="+", required=True, help="input CSV files")
    parser.add_argument("--out", required=True, help="output image path (.svg/.pdf)")
    args = parser.parse_args(argv)
    try:
        KINDS[args.kind](args.csv, args.out)
    except (SchemaError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
