"""Command-line entry: becpde-plot <kind> <run_dir> [--out FILE] [--log].

Exit codes: 0 on success, 2 on missing/invalid inputs (the offending column
or file is named on stderr).
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="becpde-plot", description="Render figures from becpde artifacts."
    )
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("run_dir", help="experiment output directory")
    parser.add_argument("--out", default=None, help="output image path (default <run_dir>/<kind>.png)")
    parser.add_argument(
        "--log", action="store_true", help="log-scale the sup-norm and dead-core panels"
    )
    args = parser.parse_args(argv)
    try:
        out = render(args.kind, args.run_dir, args.out, log_scale=args.log)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
