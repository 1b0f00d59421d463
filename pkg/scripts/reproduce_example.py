"""Run the scalar example end to end and write curves, controllers and a report.

    python3 scripts/reproduce_example.py --out results/

Same as ``robregret reproduce --out results/``.
"""

from __future__ import annotations

import argparse
import sys

from robregret.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results")
    p.add_argument("-v", "--verbose", action="store_true")
    args = p.parse_args()
    argv = (["-v"] if args.verbose else []) + ["reproduce", "--out", args.out]
    sys.exit(main(argv))
