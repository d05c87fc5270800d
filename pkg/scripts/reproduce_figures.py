"""Regenerate every figure and table dataset with the default settings.

Usage: python3 scripts/reproduce_figures.py [--out-dir results] [--seed 1] [--only fig10.1 ...]
"""

import argparse
import sys
import time
from pathlib import Path

from qworkbench import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--only", nargs="*", choices=cli.FIGURES)
    args = ap.parse_args()
    status = 0
    for fig in args.only or cli.FIGURES:
        out = Path(args.out_dir) / f"{fig}.csv"
        t0 = time.perf_counter()
        code = cli.main(["reproduce", fig, "--seed", str(args.seed), "--out", str(out)])
        print(f"{fig}: exit {code} in {time.perf_counter() - t0:.1f} s")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
