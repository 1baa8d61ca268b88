"""Run every figure preset and write its tables, fits and manifest.

usage: python3 scripts/run_all_figures.py [--out DIR] [--seed N] [--workers N]
"""

import argparse
import sys
import time

from ionsim.cli import main
from ionsim.figures import FIGURES


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="figures_out")
    parser.add_argument("--seed", default="1")
    parser.add_argument("--workers", default="1")
    args = parser.parse_args(argv)
    status = 0
    for name in FIGURES:
        t0 = time.perf_counter()
        code = main(["figure", name, "--seed", args.seed, "--workers", args.workers, "--out", args.out])
        print(f"  ({time.perf_counter() - t0:.1f} s)")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(run())
