"""Run every shipped preset into one results tree.

    python scripts/run_all_presets.py --out runs --workers 4
"""
import argparse
import sys
import time

from cavitycoop.cli import main as simulate
from cavitycoop.presets import PRESETS


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--only", nargs="*", choices=sorted(PRESETS))
    parser.add_argument("--plots", action="store_true")
    args = parser.parse_args()
    status = 0
    for name in args.only or sorted(PRESETS):
        start = time.perf_counter()
        argv = ["--preset", name, "--out", f"{args.out}/{name}", "--workers", str(args.workers)]
        if args.plots:
            argv.append("--plots")
        code = simulate(argv)
        print(f"{name}: exit {code} in {time.perf_counter() - start:.0f} s")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
