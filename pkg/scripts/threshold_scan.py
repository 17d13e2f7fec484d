"""Locate the pump rate where the cooperative fraction turns positive.

For each emitter number the sign change is bracketed on a coarse log grid
and refined by root finding.  Prints P_threshold / Gamma per N.

    python scripts/threshold_scan.py --g 0.3 --n 2 3 4 5
"""
import argparse

import numpy as np

from cavitycoop import SystemParams, cooperative_fraction
from cavitycoop.cooperativity import locate_threshold


def bracket(base, grid):
    previous = None
    for pump in grid:
        cf = cooperative_fraction(base.replace(pump=pump))[0].cf
        if previous is not None and previous[1] < 0 <= cf:
            return previous[0], pump
        previous = (pump, cf)
    return None


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--g", type=float, default=0.3)
    parser.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 5])
    parser.add_argument("--n-max", type=int, default=8)
    args = parser.parse_args()
    gamma = 4 * args.g ** 2
    grid = np.geomspace(0.1 * gamma, 10 * gamma, 13)
    for n in args.n:
        base = SystemParams(n_emitters=n, g=args.g, pump=gamma, n_max=args.n_max)
        found = bracket(base, grid)
        if found is None:
            print(f"N={n}: no negative -> positive change in [0.1, 10] Gamma")
            continue
        p = locate_threshold(base, *found)
        print(f"N={n}: P_threshold = {p:.6g}  ({p / gamma:.4f} Gamma)")


if __name__ == "__main__":
    main()
