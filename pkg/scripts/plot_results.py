"""Plot a results.csv (and its spectra) written by ``simulate``.

    python scripts/plot_results.py runs/fig4/fig4_g0.5 --spectra
"""
import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {key: [r[key] for r in rows] for key in rows[0]}


def floats(values):
    return [float(v) if v not in ("", "nan") else float("nan") for v in values]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("directory", type=Path)
    parser.add_argument("--spectra", action="store_true", help="overlay the emission spectra")
    args = parser.parse_args()
    data = read(args.directory / "results.csv")
    axis = next(iter(data))
    x = floats(data[axis])
    fig, axes = plt.subplots(2, 2, figsize=(8, 6), sharex=True)
    for ax, key in zip(axes.flat, ("n", "cf", "g2", "Z")):
        ax.plot(x, floats(data[key]), "o-", ms=3)
        ax.set_ylabel(key)
        ax.set_xscale("log" if min(x) > 0 else "linear")
    axes[0, 0].set_yscale("log")
    axes[0, 1].axhline(0, color="k", lw=0.5)
    for ax in axes[1]:
        ax.set_xlabel(axis)
    fig.tight_layout()
    fig.savefig(args.directory / "overview.svg")
    print(f"wrote {args.directory / 'overview.svg'}")

    if args.spectra:
        fig, ax = plt.subplots(figsize=(6, 4))
        for i, value in enumerate(x):
            path = args.directory / f"spectrum_{i}.csv"
            if not path.exists():
                continue
            s = read(path)
            S = floats(s["S"])
            peak = max(S)
            ax.plot(floats(s["omega"]), [v / peak for v in S], lw=0.8, label=f"{value:.3g}")
        ax.set_xlabel("omega / k")
        ax.set_ylabel("S / max S")
        ax.set_xlim(-3, 3)
        ax.legend(fontsize=6, ncol=2, title=axis)
        fig.tight_layout()
        fig.savefig(args.directory / "spectra.svg")
        print(f"wrote {args.directory / 'spectra.svg'}")


if __name__ == "__main__":
    main()
