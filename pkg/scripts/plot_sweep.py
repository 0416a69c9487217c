"""Plot achieved frame rate and app execution time from sweep CSVs.

Usage: python scripts/plot_sweep.py sw.csv hw.csv -o sweep.png

Each input is the output of ``heftrt sweep``; the file stem labels the curve.
Needs matplotlib (``pip install heftrt[plot]``).
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load_summary(path):
    with open(path, newline="") as f:
        rows = [r for r in csv.DictReader(f) if r["row_type"] == "summary"]
    return ([float(r["target_fps"]) for r in rows],
            [float(r["achieved_fps_mean"]) for r in rows],
            [float(r["app_exec_ns_mean"]) / 1e6 for r in rows])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="+")
    ap.add_argument("-o", "--out", default="sweep.png")
    args = ap.parse_args(argv)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for path in args.csv:
        target, achieved, app_ms = load_summary(path)
        label = Path(path).stem
        ax1.plot(target, achieved, marker=".", label=label)
        ax2.plot(target, app_ms, marker=".", label=label)
    ax1.set(xscale="log", yscale="log", xlabel="target frame rate (fps)",
            ylabel="achieved frame rate (fps)")
    ax2.set(xscale="log", xlabel="target frame rate (fps)", ylabel="mean app execution time (ms)")
    for ax in (ax1, ax2):
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
