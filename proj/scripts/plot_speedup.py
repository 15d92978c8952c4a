#!/usr/bin/env python3
"""Plot speedup.csv from `hmmsim sweep --H ...` against the predicted H/eta.

usage: plot_speedup.py OUT_DIR [--save FILE]
"""

import argparse
import pathlib

import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--save")
    args = ap.parse_args()

    t = pd.read_csv(args.out_dir / "speedup.csv", comment="#")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t["predicted_ratio"], t["speedup"], "o-", label="measured")
    ax.plot(t["predicted_ratio"], t["predicted_ratio"], "--", label="H / eta")
    for _, r in t.iterrows():
        ax.annotate(r["config"], (r["predicted_ratio"], r["speedup"]), fontsize="small")
    ax.set_xlabel("H / eta")
    ax.set_ylabel("speedup over micro-only")
    ax.legend()
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
