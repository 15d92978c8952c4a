#!/usr/bin/env python3
"""Plot a run directory written by `hmmsim run` or `hmmsim compare`.

usage: plot_run.py OUT_DIR [STATE ...] [--save FILE]

Top panel: the selected trajectory columns, macro samples marked. Bottom
panel: the macro step trace (Mh against t') when steps.csv has entries.
"""

import argparse
import pathlib

import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("states", nargs="*")
    ap.add_argument("--save")
    args = ap.parse_args()

    traj = pd.read_csv(args.out_dir / "trajectory.csv")
    cols = args.states or [c for c in traj.columns if c not in ("time", "resolution")][:4]
    steps_path = args.out_dir / "steps.csv"
    steps = pd.read_csv(steps_path) if steps_path.exists() else pd.DataFrame()

    fig, axes = plt.subplots(2 if len(steps) else 1, 1, sharex=True, squeeze=False, figsize=(9, 6))
    ax = axes[0, 0]
    macro = traj["resolution"] == "M"
    for c in cols:
        line, = ax.plot(traj["time"], traj[c], lw=0.8, label=c)
        ax.plot(traj["time"][macro], traj[c][macro], "o", ms=2, color=line.get_color())
    ax.set_ylabel("pu")
    ax.legend(fontsize="small")

    if len(steps):
        ax = axes[1, 0]
        ax.step(steps["t_prime"], steps["mh"], where="post")
        ax.set_ylabel("Mh (s)")
    axes[-1, 0].set_xlabel("time (s)")
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
