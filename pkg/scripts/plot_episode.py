"""Render plot.csv files written by `uavmpc run` / `uavmpc compare`.

Usage: python scripts/plot_episode.py RUN_DIR [RUN_DIR ...] [--world SCENARIO] [--out fig.png]

Draws the top-view path (with cylinders when a scenario file is given), the
speed profile and a 3D view. Needs matplotlib, which is not a package
dependency.
"""

import argparse
import sys
from pathlib import Path

import numpy as np


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("runs", nargs="+", help="directories holding plot.csv")
    ap.add_argument("--world", help="scenario file, to draw the obstacles")
    ap.add_argument("--out", default="episode.png")
    args = ap.parse_args()
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        sys.exit("matplotlib is not installed; plot.csv can be opened with any plotting tool")

    fig = plt.figure(figsize=(12, 8))
    top = fig.add_subplot(2, 2, (1, 2))
    speed = fig.add_subplot(2, 2, 3)
    view = fig.add_subplot(2, 2, 4, projection="3d")
    if args.world:
        from uavmpc.scenario import load_scenario

        sc = load_scenario(args.world)
        for c in sc.world.cylinders:
            top.add_patch(plt.Circle((c.cx, c.cy), c.radius, color="0.6"))
        for b in sc.world.boxes:
            top.add_patch(plt.Rectangle(b.lo[:2], b.hi[0] - b.lo[0], b.hi[1] - b.lo[1], color="0.6"))
        top.plot(*sc.start[:2], "go")
        top.plot(*sc.goal[:2], "r*", markersize=12)
    for run in args.runs:
        data = np.loadtxt(Path(run) / "plot.csv", delimiter=",", skiprows=1, ndmin=2)
        t, x, y, z, v = data.T
        label = Path(run).name
        top.plot(x, y, label=label)
        speed.plot(t, v, label=label)
        view.plot(x, y, z, label=label)
    top.set_aspect("equal")
    top.set_xlabel("x (m)")
    top.set_ylabel("y (m)")
    top.legend()
    speed.set_xlabel("t (s)")
    speed.set_ylabel("speed (m/s)")
    view.set_xlabel("x")
    view.set_ylabel("y")
    view.set_zlabel("z")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
