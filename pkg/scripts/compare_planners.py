"""Run MPC and APF on the dense-cylinder benchmark over several seeds.

Usage: python scripts/compare_planners.py [--seeds 0-9] [--out results/compare]
Writes per-episode logs, a per-seed table and an aggregate table (Markdown + CSV).
"""

import argparse
import json
from pathlib import Path

import numpy as np

from uavmpc.scenario import dense_scenario
from uavmpc.sim import cruise_speeds, metrics_table, run_episode, summary, write_log_csv


def parse_seeds(text):
    if "-" in text:
        lo, hi = text.split("-")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="0-9")
    ap.add_argument("--out", default="results/compare")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in parse_seeds(args.seeds):
        for planner in ("mpc", "apf"):
            sc = dense_scenario(seed, planner)
            log = run_episode(sc)
            write_log_csv(log, out / f"log_{planner}_{seed}.csv")
            row = summary(log, sc)
            v = cruise_speeds(log)
            row["cruise_std"] = float(v.std()) if len(v) else float("nan")
            row["cruise_in_band"] = float(np.mean(np.abs(v - sc.planning.v_ref) <= 0.3)) if len(v) else float("nan")
            rows.append(row)
            print(f"seed {seed} {planner}: {row['outcome']} T={row['motion_time']:.1f}s "
                  f"L={row['path_length']:.2f}m E={row['energy']:.2f} dmin={row['min_distance']:.2f} "
                  f"wall={row['wall_time']:.1f}s", flush=True)
    (out / "episodes.json").write_text(json.dumps(rows, indent=2) + "\n")
    agg = []
    for planner in ("mpc", "apf"):
        mine = [r for r in rows if r["planner"] == planner]
        reached = [r for r in mine if r["outcome"] == "reached"]
        base = reached or mine
        agg.append({
            "planner": planner,
            "outcome": f"{len(reached)}/{len(mine)} reached",
            **{k: float(np.mean([r[k] for r in base]))
               for k in ("motion_time", "path_length", "energy")},
            "min_distance": float(np.min([r["min_distance"] for r in base])),
        })
    md, csv = metrics_table(agg)
    (out / "table.md").write_text(md)
    (out / "table.csv").write_text(csv)
    print(md)


if __name__ == "__main__":
    main()
