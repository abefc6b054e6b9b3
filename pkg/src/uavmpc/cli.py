"""Command-line front end.

    uavmpc run <scenario> [--out DIR] [--planner mpc|apf]
    uavmpc compare <scenario> [--planners mpc,apf] [--out DIR]
    uavmpc batch <dir> [--jobs N] [--out DIR]
    uavmpc validate <scenario>

``UAVMPC_OUT`` overrides the default output directory and ``UAVMPC_SEED``
the scenario seed. Exit codes: 0 reached, 2 collided, 3 stalled or timeout,
64 configuration error, 74 output error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from uavmpc.errors import ParameterError
from uavmpc.scenario import PLANNERS, Scenario, ScenarioError, load_scenario
from uavmpc.sim import (metrics_table, run_episode, write_log_csv, write_plot_csv,
                        write_summary)

EXIT_OK, EXIT_COLLIDED, EXIT_STALLED, EXIT_CONFIG, EXIT_IO = 0, 2, 3, 64, 74
OUTCOME_EXIT = {"reached": EXIT_OK, "collided": EXIT_COLLIDED, "stalled": EXIT_STALLED,
                "timeout": EXIT_STALLED}


def load(path) -> Scenario:
    env_seed = os.environ.get("UAVMPC_SEED")
    seed = None
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ScenarioError(f"UAVMPC_SEED: not an integer: {env_seed!r}") from None
    return load_scenario(path, seed=seed)


def _out_dir(arg) -> Path:
    return Path(arg or os.environ.get("UAVMPC_OUT") or "results")


def run_one(sc: Scenario, out: Path) -> dict:
    """Run one episode and write log.csv, metrics.json and plot.csv into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    log = run_episode(sc)
    write_log_csv(log, out / "log.csv")
    write_plot_csv(log, out / "plot.csv")
    return write_summary(log, sc, out / "metrics.json")


def cmd_validate(args) -> int:
    sc = load(args.scenario)
    print(f"{args.scenario}: ok ({sc.planner}, seed {sc.seed}, "
          f"{len(sc.world.cylinders)} cylinders, {len(sc.world.boxes)} boxes)")
    return EXIT_OK


def cmd_run(args) -> int:
    sc = load(args.scenario)
    if args.planner:
        sc = sc.with_planner(args.planner)
    out = _out_dir(args.out) / f"{sc.name}_{sc.planner}"
    s = run_one(sc, out)
    print(f"{sc.name} [{sc.planner}]: {s['outcome']} time {s['motion_time']:.1f} s, "
          f"length {s['path_length']:.2f} m, energy {s['energy']:.3f} -> {out}")
    return OUTCOME_EXIT[s["outcome"]]


def _write_tables(rows, out: Path, stem: str) -> str:
    md, csv = metrics_table(rows)
    (out / f"{stem}.md").write_text(md)
    (out / f"{stem}.csv").write_text(csv)
    return md


def cmd_compare(args) -> int:
    sc = load(args.scenario)
    planners = [p.strip() for p in args.planners.split(",") if p.strip()]
    bad = [p for p in planners if p not in PLANNERS]
    if bad or not planners:
        raise ScenarioError(f"--planners: unknown planner(s) {bad or planners}")
    out = _out_dir(args.out) / f"{sc.name}_compare"
    rows = [run_one(sc.with_planner(p), out / p) for p in planners]
    out.mkdir(parents=True, exist_ok=True)
    print(_write_tables(rows, out, "table"), end="")
    return max(OUTCOME_EXIT[r["outcome"]] for r in rows)


def cmd_batch(args) -> int:
    files = sorted(Path(args.dir).glob("*.yaml")) + sorted(Path(args.dir).glob("*.yml"))
    if not files:
        raise ScenarioError(f"{args.dir}: no scenario files")
    scenarios = [load(f) for f in files]  # validate everything before running anything
    out = _out_dir(args.out)

    def job(sc):
        # each episode owns its planner instance and output directory
        return run_one(sc, out / f"{sc.name}_{sc.planner}")

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        rows = list(pool.map(job, scenarios))
    out.mkdir(parents=True, exist_ok=True)
    for r in rows:
        r["planner"] = f"{r['scenario']}/{r['planner']}"
    md = _write_tables(rows, out, "batch")
    (out / "batch.json").write_text(json.dumps(rows, indent=2) + "\n")
    print(md, end="")
    return max(OUTCOME_EXIT[r["outcome"]] for r in rows)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavmpc", description="MPC / APF UAV navigation benchmark")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one episode")
    p.add_argument("scenario")
    p.add_argument("--out")
    p.add_argument("--planner", choices=PLANNERS)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("compare", help="run several planners on one scenario")
    p.add_argument("scenario")
    p.add_argument("--planners", default="mpc,apf")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("batch", help="run every scenario file in a directory")
    p.add_argument("dir")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_batch)
    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ParameterError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"output error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
