"""Closed-loop episodes: sense, map, plan, act, log.

One cycle per sampling period: ray-cast the world, voxelize a sensor-sized
local grid, plan a reference through it (JPS on the inflated grid), solve the
MPC problem (or evaluate the APF law), then advance the true state with the
first control. Episodes are fully deterministic given the scenario.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from uavmpc.apf import ApfPlanner
from uavmpc.dynamics import UavState, step
from uavmpc.errors import SensingError
from uavmpc.global_planner import NoPathError, nearest_free_cell, plan_astar, plan_jps, to_world
from uavmpc.mapping import ObstacleWorld, block_outside, crop, inflate, obstacle_set, sense, voxelize
from uavmpc.mpc import MpcPlanner
from uavmpc.reference import ReferenceTrajectory, sample_reference
from uavmpc.scenario import Scenario

OUTCOMES = ("reached", "collided", "stalled", "timeout")
LOG_COLUMNS = ("t", "px", "py", "pz", "vx", "vy", "vz", "ax", "ay", "az",
               "ux", "uy", "uz", "min_dist")


@dataclass
class EpisodeLog:
    """Samples k = 0..N; ``controls[k]`` drives ``states[k]`` to ``states[k+1]``.

    The last row's control is zero since nothing is applied after termination.
    """

    t: np.ndarray
    states: np.ndarray  # (N+1, 9) rows of [p, v, a]
    controls: np.ndarray  # (N+1, 3)
    min_dist: np.ndarray  # (N+1,) distance to the nearest obstacle surface
    outcome: str
    planner: str
    tau: float
    diagnostics: list = field(default_factory=list)
    wall_time: float = 0.0

    def __len__(self):
        return len(self.t)

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, 0:3]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, 3:6]

    @property
    def accelerations(self) -> np.ndarray:
        return self.states[:, 6:9]

    def segment(self, i: int, j: int) -> EpisodeLog:
        """Samples i..j inclusive, for splitting a log at a shared sample."""
        return EpisodeLog(self.t[i:j + 1], self.states[i:j + 1], self.controls[i:j + 1],
                          self.min_dist[i:j + 1], self.outcome, self.planner, self.tau)


@dataclass(frozen=True)
class Metrics:
    motion_time: float
    path_length: float
    energy: float
    min_distance: float
    mean_speed: float
    max_speed: float
    outcome: str

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def compute_metrics(log: EpisodeLog) -> Metrics:
    """Time, length, energy (sum of |a_k|^2 tau over intervals) and clearance."""
    n = len(log)
    if n == 0:
        raise ValueError("empty log")
    p = log.positions
    a = log.accelerations
    speeds = np.linalg.norm(log.velocities, axis=1)
    length = float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum()) if n > 1 else 0.0
    energy = float(np.sum(a[:-1] ** 2) * log.tau)
    return Metrics(
        motion_time=float(log.t[-1] - log.t[0]),
        path_length=length,
        energy=energy,
        min_distance=float(np.min(log.min_dist)),
        mean_speed=float(speeds.mean()),
        max_speed=float(speeds.max()),
        outcome=log.outcome,
    )


def local_grid(world: ObstacleWorld, position, sc: Scenario):
    """Sense from ``position`` and voxelize into grids centred on it.

    Returns (raw grid, inflated planning grid). The raw grid spans
    ``obstacle_z_half_extent`` vertically and feeds the obstacle set; the
    planning grid is its central ``z_half_extent`` slab, inflated. Cell
    centers sit on integer multiples of the resolution and the vehicle's own
    cell is the middle one, so cells are stable as the vehicle moves.
    """
    res, m = sc.mapping.resolution, sc.mapping
    half = np.array([sc.sensor.range, sc.sensor.range, m.obstacle_z_half_extent])
    p = np.asarray(position, dtype=float)
    half_cells = np.round(half / res).astype(int)
    origin = (np.round(p / res) - half_cells - 0.5) * res
    dims = tuple(int(v) for v in 2 * half_cells + 1)
    cloud = sense(world, p, rays=sc.sensor)
    raw = voxelize(cloud, origin, res, dims)
    # the slab keeps one inflation radius of margin so cells above and below still inflate into it
    hz = int(round(m.z_half_extent / res))
    pad = min(int(np.ceil(m.inflation / res)), half_cells[2] - hz)
    k = half_cells[2] - hz - pad
    wide = crop(raw, (0, 0, k), (dims[0], dims[1], dims[2] - k))
    inflated = inflate(wide, m.inflation)
    slab = crop(inflated, (0, 0, pad), (dims[0], dims[1], inflated.dims[2] - pad))
    return raw, block_outside(slab, world.bounds)


def plan_reference(grid, position, goal, sc: Scenario) -> tuple[ReferenceTrajectory, dict]:
    """Global path through the local grid resampled into a horizon reference.

    An off-grid goal is replaced by the nearest free cell to it. If no path
    exists the reference holds the current position at zero speed.
    """
    P, tau = sc.planning.horizon, sc.dynamics.tau
    p = np.asarray(position, dtype=float)
    goal = np.asarray(goal, dtype=float)
    start = grid.world_to_cell(p)
    if not (grid.in_bounds(start) and grid.is_free(start)):
        start = nearest_free_cell(grid, p)
    target = grid.world_to_cell(goal)
    goal_on_grid = grid.in_bounds(target) and grid.is_free(target)
    if not goal_on_grid:
        target = nearest_free_cell(grid, goal)
    info = {"path_found": False, "expansions": 0}
    if start is None or target is None:
        return ReferenceTrajectory.hold(p, P, tau=tau), info
    search = plan_jps if sc.planning.global_planner == "jps" else plan_astar
    try:
        path = search(grid, start, target)
    except NoPathError:
        return ReferenceTrajectory.hold(p, P, tau=tau), info
    poly = to_world(path, grid)
    if goal_on_grid:
        poly = np.vstack([poly[:-1], goal]) if len(poly) > 1 else np.vstack([poly, goal])
    info.update(path_found=True, expansions=path.expansions, path_cost=path.cost)
    if len(poly) == 1:
        return ReferenceTrajectory.hold(poly[0], P, tau=tau), info
    return sample_reference(poly, p, sc.planning.v_ref, tau, P), info


def flight_envelope(sc: Scenario) -> np.ndarray | None:
    """World bounds shrunk by half the vehicle size, or None when disabled."""
    if not sc.planning.envelope:
        return None
    half = sc.planning.uav_size / 2
    return sc.world.bounds + np.array([half, -half])


def make_planner(sc: Scenario):
    if sc.planner == "mpc":
        return MpcPlanner(sc.weights, sc.dynamics, sc.solver, flight_envelope(sc))
    return ApfPlanner(sc.apf, sc.dynamics)


def run_episode(sc: Scenario, planner=None, record_plans: bool = False) -> EpisodeLog:
    """Simulate one episode until the goal, a collision, a stall or the time limit."""
    world, goal, cfg = sc.world, sc.goal, sc.planning
    tau = sc.dynamics.tau
    planner = planner if planner is not None else make_planner(sc)
    planner.reset()
    x = UavState.at_rest(sc.start)
    t_rows, x_rows, u_rows, d_rows, diags = [], [], [], [], []
    to_goal = []
    window = int(round(cfg.stall_window / tau))
    max_steps = int(math.floor(cfg.time_limit / tau + 1e-9))
    wall0 = time.perf_counter()
    outcome = "timeout"
    k = 0
    while True:
        d = world.surface_distance(x.p)
        t_rows.append(k * tau)
        x_rows.append(x.as_vector())
        d_rows.append(d)
        to_goal.append(float(np.linalg.norm(x.p - goal)))
        if d < 0 or not world.contains(x.p):
            outcome = "collided"
            break
        if to_goal[-1] <= cfg.goal_tolerance:
            outcome = "reached"
            break
        if k >= max_steps:
            outcome = "timeout"
            break
        if k >= window and to_goal[k - window] - to_goal[k] < cfg.stall_progress:
            outcome = "stalled"
            break
        try:
            raw, grid = local_grid(world, x.p, sc)
        except SensingError:
            outcome = "collided"
            break
        t0 = time.perf_counter()
        ref, info = plan_reference(grid, x.p, goal, sc)
        if sc.planner == "mpc":
            obs = obstacle_set(raw, x.p, sc.mapping.obstacle_radius, sc.mapping.obstacle_cap,
                               sc.mapping.obstacle_spacing)
            result = planner.plan(x, ref, obs)
            u = np.asarray(result.controls[0], dtype=float)
            info.update(status=result.status, iterations=result.iterations, cost=result.cost,
                        violation=result.max_constraint_violation)
            if record_plans:
                info.update(plan=np.array([s.p for s in result.states]), reference=ref.points)
        else:
            # by default the attraction point is the reference end, a horizon ahead on the global path
            target = ref.points[-1] if cfg.apf_target == "reference" else goal
            obs = obstacle_set(raw, x.p, sc.apf.rho0, sc.mapping.obstacle_cap,
                               sc.mapping.obstacle_spacing)
            u, v_cmd = planner.control(x, target, obs)
            info.update(v_cmd=v_cmd)
        info.update(cycle_time=time.perf_counter() - t0, n_obstacles=len(obs))
        diags.append(info)
        u_rows.append(u)
        x = step(x, u, sc.dynamics)
        k += 1
    u_rows.append(np.zeros(3))
    return EpisodeLog(
        t=np.array(t_rows),
        states=np.array(x_rows),
        controls=np.array(u_rows),
        min_dist=np.array(d_rows),
        outcome=outcome,
        planner=sc.planner,
        tau=tau,
        diagnostics=diags,
        wall_time=time.perf_counter() - wall0,
    )


def cruise_speeds(log: EpisodeLog, trim: float = 2.0) -> np.ndarray:
    """Speed samples with the first and last ``trim`` seconds removed."""
    t = log.t
    keep = (t >= t[0] + trim) & (t <= t[-1] - trim)
    return np.linalg.norm(log.velocities[keep], axis=1)


TABLE_FIELDS = ("planner", "outcome", "motion_time", "path_length", "energy", "min_distance")


def metrics_table(rows: list[dict]) -> tuple[str, str]:
    """(markdown, csv) renderings of per-planner summary rows."""
    head = "| Planner | Outcome | Motion time (s) | Motion length (m) | Energy | Min distance (m) |"
    lines = [head, "|---|---|---|---|---|---|"]
    for r in rows:
        lines.append(f"| {r['planner'].upper()} | {r['outcome']} | {r['motion_time']:.1f} | "
                     f"{r['path_length']:.4f} | {r['energy']:.4f} | {r['min_distance']:.3f} |")
    csv_lines = [",".join(TABLE_FIELDS)]
    for r in rows:
        csv_lines.append(",".join(str(r[k]) for k in TABLE_FIELDS))
    return "\n".join(lines) + "\n", "\n".join(csv_lines) + "\n"


def write_log_csv(log: EpisodeLog, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for i in range(len(log)):
            w.writerow([f"{log.t[i]:.6f}", *(repr(float(v)) for v in log.states[i]),
                        *(repr(float(v)) for v in log.controls[i]), repr(float(log.min_dist[i]))])


def read_log_csv(path, tau: float = 0.1, outcome: str = "", planner: str = "") -> EpisodeLog:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return EpisodeLog(data[:, 0], data[:, 1:10], data[:, 10:13], data[:, 13],
                      outcome, planner, tau)


def write_plot_csv(log: EpisodeLog, path) -> None:
    speed = np.linalg.norm(log.velocities, axis=1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "x", "y", "z", "speed"))
        for i in range(len(log)):
            w.writerow([f"{log.t[i]:.6f}", *(f"{v:.6f}" for v in log.positions[i]), f"{speed[i]:.6f}"])


def summary(log: EpisodeLog, sc: Scenario) -> dict:
    m = compute_metrics(log)
    cycles = [d["cycle_time"] for d in log.diagnostics]
    out = {"scenario": sc.name, "planner": log.planner, "seed": sc.seed, **m.as_dict(),
           "steps": len(log) - 1, "wall_time": log.wall_time,
           "mean_cycle_time": float(np.mean(cycles)) if cycles else 0.0}
    if log.planner == "mpc" and log.diagnostics:
        statuses = [d["status"] for d in log.diagnostics]
        out["solver_status_counts"] = {s: statuses.count(s) for s in sorted(set(statuses))}
    return out


def write_summary(log: EpisodeLog, sc: Scenario, path) -> dict:
    s = summary(log, sc)
    Path(path).write_text(json.dumps(s, indent=2) + "\n")
    return s
