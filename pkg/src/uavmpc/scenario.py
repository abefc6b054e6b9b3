"""Scenario files: YAML documents with a strict schema.

Every section is optional except ``world``, ``start`` and ``goal``; omitted
values take the defaults below (vehicle limits, horizon, sampling period and
sensor range follow the published setup). A world may be listed explicitly
or produced by a ``generator`` block seeded with ``seed``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from uavmpc.apf import ApfParams
from uavmpc.dynamics import DynamicsParams
from uavmpc.errors import ParameterError
from uavmpc.mapping import Box, Cylinder, ObstacleWorld, SensorConfig
from uavmpc.mpc import CostWeights, SolverConfig
from uavmpc.worlds import blocked_corridor, dense_cylinder_field

PLANNERS = ("mpc", "apf")


class ScenarioError(ValueError):
    """Malformed or invalid scenario document."""


@dataclass(frozen=True)
class MappingConfig:
    resolution: float = 0.1
    z_half_extent: float = 0.3  # planning slab for the global path
    obstacle_z_half_extent: float = 1.0  # taller slab the obstacle set is drawn from
    inflation: float = 0.5
    obstacle_cap: int = 50
    obstacle_radius: float = 3.0
    obstacle_spacing: float | None = 0.5  # thin obstacle cells to one per block; None keeps all

    def __post_init__(self):
        if not self.resolution > 0:
            raise ParameterError("resolution", "must be > 0")
        if not self.z_half_extent >= self.resolution / 2:
            raise ParameterError("z_half_extent", "must cover at least one cell")
        if not self.obstacle_z_half_extent >= self.z_half_extent:
            raise ParameterError("obstacle_z_half_extent", "must be >= z_half_extent")
        if not self.inflation >= 0:
            raise ParameterError("inflation", "must be >= 0")
        if int(self.obstacle_cap) < 1:
            raise ParameterError("obstacle_cap", "must be >= 1")
        if self.obstacle_spacing is not None and not self.obstacle_spacing > 0:
            raise ParameterError("obstacle_spacing", "must be > 0 or null")
        if not self.obstacle_radius > 0:
            raise ParameterError("obstacle_radius", "must be > 0")


@dataclass(frozen=True)
class PlanningConfig:
    horizon: int = 20
    v_ref: float = 1.0
    uav_size: float = 0.5
    goal_tolerance: float = 0.2
    time_limit: float = 120.0
    stall_window: float = 10.0
    stall_progress: float = 0.1
    global_planner: str = "jps"
    apf_target: str = "reference"  # attract APF to the reference end point or to the goal
    envelope: bool = True  # keep MPC plans inside the world bounds

    def __post_init__(self):
        if int(self.horizon) < 1:
            raise ParameterError("horizon", "must be >= 1")
        for name in ("v_ref", "uav_size", "goal_tolerance", "time_limit", "stall_window"):
            if not getattr(self, name) > 0:
                raise ParameterError(name, "must be > 0")
        if not self.stall_progress >= 0:
            raise ParameterError("stall_progress", "must be >= 0")
        if self.apf_target not in ("reference", "goal"):
            raise ParameterError("apf_target", "must be 'reference' or 'goal'")
        if self.global_planner not in ("jps", "astar"):
            raise ParameterError("global_planner", "must be 'jps' or 'astar'")


@dataclass
class Scenario:
    world: ObstacleWorld
    start: np.ndarray
    goal: np.ndarray
    planner: str = "mpc"
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    weights: CostWeights = field(default_factory=CostWeights)
    apf: ApfParams = field(default_factory=ApfParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    planning: PlanningConfig = field(default_factory=PlanningConfig)
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float).reshape(3)
        self.goal = np.asarray(self.goal, dtype=float).reshape(3)
        self.validate()

    def validate(self):
        if self.planner not in PLANNERS:
            raise ParameterError("planner", f"must be one of {PLANNERS}")
        for name, pt in (("start", self.start), ("goal", self.goal)):
            if not np.all(np.isfinite(pt)):
                raise ParameterError(name, "must be finite")
            if not self.world.contains(pt):
                raise ParameterError(name, "lies outside the world bounds")
            if self.world.surface_distance(pt) <= self.planning.uav_size / 2:
                raise ParameterError(name, "lies inside an inflated obstacle")

    def with_planner(self, planner: str) -> Scenario:
        return dataclasses.replace(self, planner=planner)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return to_dict(self) == to_dict(other)


_SECTIONS = {
    "dynamics": DynamicsParams,
    "weights": CostWeights,
    "apf": ApfParams,
    "solver": SolverConfig,
    "sensor": SensorConfig,
    "mapping": MappingConfig,
    "planning": PlanningConfig,
}
_TOP_KEYS = {"name", "world", "start", "goal", "planner", "seed", *_SECTIONS}
_WORLD_KEYS = {"bounds", "cylinders", "boxes", "generator"}


def _point(value, where):
    try:
        arr = np.asarray(value, dtype=float).reshape(3)
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: expected a 3-vector, got {value!r}") from None
    return arr


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ScenarioError(f"{where}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}")
    kwargs = dict(data)
    if cls is DynamicsParams and "d_max" in kwargs:
        kwargs["d_max"] = tuple(kwargs["d_max"])
    try:
        return cls(**kwargs)
    except ParameterError as err:
        raise ScenarioError(f"{where}.{err.field}: {err}") from None
    except (TypeError, ValueError) as err:
        raise ScenarioError(f"{where}: {err}") from None


def _world(data, seed):
    if not isinstance(data, dict):
        raise ScenarioError("world: expected a mapping")
    unknown = set(data) - _WORLD_KEYS
    if unknown:
        raise ScenarioError(f"world: unknown key(s) {sorted(unknown)}")
    gen = data.get("generator")
    generated = None
    if gen is not None:
        gen = dict(gen)
        kind = gen.pop("kind", "dense_cylinders")
        try:
            if kind == "dense_cylinders":
                generated = dense_cylinder_field(seed, **gen)
            elif kind == "blocked_corridor":
                generated = blocked_corridor(**gen)
            else:
                raise ScenarioError(f"world.generator.kind: unknown generator {kind!r}")
        except TypeError as err:
            raise ScenarioError(f"world.generator: {err}") from None
    cylinders, boxes = [], []
    for i, c in enumerate(data.get("cylinders") or []):
        try:
            cx, cy = c["center"]
            z0, z1 = c.get("z", (0.0, 3.0))
            extra = set(c) - {"center", "radius", "z"}
            if extra:
                raise ScenarioError(f"world.cylinders[{i}]: unknown key(s) {sorted(extra)}")
            cylinders.append(Cylinder(float(cx), float(cy), float(c["radius"]), float(z0), float(z1)))
        except (KeyError, TypeError, ValueError) as err:
            raise ScenarioError(f"world.cylinders[{i}]: {err}") from None
    for i, b in enumerate(data.get("boxes") or []):
        try:
            extra = set(b) - {"min", "max"}
            if extra:
                raise ScenarioError(f"world.boxes[{i}]: unknown key(s) {sorted(extra)}")
            boxes.append(Box(tuple(b["min"]), tuple(b["max"])))
        except (KeyError, TypeError, ValueError) as err:
            raise ScenarioError(f"world.boxes[{i}]: {err}") from None
    if generated is not None:
        gworld = generated[0]
        bounds = data.get("bounds", gworld.bounds.tolist())
        cylinders = list(gworld.cylinders) + cylinders
        boxes = list(gworld.boxes) + boxes
    else:
        if "bounds" not in data:
            raise ScenarioError("world.bounds: required")
        bounds = data["bounds"]
    try:
        world = ObstacleWorld(bounds, cylinders=cylinders, boxes=boxes)
    except (TypeError, ValueError) as err:
        raise ScenarioError(f"world.bounds: {err}") from None
    return world, generated


def from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown top-level key(s) {sorted(unknown)}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioError("seed: must be an integer")
    if "world" not in doc:
        raise ScenarioError("world: required")
    world, generated = _world(doc["world"], seed)
    start = doc.get("start", None if generated is None else generated[1])
    goal = doc.get("goal", None if generated is None else generated[2])
    if start is None or goal is None:
        raise ScenarioError("start/goal: required")
    sections = {k: _build(cls, doc.get(k), k) for k, cls in _SECTIONS.items()}
    try:
        return Scenario(world=world, start=_point(start, "start"), goal=_point(goal, "goal"),
                        planner=doc.get("planner", "mpc"), seed=seed,
                        name=str(doc.get("name", "scenario")), **sections)
    except ParameterError as err:
        raise ScenarioError(f"{err.field}: {err}") from None


def to_dict(sc: Scenario) -> dict:
    """Fully explicit document; loading it yields an equal Scenario."""
    w = sc.world
    doc = {
        "name": sc.name,
        "seed": int(sc.seed),
        "planner": sc.planner,
        "start": [float(v) for v in sc.start],
        "goal": [float(v) for v in sc.goal],
        "world": {
            "bounds": w.bounds.tolist(),
            "cylinders": [{"center": [c.cx, c.cy], "radius": c.radius, "z": [c.z0, c.z1]}
                          for c in w.cylinders],
            "boxes": [{"min": list(b.lo), "max": list(b.hi)} for b in w.boxes],
        },
    }
    for key in _SECTIONS:
        d = dataclasses.asdict(getattr(sc, key))
        doc[key] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}
    return doc


def load_scenario(path, seed: int | None = None) -> Scenario:
    """Load a YAML scenario; ``seed`` overrides the document's seed."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScenarioError(f"{path}: {err.strerror}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ScenarioError(f"{path}: YAML parse error{where}") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario document must be a mapping")
    if seed is not None:
        doc["seed"] = int(seed)
    doc.setdefault("name", path.stem)
    return from_dict(doc)


def dump_scenario(sc: Scenario, path=None) -> str:
    text = yaml.safe_dump(to_dict(sc), sort_keys=False)
    if path is not None:
        Path(path).write_text(text)
    return text


def dense_scenario(seed: int, planner: str = "mpc", **sections) -> Scenario:
    """Reconstructed dense-cylinder benchmark: ~20 cylinders, start and goal 30 m apart."""
    world, start, goal = dense_cylinder_field(seed)
    return Scenario(world=world, start=start, goal=goal, planner=planner, seed=seed,
                    name=f"dense_{seed}", **sections)
