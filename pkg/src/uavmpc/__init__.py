"""Two-phase UAV motion planning: voxel mapping, JPS global paths and an MPC
local trajectory optimizer, with an APF baseline and a closed-loop simulator."""

from uavmpc.apf import ApfParams, ApfPlanner
from uavmpc.dynamics import DynamicsParams, UavState, build_matrices, rollout, step
from uavmpc.global_planner import CellPath, NoPathError, plan_astar, plan_jps, to_world
from uavmpc.mapping import (
    Box,
    Cylinder,
    ObstacleWorld,
    PointCloud,
    VoxelGrid,
    inflate,
    obstacle_set,
    sense,
    voxelize,
)
from uavmpc.mpc import CostWeights, MpcPlanner, PlanResult, SolverConfig, solve, total_cost
from uavmpc.reference import ReferenceTrajectory, sample_reference
from uavmpc.scenario import Scenario, ScenarioError, dense_scenario, dump_scenario, load_scenario
from uavmpc.sim import EpisodeLog, Metrics, compute_metrics, run_episode
from uavmpc.worlds import blocked_corridor, dense_cylinder_field

__all__ = [
    "ApfParams",
    "ApfPlanner",
    "Box",
    "CellPath",
    "CostWeights",
    "Cylinder",
    "DynamicsParams",
    "EpisodeLog",
    "Metrics",
    "MpcPlanner",
    "NoPathError",
    "ObstacleWorld",
    "PlanResult",
    "PointCloud",
    "ReferenceTrajectory",
    "Scenario",
    "ScenarioError",
    "SolverConfig",
    "UavState",
    "VoxelGrid",
    "blocked_corridor",
    "build_matrices",
    "compute_metrics",
    "dense_cylinder_field",
    "dense_scenario",
    "dump_scenario",
    "inflate",
    "load_scenario",
    "obstacle_set",
    "plan_astar",
    "plan_jps",
    "rollout",
    "run_episode",
    "sample_reference",
    "sense",
    "solve",
    "step",
    "to_world",
    "total_cost",
    "voxelize",
]
