"""Artificial potential field baseline.

Goal attraction ``k_att * (goal - p)`` plus the classic repulsion of every
obstacle point closer than ``rho0``. The resulting force is turned into a
velocity command capped at ``v_cap``; a proportional cascade converts that
command into a bounded jerk for the jerk-input model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from uavmpc.dynamics import DynamicsParams, UavState
from uavmpc.errors import ParameterError, SingularityError


@dataclass(frozen=True)
class ApfParams:
    k_att: float = 0.5
    k_rep: float = 0.05
    rho0: float = 1.5
    v_cap: float = 1.0
    scale: float = 0.5  # m/s of command per unit force
    k_vel: float = 2.0  # velocity-error gain of the tracking law, 1/s
    k_acc: float = 4.0  # acceleration-error gain of the tracking law, 1/s

    def __post_init__(self):
        for name in ("k_att", "k_rep", "rho0", "v_cap", "scale", "k_vel", "k_acc"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ParameterError(name, "must be > 0")


def repulsion_terms(position, obstacles, params: ApfParams) -> np.ndarray:
    """Per-obstacle repulsive force vectors (M, 3)."""
    p = np.asarray(position, dtype=float)
    obs = np.asarray(obstacles, dtype=float).reshape(-1, 3)
    if len(obs) == 0:
        return np.zeros((0, 3))
    diff = p - obs
    d = np.linalg.norm(diff, axis=1)
    if np.any(d == 0):
        raise SingularityError("UAV coincides with an obstacle point")
    mag = np.where(d <= params.rho0,
                   params.k_rep * (1 / d - 1 / params.rho0) / d ** 2, 0.0)
    return (mag / d)[:, None] * diff


def apf_force(position, goal, obstacles, params: ApfParams) -> np.ndarray:
    p = np.asarray(position, dtype=float)
    f = params.k_att * (np.asarray(goal, dtype=float) - p)
    return f + repulsion_terms(p, obstacles, params).sum(axis=0)


def velocity_command(force, params: ApfParams) -> np.ndarray:
    norm = np.linalg.norm(force)
    if norm == 0:
        return np.zeros(3)
    return force / norm * min(norm * params.scale, params.v_cap)


def apf_step(state: UavState, goal, obstacles, params: ApfParams,
             dyn: DynamicsParams | None = None) -> np.ndarray:
    """Commanded velocity from the potential field at the current position."""
    return velocity_command(apf_force(state.p, goal, obstacles, params), params)


def tracking_jerk(state: UavState, v_cmd, params: ApfParams, dyn: DynamicsParams) -> np.ndarray:
    """Jerk that steers the model toward ``v_cmd``; drag is fed forward and
    the acceleration and jerk norms are clipped to their limits."""
    drag = np.asarray(dyn.d_max)
    a_des = drag * v_cmd + params.k_vel * (np.asarray(v_cmd) - state.v)
    a_des = _clip_norm(a_des, dyn.a_max)
    return _clip_norm(params.k_acc * (a_des - state.a), dyn.u_max)


def _clip_norm(x, bound):
    n = np.linalg.norm(x)
    return x * (bound / n) if n > bound else x


class ApfPlanner:
    def __init__(self, params: ApfParams = ApfParams(), dyn: DynamicsParams = DynamicsParams()):
        self.params = params
        self.dyn = dyn

    def reset(self):
        pass

    def control(self, state: UavState, goal, obstacles):
        v_cmd = apf_step(state, goal, obstacles, self.params, self.dyn)
        return tracking_jerk(state, v_cmd, self.params, self.dyn), v_cmd
