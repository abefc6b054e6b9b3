"""Receding-horizon trajectory optimizer.

The local trajectory is found by minimising a weighted sum of four terms over
the jerk sequence ``U`` (P x 3):

* tracking   ``w_t * sum ||p_i - p_ref_i||^2``
* speed      ``w_s * sum (||v_i||^2 - v_ref^2)^2``
* collision  ``w_c * sum_i sum_m 1 / (1 + exp(alpha * (d_im - r)))``
* jerk       ``w_j * sum ||u_i||^2``

subject to ``||v_i|| <= v_max``, ``||a_i|| <= a_max`` and ``||u_i|| <= u_max``,
plus optional linear bounds on the positions (the known flight envelope).
States are eliminated through the linear model (single shooting), so the
only unknowns are the 3P jerk components.

The solver is a sequential quadratic programming loop: each iteration builds
a convex quadratic model of the cost (exact for the quadratic terms,
Gauss-Newton for the speed term, the convex part of the collision curvature,
plus multiplier-weighted constraint curvature), linearises the squared-norm
constraints, solves the QP subproblem with an interior-point method and takes
a backtracking step on an l1 merit function. When the linearised constraints
are inconsistent the subproblem is re-solved in elastic form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from uavmpc.dynamics import DynamicsParams, UavState, prediction_matrices, rollout, stack
from uavmpc.errors import ParameterError
from uavmpc.qp import solve_qp
from uavmpc.reference import ReferenceTrajectory

TERMS = ("tracking", "speed", "collision", "jerk")


@dataclass(frozen=True)
class CostWeights:
    w_t: float = 1.0
    w_s: float = 0.5
    w_c: float = 10.0
    w_j: float = 0.1
    alpha: float = 10.0  # logistic sharpness, 1/m
    r: float = 0.5  # safety distance, m

    def __post_init__(self):
        for name in ("w_t", "w_s", "w_c", "w_j", "alpha", "r"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ParameterError(name, "must be > 0")


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 50
    cost_tolerance: float = 1e-6
    constraint_tolerance: float = 1e-3
    fd_step: float = 1e-6

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ParameterError("max_iterations", "must be >= 1")
        for name in ("cost_tolerance", "constraint_tolerance", "fd_step"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ParameterError(name, "must be > 0")


@dataclass(frozen=True)
class CostBreakdown:
    tracking: float
    speed: float
    collision: float
    jerk: float

    @property
    def total(self) -> float:
        return self.tracking + self.speed + self.collision + self.jerk

    def as_dict(self) -> dict:
        return {**{t: getattr(self, t) for t in TERMS}, "total": self.total}


@dataclass
class PlanResult:
    states: list
    controls: np.ndarray
    cost_breakdown: CostBreakdown
    iterations: int
    max_constraint_violation: float
    status: str  # converged | iteration-limit | infeasible
    cost_history: list = field(default_factory=list, repr=False)
    merit_steps: list = field(default_factory=list, repr=False)  # (before, after) per accepted step

    @property
    def cost(self) -> float:
        return self.cost_breakdown.total


def _field(states, name) -> np.ndarray:
    if len(states) and isinstance(states[0], UavState):
        return np.array([getattr(s, name) for s in states]).reshape(-1, 3)
    return np.asarray(states, dtype=float).reshape(-1, 3)


def _positions(states) -> np.ndarray:
    return _field(states, "p")


def _velocities(states) -> np.ndarray:
    return _field(states, "v")


def _ref_points(ref) -> np.ndarray:
    pts = ref.points if isinstance(ref, ReferenceTrajectory) else ref
    return np.asarray(pts, dtype=float).reshape(-1, 3)


def tracking_cost(states, ref, w_t: float) -> float:
    """``states`` may be a list of UavState or a (P, 3) array of positions."""
    p = _positions(states)
    r = _ref_points(ref)
    if len(p) != len(r):
        raise ValueError(f"{len(p)} states but {len(r)} reference points")
    return float(w_t * np.sum((p - r) ** 2))


def speed_cost(states, v_ref: float, w_s: float) -> float:
    """``states`` may be a list of UavState or a (P, 3) velocity array."""
    v = _velocities(states)
    e = np.sum(v * v, axis=1) - v_ref ** 2
    return float(w_s * np.sum(e * e))


def collision_cost(states, obstacles, w_c: float, alpha: float, r: float) -> float:
    """Logistic proximity penalty; ``d`` is the Euclidean distance in meters."""
    obs = np.asarray(obstacles, dtype=float).reshape(-1, 3)
    if len(obs) == 0:
        return 0.0
    p = _positions(states)
    d = np.linalg.norm(p[:, None, :] - obs[None, :, :], axis=2)
    return float(w_c * np.sum(expit(-alpha * (d - r))))


def jerk_cost(controls, w_j: float) -> float:
    u = np.asarray(controls, dtype=float)
    return float(w_j * np.sum(u * u))


def total_cost(controls, x0: UavState, ref: ReferenceTrajectory, obstacles,
               weights: CostWeights, params: DynamicsParams) -> tuple[float, CostBreakdown]:
    U = np.asarray(controls, dtype=float).reshape(-1, 3)
    if len(U) != len(ref.points):
        raise ValueError(f"{len(U)} controls for a {len(ref.points)}-point reference")
    states = rollout(x0, U, params)
    b = CostBreakdown(
        tracking_cost(states, ref, weights.w_t),
        speed_cost(states, ref.v_ref, weights.w_s),
        collision_cost(states, obstacles, weights.w_c, weights.alpha, weights.r),
        jerk_cost(U, weights.w_j),
    )
    return b.total, b


class _Problem:
    """Cost, constraints and their derivatives as functions of flat U (3P)."""

    def __init__(self, x0: UavState, ref: ReferenceTrajectory, obstacles,
                 weights: CostWeights, params: DynamicsParams, position_bounds=None):
        self.P = P = len(ref.points)
        self.n = 3 * P
        self.w = weights
        self.params = params
        self.ref = _ref_points(ref)
        self.v_ref = float(ref.v_ref)
        self.obs = np.asarray(obstacles, dtype=float).reshape(-1, 3)
        free, forced = prediction_matrices(params, P)
        xf = (free @ x0.as_vector()).reshape(P, 9)
        F = forced.reshape(P, 9, self.n)
        self.Sp = F[:, 0:3].reshape(self.n, self.n)
        self.Sv = F[:, 3:6].reshape(self.n, self.n)
        self.Sa = F[:, 6:9].reshape(self.n, self.n)
        self.pf, self.vf, self.af = xf[:, 0:3], xf[:, 3:6], xf[:, 6:9]
        self.H_quad = 2 * weights.w_t * self.Sp.T @ self.Sp + 2 * weights.w_j * np.eye(self.n)
        self.bounds = np.array([params.v_max, params.a_max, params.u_max])
        # jerk rows are never constant; v/a rows with no dependence on U are
        self.row_active = np.concatenate([
            np.abs(self.Sv.reshape(P, 3, -1)).sum(axis=(1, 2)) > 0,
            np.abs(self.Sa.reshape(P, 3, -1)).sum(axis=(1, 2)) > 0,
            np.ones(P, dtype=bool),
        ])
        self._envelope(x0, position_bounds)

    def _envelope(self, x0, position_bounds):
        """Rows ``sign * (p_i[axis] - bound) >= 0`` for faces the horizon can reach."""
        self.faces = []  # (axis, bound, sign)
        if position_bounds is None:
            return
        b = np.asarray(position_bounds, dtype=float).reshape(3, 2)
        if np.any(b[:, 1] < b[:, 0]):
            raise ValueError("position bounds must satisfy lo <= hi")
        reach = self.params.v_max * self.P * self.params.tau + np.linalg.norm(x0.v) * self.P * self.params.tau
        for axis in range(3):
            for bound, sign in ((b[axis, 0], 1.0), (b[axis, 1], -1.0)):
                if np.isfinite(bound) and abs(x0.p[axis] - bound) <= reach:
                    self.faces.append((axis, bound, sign))
        rows = np.abs(self.Sp.reshape(self.P, 3, -1)).sum(axis=2) > 0
        self.row_active = np.concatenate([self.row_active] + [rows[:, ax] for ax, _, _ in self.faces])

    def predict(self, U):
        p = self.pf + (self.Sp @ U).reshape(self.P, 3)
        v = self.vf + (self.Sv @ U).reshape(self.P, 3)
        a = self.af + (self.Sa @ U).reshape(self.P, 3)
        return p, v, a

    def _collision_parts(self, p):
        diff = p[:, None, :] - self.obs[None, :, :]
        d = np.linalg.norm(diff, axis=2)
        sig = expit(-self.w.alpha * (d - self.w.r))
        return diff, np.maximum(d, 1e-12), sig

    def terms(self, U) -> dict:
        p, v, _ = self.predict(U)
        out = {
            "tracking": self.w.w_t * np.sum((p - self.ref) ** 2),
            "speed": self.w.w_s * np.sum((np.sum(v * v, axis=1) - self.v_ref ** 2) ** 2),
            "collision": 0.0,
            "jerk": self.w.w_j * U @ U,
        }
        if len(self.obs):
            out["collision"] = self.w.w_c * np.sum(self._collision_parts(p)[2])
        return out

    def cost(self, U) -> float:
        return float(sum(self.terms(U).values()))

    def gradient(self, U, terms=TERMS) -> np.ndarray:
        p, v, _ = self.predict(U)
        gp = np.zeros((self.P, 3))
        gv = np.zeros((self.P, 3))
        g = np.zeros(self.n)
        if "tracking" in terms:
            gp += 2 * self.w.w_t * (p - self.ref)
        if "speed" in terms:
            e = np.sum(v * v, axis=1) - self.v_ref ** 2
            gv += 4 * self.w.w_s * e[:, None] * v
        if "collision" in terms and len(self.obs):
            diff, d, sig = self._collision_parts(p)
            ds = -self.w.w_c * self.w.alpha * sig * (1 - sig)  # d(cost)/d(distance)
            gp += np.einsum("im,imk->ik", ds / d, diff)
        if "jerk" in terms:
            g += 2 * self.w.w_j * U
        return g + self.Sp.T @ gp.reshape(-1) + self.Sv.T @ gv.reshape(-1)

    def hessian_model(self, U, lam) -> np.ndarray:
        """Positive semidefinite curvature model of the Lagrangian."""
        P = self.P
        p, v, _ = self.predict(U)
        H = self.H_quad.copy()
        e = np.sum(v * v, axis=1) - self.v_ref ** 2
        Wv = 8 * self.w.w_s * np.einsum("ik,il->ikl", v, v)
        Wv += (4 * self.w.w_s * np.maximum(e, 0))[:, None, None] * np.eye(3)
        lam_v, lam_a, lam_u = lam[:P], lam[P:2 * P], lam[2 * P:3 * P]
        Wv += (2 * lam_v / self.bounds[0] ** 2)[:, None, None] * np.eye(3)
        H += self.Sv.T @ _blockdiag(Wv) @ self.Sv
        if np.any(lam_a > 0):
            Wa = (2 * lam_a / self.bounds[1] ** 2)[:, None, None] * np.eye(3)
            H += self.Sa.T @ _blockdiag(Wa) @ self.Sa
        H[np.diag_indices(self.n)] += np.repeat(2 * lam_u / self.bounds[2] ** 2, 3)
        if len(self.obs):
            diff, d, sig = self._collision_parts(p)
            curv = self.w.w_c * self.w.alpha ** 2 * sig * (1 - sig) * (1 - 2 * sig)
            nrm = diff / d[:, :, None]
            Wp = np.einsum("im,imk,iml->ikl", np.maximum(curv, 0), nrm, nrm)
            H += self.Sp.T @ _blockdiag(Wp) @ self.Sp
        return H

    def constraints(self, U):
        """Normalised ``c >= 0`` rows (v, a, u per step, then envelope faces) and their Jacobian."""
        P = self.P
        p, v, a = self.predict(U)
        u = U.reshape(P, 3)
        vm, am, um = self.bounds
        c = np.concatenate([
            1 - np.sum(v * v, axis=1) / vm ** 2,
            1 - np.sum(a * a, axis=1) / am ** 2,
            1 - np.sum(u * u, axis=1) / um ** 2,
        ])
        J = np.empty((3 * P, self.n))
        J[:P] = -2 / vm ** 2 * np.einsum("ik,ikn->in", v, self.Sv.reshape(P, 3, -1))
        J[P:2 * P] = -2 / am ** 2 * np.einsum("ik,ikn->in", a, self.Sa.reshape(P, 3, -1))
        Ju = np.zeros((P, self.n))
        Ju[np.repeat(np.arange(P), 3), np.arange(self.n)] = -2 / um ** 2 * U
        J[2 * P:] = Ju
        if self.faces:
            Sp = self.Sp.reshape(P, 3, -1)
            c = np.concatenate([c] + [sign * (p[:, ax] - bound) for ax, bound, sign in self.faces])
            J = np.vstack([J] + [sign * Sp[:, ax] for ax, _, sign in self.faces])
        return c, J

    def violation(self, U) -> float:
        """Worst bound excess in SI units (0 when feasible)."""
        p, v, a = self.predict(U)
        u = U.reshape(self.P, 3)
        excess = [np.linalg.norm(x, axis=1) - b for x, b in zip((v, a, u), self.bounds)]
        excess += [-sign * (p[:, ax] - bound) for ax, bound, sign in self.faces]
        return float(max(0.0, max(e.max() for e in excess)))


def _blockdiag(blocks) -> np.ndarray:
    n = len(blocks)
    out = np.zeros((3 * n, 3 * n))
    for i in range(n):
        out[3 * i:3 * i + 3, 3 * i:3 * i + 3] = blocks[i]
    return out


def _l1(c) -> float:
    return float(np.sum(np.maximum(-c, 0.0)))


def _subproblem(H, g, c, J, rho, active):
    """Step and multipliers of the local QP; elastic form when inconsistent."""
    m = len(c)
    lam = np.zeros(m)
    Ja, ca = J[active], c[active]
    res = solve_qp(H, g, -Ja, ca)
    if res.converged and np.all(ca + Ja @ res.x >= -1e-7):
        lam[active] = res.z
        return res.x, lam
    # elastic: slacks t >= 0 absorb violation at price rho
    n, k = len(g), len(ca)
    Q = np.zeros((n + k, n + k))
    Q[:n, :n] = H
    q = np.concatenate([g, np.full(k, rho)])
    G = np.block([[-Ja, -np.eye(k)], [np.zeros((k, n)), -np.eye(k)]])
    h = np.concatenate([ca, np.zeros(k)])
    res = solve_qp(Q, q, G, h)
    lam[active] = res.z[:k]
    return res.x[:n], lam


def solve(x0: UavState, ref: ReferenceTrajectory, obstacles, weights: CostWeights,
          params: DynamicsParams, config: SolverConfig = SolverConfig(),
          warm_start: Optional[Sequence] = None, position_bounds=None) -> PlanResult:
    """Optimise the jerk sequence for one planning cycle.

    ``position_bounds`` (3 x 2, lo/hi per axis) keeps the planned positions
    inside a box; pass None for no position constraint.
    """
    prob = _Problem(x0, ref, obstacles, weights, params, position_bounds)
    n = prob.n
    if warm_start is None:
        U = np.zeros(n)
    else:
        U = np.asarray(warm_start, dtype=float).reshape(-1).copy()
        if U.shape != (n,):
            raise ValueError(f"warm start must hold {prob.P} jerk vectors")

    f = prob.cost(U)
    c, J = prob.constraints(U)
    lam = np.zeros(len(c))
    rho = 10.0
    damping = 0.0
    history = [f]
    merit_steps = []
    status = "iteration-limit"
    iterations = 0
    for it in range(1, config.max_iterations + 1):
        iterations = it
        g = prob.gradient(U)
        H = prob.hessian_model(U, lam)
        if damping:
            H[np.diag_indices(n)] += damping
        d, lam_new = _subproblem(H, g, c, J, rho, prob.row_active)
        if lam_new.max(initial=0) > 0.5 * rho:
            rho = max(2 * lam_new.max(), 1.5 * rho)
        phi0 = f + rho * _l1(c)
        model = f + g @ d + 0.5 * d @ H @ d + rho * _l1(c + J @ d)
        pred = phi0 - model
        if pred <= min(config.cost_tolerance, 1e-9 * (1 + abs(phi0))):
            lam = lam_new
            status = "converged" if prob.violation(U) <= config.constraint_tolerance else "infeasible"
            break
        step = 1.0
        accepted = False
        for _ in range(40):
            Un = U + step * d
            fn = prob.cost(Un)
            cn, Jn = prob.constraints(Un)
            phin = fn + rho * _l1(cn)
            if phin < phi0 and phin <= phi0 - 1e-4 * step * pred:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            damping = max(10 * damping, 1e-6 * (1 + np.abs(np.diag(H)).max()))
            if damping > 1e8:
                break
            continue
        damping = damping / 10 if step == 1.0 else damping
        merit_steps.append((phi0, phin))
        decrease = f - fn
        U, f, c, J, lam = Un, fn, cn, Jn, lam_new
        history.append(f)
        if abs(decrease) < config.cost_tolerance and prob.violation(U) <= config.constraint_tolerance:
            status = "converged"
            break

    viol = prob.violation(U)
    if status == "converged" and viol > config.constraint_tolerance:
        status = "infeasible"
    elif status != "converged" and viol > config.constraint_tolerance:
        status = "infeasible"
    controls = U.reshape(-1, 3)
    states = rollout(x0, controls, params)
    _, breakdown = total_cost(controls, x0, ref, obstacles, weights, params)
    return PlanResult(states, controls, breakdown, iterations, viol, status, history, merit_steps)


def cost_gradient(controls, x0: UavState, ref: ReferenceTrajectory, obstacles,
                  weights: CostWeights, params: DynamicsParams, terms=TERMS) -> np.ndarray:
    """Analytic gradient of the (selected) cost terms w.r.t. the flat jerk vector."""
    prob = _Problem(x0, ref, obstacles, weights, params)
    return prob.gradient(np.asarray(controls, dtype=float).reshape(-1), terms)


class MpcPlanner:
    """Stateful wrapper that warm-starts each solve from the shifted previous plan."""

    def __init__(self, weights: CostWeights = CostWeights(), params: DynamicsParams = DynamicsParams(),
                 config: SolverConfig = SolverConfig(), position_bounds=None):
        self.weights = weights
        self.params = params
        self.config = config
        self.position_bounds = position_bounds
        self._previous: Optional[np.ndarray] = None

    def reset(self):
        self._previous = None

    def plan(self, x0: UavState, ref: ReferenceTrajectory, obstacles) -> PlanResult:
        warm = None
        if self._previous is not None and len(self._previous) == len(ref.points):
            warm = shift(self._previous)
        result = solve(x0, ref, obstacles, self.weights, self.params, self.config, warm,
                       self.position_bounds)
        self._previous = result.controls.copy()
        return result


def shift(controls) -> np.ndarray:
    """Drop the first jerk and repeat the last one."""
    U = np.asarray(controls, dtype=float).reshape(-1, 3)
    return np.vstack([U[1:], U[-1:]])
