import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from oracles import monolithic_cost
from uavmpc.dynamics import DynamicsParams, UavState, rollout, step
from uavmpc.errors import ParameterError
from uavmpc.mpc import (TERMS, CostWeights, MpcPlanner, SolverConfig, collision_cost, cost_gradient,
                        jerk_cost, shift, solve, speed_cost, total_cost, tracking_cost)
from uavmpc.reference import ReferenceTrajectory, sample_reference

PRM = DynamicsParams()
W = CostWeights()


def ref_of(points, v_ref=1.0):
    pts = np.asarray(points, dtype=float)
    return ReferenceTrajectory(pts, v_ref, v_ref * 0.1, np.arange(1, len(pts) + 1) * v_ref * 0.1)


def random_instance(rng, P=None, n_obs=None):
    P = P or int(rng.integers(1, 21))
    x0 = UavState(rng.normal(size=3), rng.normal(size=3) * 0.8, rng.normal(size=3) * 0.5)
    U = rng.normal(size=(P, 3)) * 0.6
    ref = ref_of(x0.p + np.cumsum(rng.normal(size=(P, 3)) * 0.1, axis=0), rng.uniform(0.2, 1.5))
    states = rollout(x0, U, PRM)
    pos = np.array([s.p for s in states])
    n_obs = int(rng.integers(0, 8)) if n_obs is None else n_obs
    # obstacles scattered around the predicted path so the logistic is not saturated
    obs = pos[rng.integers(0, P, size=n_obs)] + rng.normal(size=(n_obs, 3)) * 0.4
    return x0, U, ref, obs


# --- individual terms -----------------------------------------------------

def test_tracking_examples():
    assert tracking_cost(np.zeros((3, 3)), np.zeros((3, 3)), 1.0) == 0.0
    assert tracking_cost([[1.0, 0, 0]], [[0.0, 0, 0]], 2.0) == 2.0
    p, r = np.random.default_rng(0).normal(size=(2, 5, 3))
    assert tracking_cost(p, r, 2.0) == 2 * tracking_cost(p, r, 1.0)


def test_tracking_length_mismatch():
    with pytest.raises(ValueError):
        tracking_cost(np.zeros((3, 3)), np.zeros((2, 3)), 1.0)


def test_speed_examples():
    v = np.array([[0.6, 0.8, 0.0]] * 4)
    assert speed_cost(v, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert speed_cost([[2.0, 0, 0]], 1.0, 1.0) == 9.0
    assert speed_cost(np.zeros((20, 3)), 1.0, 1.0) == 20.0


def test_collision_examples():
    assert collision_cost(np.zeros((4, 3)), [], 10.0, 10.0, 0.5) == 0.0
    # logistic midpoint at exactly the safety distance
    assert abs(collision_cost([[0.5, 0, 0]], [[0.0, 0, 0]], 10.0, 10.0, 0.5) - 5.0) <= 1e-12
    c = collision_cost([[0.5 + 10 / 10.0, 0, 0]], [[0.0, 0, 0]], 1.0, 10.0, 0.5)
    assert c == pytest.approx(1 / (1 + math.exp(10)), rel=1e-12)
    assert c == pytest.approx(4.54e-5, rel=1e-3)


def test_jerk_examples():
    assert jerk_cost(np.zeros((5, 3)), 1.0) == 0.0
    assert jerk_cost([[1.0, 0, 0], [0, 2.0, 0]], 1.0) == 5.0


@given(st.floats(-3, 3, allow_nan=False))
def test_jerk_homogeneity(c):
    U = np.array([[1.0, -0.5, 0.25], [0.3, 0.2, -1.0]])
    assert jerk_cost(c * U, 0.7) == pytest.approx(c * c * jerk_cost(U, 0.7), rel=1e-12, abs=1e-15)


# --- total cost -----------------------------------------------------------

def test_hover_total_zero():
    x0 = UavState.at_rest([1.0, 2.0, 3.0])
    total, b = total_cost(np.zeros((20, 3)), x0, ReferenceTrajectory.hold(x0.p, 20), [], W, PRM)
    assert total == 0.0 and b.total == 0.0


def test_total_is_sum_of_terms(rng):
    for _ in range(50):
        x0, U, ref, obs = random_instance(rng)
        total, b = total_cost(U, x0, ref, obs, W, PRM)
        states = rollout(x0, U, PRM)
        parts = (tracking_cost(states, ref, W.w_t), speed_cost(states, ref.v_ref, W.w_s),
                 collision_cost(states, obs, W.w_c, W.alpha, W.r), jerk_cost(U, W.w_j))
        assert (b.tracking, b.speed, b.collision, b.jerk) == parts
        assert total == parts[0] + parts[1] + parts[2] + parts[3]


def test_total_matches_monolithic(rng):
    w = {k: getattr(W, k) for k in ("w_t", "w_s", "w_c", "w_j", "alpha", "r")}
    for _ in range(100):
        x0, U, ref, obs = random_instance(rng)
        total, _ = total_cost(U, x0, ref, obs, W, PRM)
        oracle = monolithic_cost(U, x0.as_vector(), ref.points, ref.v_ref, obs, w, PRM.tau, PRM.d_max)
        assert abs(total - oracle) <= 1e-12 * abs(oracle)


def test_control_count_mismatch():
    x0 = UavState.zeros()
    with pytest.raises(ValueError):
        total_cost(np.zeros((3, 3)), x0, ReferenceTrajectory.hold(x0.p, 4), [], W, PRM)


# --- gradient -------------------------------------------------------------

def central_difference(fun, U, h):
    g = np.zeros(U.size)
    flat = U.reshape(-1)
    for k in range(U.size):
        e = np.zeros(U.size)
        e[k] = h
        g[k] = (fun((flat + e).reshape(U.shape)) - fun((flat - e).reshape(U.shape))) / (2 * h)
    return g


def rel_err(g, fd):
    return np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8)


def test_gradient_total_fd(rng):
    h = SolverConfig().fd_step
    worst = 0.0
    for _ in range(100):
        x0, U, ref, obs = random_instance(rng)
        g = cost_gradient(U, x0, ref, obs, W, PRM)
        fd = central_difference(lambda V: total_cost(V, x0, ref, obs, W, PRM)[0], U, h)
        worst = max(worst, rel_err(g, fd))
    assert worst <= 1e-4


@pytest.mark.parametrize("term", TERMS)
def test_gradient_per_term_fd(rng, term):
    h = SolverConfig().fd_step
    for _ in range(30):
        x0, U, ref, obs = random_instance(rng, n_obs=3)
        g = cost_gradient(U, x0, ref, obs, W, PRM, terms=(term,))
        fd = central_difference(lambda V: getattr(total_cost(V, x0, ref, obs, W, PRM)[1], term), U, h)
        assert rel_err(g, fd) <= 1e-4


# --- solver ---------------------------------------------------------------

def test_hover_certifies_solver():
    x0 = UavState.at_rest([1.0, 2.0, 3.0])
    res = solve(x0, ReferenceTrajectory.hold(x0.p, 20), [], W, PRM)
    assert res.status == "converged"
    assert res.cost <= 1e-8
    assert res.iterations <= 50
    assert np.abs(res.controls).max() <= 1e-6


def nlp_oracle(x0, ref, obs):
    """Long-run SLSQP solve of the same problem, as an independent reference."""
    def fun(u):
        return total_cost(u.reshape(-1, 3), x0, ref, obs, W, PRM)[0]

    def cons(u):
        st = rollout(x0, u.reshape(-1, 3), PRM)
        v = np.array([s.v for s in st])
        a = np.array([s.a for s in st])
        uu = u.reshape(-1, 3)
        return np.concatenate([PRM.v_max ** 2 - (v * v).sum(1), PRM.a_max ** 2 - (a * a).sum(1),
                               PRM.u_max ** 2 - (uu * uu).sum(1)])

    out = minimize(fun, np.zeros(3 * len(ref.points)), method="SLSQP",
                   constraints=[{"type": "ineq", "fun": cons}],
                   options={"ftol": 1e-14, "maxiter": 2000})
    assert out.success
    return out.x.reshape(-1, 3)


def test_straight_line_matches_long_run_oracle():
    x0 = UavState.at_rest([0.0, 0.0, 1.0])
    ref = sample_reference([[0, 0, 1], [10, 0, 1]], x0.p, 1.0, 0.1, 20)
    res = solve(x0, ref, [], W, PRM)
    assert res.status == "converged"
    assert res.max_constraint_violation <= 1e-3
    U_star = nlp_oracle(x0, ref, [])
    p_star = np.array([s.p for s in rollout(x0, U_star, PRM)])
    p = np.array([s.p for s in res.states])
    rms = np.sqrt(np.mean(np.sum((p - p_star) ** 2, axis=1)))
    assert rms <= 0.1
    assert res.cost <= total_cost(U_star, x0, ref, [], W, PRM)[0] + 1e-6


@pytest.mark.parametrize("ahead", [1.0, 1.5])
def test_obstacle_on_line(ahead):
    x0 = UavState.at_rest([0.0, 0.0, 1.0])
    ref = sample_reference([[0, 0, 1], [10, 0, 1]], x0.p, 1.0, 0.1, 20)
    obs = np.array([[ahead, 0.0, 1.0]])
    res = solve(x0, ref, obs, W, PRM)
    assert res.status == "converged"
    p = np.array([s.p for s in res.states])
    assert np.linalg.norm(p - obs[0], axis=1).min() >= W.r - 0.05
    follow = solve(x0, ref, [], W, PRM).controls
    assert res.cost < total_cost(follow, x0, ref, obs, W, PRM)[0]


def test_solver_contract_random(rng):
    """Descent, constraint tolerance, dynamics consistency and no-worse-than-start."""
    cfg = SolverConfig()
    for _ in range(20):
        x0 = UavState(rng.normal(size=3), rng.normal(size=3) * 0.5, rng.normal(size=3) * 0.3)
        ref = sample_reference(x0.p + np.cumsum(rng.normal(size=(4, 3)), axis=0), x0.p, 1.0, 0.1, 20)
        obs = x0.p + rng.normal(size=(int(rng.integers(0, 6)), 3)) * 1.2
        start = total_cost(np.zeros((20, 3)), x0, ref, obs, W, PRM)[0]
        res = solve(x0, ref, obs, W, PRM, cfg)
        for before, after in res.merit_steps:
            assert after < before
        again = rollout(x0, res.controls, PRM)
        assert all(a == b for a, b in zip(again, res.states))
        if res.status == "converged":
            assert res.max_constraint_violation <= cfg.constraint_tolerance
            st = res.states
            assert max(np.linalg.norm(s.v) for s in st) <= PRM.v_max + 1e-3
            assert max(np.linalg.norm(s.a) for s in st) <= PRM.a_max + 1e-3
            assert np.linalg.norm(res.controls, axis=1).max() <= PRM.u_max + 1e-3
            assert res.cost <= start + 1e-9


def test_infeasible_start_reported():
    # 5 m/s is far beyond v_max and cannot be shed within the horizon at u_max = 1
    x0 = UavState([0, 0, 1.0], [5.0, 0, 0], [0, 0, 0])
    ref = sample_reference([[0, 0, 1], [20, 0, 1]], x0.p, 1.0, 0.1, 20)
    res = solve(x0, ref, [], W, PRM)
    assert res.status == "infeasible"
    assert res.max_constraint_violation > 1e-3
    assert np.all(np.isfinite(res.controls))


def test_iteration_limit_status():
    x0 = UavState.at_rest([0.0, 0.0, 1.0])
    ref = sample_reference([[0, 0, 1], [10, 0, 1]], x0.p, 1.0, 0.1, 20)
    res = solve(x0, ref, [[1.0, 0.0, 1.0]], W, PRM, SolverConfig(max_iterations=1))
    assert res.iterations == 1
    assert res.status in ("iteration-limit", "infeasible")


def test_position_envelope_respected():
    # the reference dives through the floor; the plan must level off at z = 0.8
    x0 = UavState.at_rest([0.0, 0.0, 1.0])
    ref = sample_reference([[0, 0, 1], [3, 0, -0.5]], x0.p, 1.0, 0.1, 20)
    box = [[-10, 10], [-10, 10], [0.8, 3]]
    free = solve(x0, ref, [], W, PRM)
    assert min(s.p[2] for s in free.states) < 0.7
    res = solve(x0, ref, [], W, PRM, position_bounds=box)
    assert res.status == "converged"
    assert min(s.p[2] for s in res.states) >= 0.8 - 1e-3
    assert res.cost >= free.cost - 1e-9


def test_inactive_envelope_changes_nothing():
    x0 = UavState.at_rest([0.0, 0.0, 1.0])
    ref = sample_reference([[0, 0, 1], [10, 0, 1]], x0.p, 1.0, 0.1, 20)
    obs = [[1.5, 0.1, 1.0]]
    free = solve(x0, ref, obs, W, PRM)
    boxed = solve(x0, ref, obs, W, PRM, position_bounds=[[-1, 12], [-3, 3], [0.25, 2.75]])
    far = solve(x0, ref, obs, W, PRM, position_bounds=[[-100, 100]] * 3)
    assert boxed.status == free.status == "converged"
    assert boxed.cost == pytest.approx(free.cost, rel=1e-6, abs=1e-9)
    np.testing.assert_array_equal(far.controls, free.controls)


def test_start_outside_envelope_is_infeasible():
    x0 = UavState.at_rest([0.0, 0.0, 0.2])
    ref = sample_reference([[0, 0, 0.2], [5, 0, 0.2]], x0.p, 1.0, 0.1, 20)
    res = solve(x0, ref, [], W, PRM, position_bounds=[[-10, 10], [-10, 10], [0.5, 3]])
    assert res.status == "infeasible"
    assert res.max_constraint_violation > 0.1


def test_envelope_rejects_inverted_box():
    x0 = UavState.at_rest([0.0, 0.0, 1.0])
    ref = sample_reference([[0, 0, 1], [5, 0, 1]], x0.p, 1.0, 0.1, 20)
    with pytest.raises(ValueError):
        solve(x0, ref, [], W, PRM, position_bounds=[[1, -1], [-1, 1], [0, 3]])


def test_warm_start_dominance():
    poly = np.array([[0, 0, 1], [4, 0, 1], [4, 3, 1], [8, 3, 1.0]])
    obs = np.array([[2.0, 0.4, 1.0], [4.5, 1.5, 1.0], [6, 2.7, 1.0]])
    x = UavState.at_rest(poly[0])
    prev = None
    for _ in range(50):
        ref = sample_reference(poly, x.p, 1.0, 0.1, 20)
        cold = solve(x, ref, obs, W, PRM)
        warm = solve(x, ref, obs, W, PRM, warm_start=None if prev is None else shift(prev))
        assert warm.status == "converged" and cold.status == "converged"
        assert warm.cost <= cold.cost + 1e-6
        prev = warm.controls
        x = step(x, warm.controls[0], PRM)


def test_planner_warm_starts_from_shift():
    x0 = UavState.at_rest([0.0, 0.0, 1.0])
    ref = sample_reference([[0, 0, 1], [10, 0, 1]], x0.p, 1.0, 0.1, 20)
    planner = MpcPlanner()
    first = planner.plan(x0, ref, [])
    x1 = step(x0, first.controls[0], PRM)
    ref1 = sample_reference([[0, 0, 1], [10, 0, 1]], x1.p, 1.0, 0.1, 20)
    second = planner.plan(x1, ref1, [])
    direct = solve(x1, ref1, [], W, PRM, warm_start=shift(first.controls))
    assert np.array_equal(second.controls, direct.controls)
    planner.reset()
    assert np.array_equal(planner.plan(x1, ref1, []).controls, solve(x1, ref1, [], W, PRM).controls)


def test_shift():
    U = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(shift(U), [[3, 4, 5], [6, 7, 8], [6, 7, 8]])


@pytest.mark.parametrize("name", ["w_t", "w_s", "w_c", "w_j", "alpha", "r"])
def test_weights_positive(name):
    with pytest.raises(ParameterError) as err:
        CostWeights(**{name: 0.0})
    assert err.value.field == name


@pytest.mark.parametrize("kw", [{"max_iterations": 0}, {"cost_tolerance": 0.0},
                                {"constraint_tolerance": -1.0}])
def test_solver_config_invalid(kw):
    with pytest.raises(ParameterError):
        SolverConfig(**kw)
