"""Discrete jerk-input point-mass model of the UAV.

The state stacks position, velocity and acceleration as ``x = [p, v, a]``;
the input is the jerk ``u``. One step of length ``tau`` is

    p' = p + tau * v
    v' = v + tau * (a - D v)
    a' = a + tau * u

with ``D`` the diagonal linear drag matrix. Everything here is exact
double-precision linear algebra; no bounds are enforced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from uavmpc.errors import NonFiniteError, ParameterError


def _frozen(values, n: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have {n} components, got {arr.size}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class UavState:
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        for name in ("p", "v", "a"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 3, name))

    @classmethod
    def zeros(cls) -> UavState:
        return cls(np.zeros(3), np.zeros(3), np.zeros(3))

    @classmethod
    def at_rest(cls, position) -> UavState:
        return cls(position, np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, x) -> UavState:
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:9])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.a])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.p)) and np.all(np.isfinite(self.v))
                    and np.all(np.isfinite(self.a)))

    def __eq__(self, other):
        if not isinstance(other, UavState):
            return NotImplemented
        return bool(np.array_equal(self.as_vector(), other.as_vector()))

    def __hash__(self):
        return hash(self.as_vector().tobytes())


@dataclass(frozen=True)
class DynamicsParams:
    """Model constants and the kinematic limits used by the optimizer."""

    tau: float = 0.1
    d_max: tuple = (0.5, 0.5, 0.5)
    v_max: float = 2.0
    a_max: float = 9.81
    u_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "d_max", tuple(float(d) for d in self.d_max))
        self.validate()

    def validate(self) -> None:
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ParameterError("tau", "sampling period must be > 0")
        if len(self.d_max) != 3:
            raise ParameterError("d_max", "need exactly 3 drag coefficients")
        for name in ("v_max", "a_max", "u_max"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ParameterError(name, "bound must be > 0")
        for i, d in enumerate(self.d_max):
            if not (np.isfinite(d) and d >= 0):
                raise ParameterError("d_max", f"coefficient {i} must be >= 0")
            if 1.0 - self.tau * d <= 0:
                raise ParameterError("d_max", f"1 - tau*d_max[{i}] must stay > 0")


@dataclass(frozen=True)
class StateMatrices:
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)


@lru_cache(maxsize=64)
def _matrices(tau: float, d_max: tuple) -> StateMatrices:
    eye = np.eye(3)
    A = np.eye(9)
    A[0:3, 3:6] = tau * eye
    A[3:6, 3:6] = eye - tau * np.diag(d_max)
    A[3:6, 6:9] = tau * eye
    B = np.zeros((9, 3))
    B[6:9, :] = tau * eye
    A.setflags(write=False)
    B.setflags(write=False)
    return StateMatrices(A, B)


def build_matrices(params: DynamicsParams) -> StateMatrices:
    params.validate()
    return _matrices(float(params.tau), tuple(params.d_max))


def step(x: UavState, u, params: DynamicsParams) -> UavState:
    u = np.asarray(u, dtype=float)
    if not x.is_finite() or not np.all(np.isfinite(u)):
        raise NonFiniteError("state and jerk must be finite")
    m = build_matrices(params)
    return UavState.from_vector(m.A @ x.as_vector() + m.B @ u)


def rollout(x0: UavState, controls: Sequence, params: DynamicsParams) -> list[UavState]:
    """Propagate ``x0`` through each jerk in ``controls``; returns states 1..P."""
    controls = np.asarray(controls, dtype=float).reshape(-1, 3)
    if len(controls) == 0:
        raise ValueError("control sequence must be non-empty")
    if not x0.is_finite() or not np.all(np.isfinite(controls)):
        raise NonFiniteError("state and jerk must be finite")
    m = build_matrices(params)
    x = x0.as_vector()
    out = []
    for u in controls:
        x = m.A @ x + m.B @ u
        out.append(UavState.from_vector(x))
    return out


def stack(states: Sequence[UavState]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P,3) arrays of positions, velocities and accelerations."""
    return (np.array([s.p for s in states]), np.array([s.v for s in states]),
            np.array([s.a for s in states]))


@lru_cache(maxsize=64)
def _prediction(tau: float, d_max: tuple, horizon: int):
    m = _matrices(tau, d_max)
    n = horizon
    free = np.zeros((9 * n, 9))
    forced = np.zeros((9 * n, 3 * n))
    Ak = np.eye(9)
    powers = [np.eye(9)]
    for _ in range(n):
        Ak = m.A @ Ak
        powers.append(Ak)
    for i in range(n):
        free[9 * i:9 * i + 9] = powers[i + 1]
        for j in range(i + 1):
            forced[9 * i:9 * i + 9, 3 * j:3 * j + 3] = powers[i - j] @ m.B
    free.setflags(write=False)
    forced.setflags(write=False)
    return free, forced


def prediction_matrices(params: DynamicsParams, horizon: int):
    """Stacked maps with ``X = free @ x0 + forced @ U`` for states 1..horizon.

    Rows are ordered state-major (9 rows per step), columns of ``forced``
    control-major (3 per step).
    """
    params.validate()
    return _prediction(float(params.tau), tuple(params.d_max), int(horizon))
