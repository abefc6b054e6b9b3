"""Dense convex QP solver (Mehrotra primal-dual interior point).

Solves ``min 1/2 x'Qx + q'x  s.t.  Gx <= h`` for small, dense problems such
as the SQP subproblems of the trajectory optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError


@dataclass
class QPResult:
    x: np.ndarray
    z: np.ndarray  # multipliers of Gx <= h
    iterations: int
    converged: bool


def _newton_solve(Q, G, w, rx, rs_over_s):
    """Solve the reduced system (Q + G' W G) dx = rx + G' rs_over_s."""
    M = Q + (G.T * w) @ G
    rhs = rx + G.T @ rs_over_s
    try:
        fac = cho_factor(M, check_finite=False)
        dx = cho_solve(fac, rhs, check_finite=False)
        # two refinement sweeps: M is badly scaled once z/s spreads near the optimum
        for _ in range(2):
            dx += cho_solve(fac, rhs - M @ dx, check_finite=False)
        return dx
    except LinAlgError:
        M[np.diag_indices_from(M)] += 1e-10 * max(1.0, np.abs(np.diag(M)).max())
        return np.linalg.solve(M, rhs)


def solve_qp(Q, q, G, h, tol: float = 1e-9, max_iter: int = 60) -> QPResult:
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n, m = len(q), len(h)
    if m == 0:
        x = np.linalg.solve(Q, -q)
        return QPResult(x, np.zeros(0), 0, True)

    x = np.zeros(n)
    s = np.maximum(h - G @ x, 1.0)
    z = np.ones(m)
    inf = np.inf
    best = (np.inf, x.copy(), z.copy())
    for it in range(1, max_iter + 1):
        Qx, Gx, Gz = Q @ x, G @ x, G.T @ z
        r_dual = Qx + q + Gz
        r_prim = Gx + s - h
        gap = s @ z / m
        # residuals relative to the magnitudes of the terms they balance
        d_scale = 1.0 + max(np.linalg.norm(q, inf), np.linalg.norm(Qx, inf), np.linalg.norm(Gz, inf))
        p_scale = 1.0 + max(np.linalg.norm(h, inf), np.linalg.norm(Gx, inf))
        err = max(np.linalg.norm(r_dual, inf) / d_scale, np.linalg.norm(r_prim, inf) / p_scale, gap)
        if err <= tol:
            return QPResult(x, z, it - 1, True)
        if err < best[0]:
            best = (err, x.copy(), z.copy())
        w = z / s

        def direction(r_cent):
            # r_cent is the target for s*z; eliminate ds, dz
            rx = -r_dual
            rs = -r_prim
            dx = _newton_solve(Q, G, w, rx, (z * rs - r_cent) / s)
            ds = -r_prim - G @ dx
            dz = (r_cent - z * ds) / s
            return dx, ds, dz

        # predictor
        with np.errstate(all="ignore"):
            dx, ds, dz = direction(-s * z)
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dz))):
            break  # slacks hit the floating-point floor; keep the last finite iterate
        a_aff = min(_max_step(s, ds), _max_step(z, dz))
        mu_aff = (s + a_aff * ds) @ (z + a_aff * dz) / m
        sigma = (mu_aff / gap) ** 3 if gap > 0 else 0.0
        # corrector
        with np.errstate(all="ignore"):
            dx, ds, dz = direction(-s * z - ds * dz + sigma * gap)
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dz))):
            break
        a = min(1.0, 0.99 * min(_max_step(s, ds), _max_step(z, dz)))
        x += a * dx
        s += a * ds
        z += a * dz
    # not converged: hand back the least-infeasible iterate, not the last one
    return QPResult(best[1], best[2], it, False)


def _max_step(v, dv) -> float:
    neg = dv < 0
    if not neg.any():
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))
