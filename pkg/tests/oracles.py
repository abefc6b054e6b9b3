"""Independent reference implementations used only by the tests."""

import itertools

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra


def grid_graph(occ, res):
    """26-connected move graph; a diagonal needs its whole swept unit cube free."""
    dims = occ.shape
    free = ~occ
    n = occ.size
    ids = np.arange(n).reshape(dims)
    rows, cols, w = [], [], []
    for d in itertools.product((-1, 0, 1), repeat=3):
        if d == (0, 0, 0):
            continue
        src = tuple(slice(max(0, -k), dims[i] - max(0, k)) for i, k in enumerate(d))
        ok = free[src].copy()
        # every corner of the cube spanned by the move, target included
        for sub in itertools.product(*[(0, k) if k else (0,) for k in d]):
            if sub == (0, 0, 0):
                continue
            sl = tuple(slice(max(0, -k) + s, dims[i] - max(0, k) + s)
                       for i, (k, s) in enumerate(zip(d, sub)))
            ok &= free[sl]
        dst = tuple(slice(max(0, -k) + k, dims[i] - max(0, k) + k) for i, k in enumerate(d))
        rows.append(ids[src][ok])
        cols.append(ids[dst][ok])
        w.append(np.full(ok.sum(), res * np.sqrt(sum(abs(k) for k in d))))
    return coo_matrix((np.concatenate(w), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()


def dijkstra_cost(occ, res, start, goal):
    """Shortest path cost or None when unreachable."""
    g = grid_graph(occ, res)
    ids = np.arange(occ.size).reshape(occ.shape)
    dist = dijkstra(g, directed=True, indices=ids[tuple(start)])
    c = dist[ids[tuple(goal)]]
    return None if np.isinf(c) else float(c)


def random_grid_case(rng, max_dims=(64, 64, 8), max_density=0.4):
    dims = tuple(int(rng.integers(1, m + 1)) for m in max_dims)
    occ = rng.random(dims) < rng.uniform(0, max_density)
    free = np.argwhere(~occ)
    if len(free) == 0:
        occ[0, 0, 0] = False
        free = np.argwhere(~occ)
    s = tuple(int(v) for v in free[rng.integers(len(free))])
    g = tuple(int(v) for v in free[rng.integers(len(free))])
    return occ, s, g


def monolithic_cost(U, x0_vec, ref_pts, v_ref, obstacles, w, tau, d_max):
    """Re-derives every cost term in one loop with plain floats."""
    p = list(x0_vec[0:3])
    v = list(x0_vec[3:6])
    a = list(x0_vec[6:9])
    total = 0.0
    for i in range(len(U)):
        u = U[i]
        p = [p[k] + tau * v[k] for k in range(3)]
        v = [v[k] + tau * (a[k] - d_max[k] * v[k]) for k in range(3)]
        a = [a[k] + tau * u[k] for k in range(3)]
        total += w["w_t"] * sum((p[k] - ref_pts[i][k]) ** 2 for k in range(3))
        total += w["w_s"] * (sum(vk * vk for vk in v) - v_ref ** 2) ** 2
        for m in obstacles:
            dist = sum((p[k] - m[k]) ** 2 for k in range(3)) ** 0.5
            total += w["w_c"] / (1.0 + np.exp(w["alpha"] * (dist - w["r"])))
        total += w["w_j"] * sum(uk * uk for uk in u)
    return total
