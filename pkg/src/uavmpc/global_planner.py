"""Shortest 26-connected grid paths: Jump Point Search and plain A*.

Diagonal moves may not cut corners: every cell of the unit cube spanned by a
diagonal step must be free. Both searches use the same move model, so JPS
returns the same optimal cost as A*; A* is kept as the reference and as a
fallback.

Pruning is derived generically rather than from hand-written 3D tables. For
a node ``x`` entered along direction ``d`` from ``p = x - d``, the natural
successors are the sub-directions of ``d``. Any other neighbour ``n`` is
forced when every path from ``p`` to ``n`` inside the 3x3x3 block around
``x`` that avoids ``x`` is strictly longer than ``p -> x -> n``. The answer
depends only on ``d`` and the block's occupancy, so it is memoised.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from uavmpc.mapping import VoxelGrid

DIRS = [d for d in itertools.product((-1, 0, 1), repeat=3) if d != (0, 0, 0)]
DIR_INDEX = {d: i for i, d in enumerate(DIRS)}
DIR_LEN = [math.sqrt(sum(c * c for c in d)) for d in DIRS]
# neighbour cells of the 3x3x3 block, bit j <-> DIRS[j]


def _sub_dirs(d):
    """Non-zero directions using a subset of d's non-zero components (d included)."""
    axes = [i for i in range(3) if d[i]]
    out = []
    for k in range(1, len(axes) + 1):
        for combo in itertools.combinations(axes, k):
            out.append(tuple(d[i] if i in combo else 0 for i in range(3)))
    return out


SUB_DIRS = [[DIR_INDEX[s] for s in _sub_dirs(d)] for d in DIRS]
PROPER_SUB_DIRS = [[s for s in SUB_DIRS[j] if s != j] for j in range(26)]
# cells a move must keep free besides its target (the cube it sweeps)
CUT_DIRS = PROPER_SUB_DIRS


class NoPathError(RuntimeError):
    """The goal is not reachable; ``frontier`` holds the cells that were expanded."""

    def __init__(self, message, frontier=()):
        super().__init__(message)
        self.frontier = list(frontier)


@dataclass
class CellPath:
    cells: list
    cost: float
    expansions: int = field(default=0, compare=False)


class _Lattice:
    """Padded flat view of a grid with per-cell move and occupancy bitmasks."""

    def __init__(self, grid: VoxelGrid):
        nx, ny, nz = grid.dims
        self.shape = (nx + 2, ny + 2, nz + 2)
        free = np.zeros(self.shape, dtype=bool)
        free[1:-1, 1:-1, 1:-1] = ~grid.occupancy
        self.strides = (self.shape[1] * self.shape[2], self.shape[2], 1)
        self.offsets = [d[0] * self.strides[0] + d[1] * self.strides[1] + d[2] for d in DIRS]
        flat = free.reshape(-1)
        n = flat.size
        idx = np.arange(n)
        pad = max(abs(o) for o in self.offsets)

        def shifted(o):
            out = np.zeros(n, dtype=bool)
            lo, hi = max(0, -o), min(n, n - o)
            out[lo:hi] = flat[lo + o:hi + o]
            return out

        nb_free = [shifted(o) for o in self.offsets]
        occ_mask = np.zeros(n, dtype=np.int64)
        move_mask = np.zeros(n, dtype=np.int64)
        for j in range(26):
            occ_mask |= (~nb_free[j]).astype(np.int64) << j
            ok = flat & nb_free[j]
            for c in CUT_DIRS[j]:
                ok &= nb_free[c]
            move_mask |= ok.astype(np.int64) << j
        del idx, pad
        self.free = flat
        self.occ_mask = occ_mask.tolist()
        self.move_mask = move_mask.tolist()

    def index(self, c) -> int:
        return (c[0] + 1) * self.strides[0] + (c[1] + 1) * self.strides[1] + c[2] + 1

    def cell(self, i: int) -> tuple:
        x, r = divmod(i, self.strides[0])
        y, z = divmod(r, self.strides[1])
        return (x - 1, y - 1, z - 1)


_BLOCK = [(0, 0, 0)] + DIRS
_BLOCK_INDEX = {c: i for i, c in enumerate(_BLOCK)}


def _move_key(j: int) -> tuple:
    # canonical order: higher-dimensional moves first, then direction index
    return (-sum(1 for c in DIRS[j] if c), j)


def _block_edges():
    """Moves between block cells with the neighbour bits they need free."""
    edges = [[] for _ in _BLOCK]
    for a, ca in enumerate(_BLOCK):
        for j, d in enumerate(DIRS):
            cb = (ca[0] + d[0], ca[1] + d[1], ca[2] + d[2])
            b = _BLOCK_INDEX.get(cb)
            if b is None:
                continue
            need = 0
            for c in [cb] + [tuple(ca[i] + DIRS[s][i] for i in range(3)) for s in CUT_DIRS[j]]:
                k = _BLOCK_INDEX[c]
                if k:
                    need |= 1 << (k - 1)
            edges[a].append((b, j, need))
    return edges


_EDGES = _block_edges()
_BETTER: dict = {}


def _minimal(masks):
    masks = sorted(set(masks), key=lambda m: bin(m).count("1"))
    out = []
    for m in masks:
        if not any(o & m == o for o in out):
            out.append(m)
    return tuple(out)


def _better_paths(j: int) -> dict:
    """For arrival DIRS[j]: neighbour k -> masks of alternative paths p..n that
    avoid x and beat p -> x -> n in (length, canonical key) order."""
    hit = _BETTER.get(j)
    if hit is not None:
        return hit
    d = DIRS[j]
    src = _BLOCK_INDEX[(-d[0], -d[1], -d[2])]
    bound = DIR_LEN[j] + math.sqrt(3) + 1e-9
    found = {src: [((0.0, ()), 0)]}
    stack = [(src, 0.0, (), 0, frozenset([src]))]
    while stack:
        a, g, seq, need, seen = stack.pop()
        for b, k, req in _EDGES[a]:
            if b == 0 or b in seen or g + DIR_LEN[k] > bound:
                continue
            ng, nseq, nneed = g + DIR_LEN[k], seq + (_move_key(k),), need | req
            found.setdefault(b, []).append(((round(ng, 9), nseq), nneed))
            stack.append((b, ng, nseq, nneed, seen | {b}))
    natural = set(SUB_DIRS[j])
    table = {}
    for k in range(26):
        if k in natural:
            continue
        via = (round(DIR_LEN[j] + DIR_LEN[k], 9), (_move_key(j), _move_key(k)))
        table[k] = _minimal(m for key, m in found.get(k + 1, ()) if key < via)
    _BETTER[j] = table
    return table


# bits a move out of x needs free (target plus swept cells)
_MOVE_NEED = [next(req for b, k, req in _EDGES[0] if k == j) for j in range(26)]
_FORCED_CACHE: dict = {}


def _forced(j: int, occ_mask: int) -> tuple:
    """Non-natural successor directions of a node entered along DIRS[j]."""
    key = (j, occ_mask)
    hit = _FORCED_CACHE.get(key)
    if hit is not None:
        return hit
    if len(_FORCED_CACHE) > 500_000:
        _FORCED_CACHE.clear()
    out = []
    for k, masks in _better_paths(j).items():
        if occ_mask & _MOVE_NEED[k]:
            continue
        if all(occ_mask & m for m in masks):
            out.append(k)
    res = tuple(out)
    _FORCED_CACHE[key] = res
    return res


def _octile(a, b) -> float:
    d = sorted((abs(a[0] - b[0]), abs(a[1] - b[1]), abs(a[2] - b[2])))
    return (math.sqrt(3) - math.sqrt(2)) * d[0] + (math.sqrt(2) - 1) * d[1] + d[2]


def _check_endpoints(grid: VoxelGrid, start, goal):
    start, goal = tuple(int(v) for v in start), tuple(int(v) for v in goal)
    for name, c in (("start", start), ("goal", goal)):
        if not grid.in_bounds(c):
            raise ValueError(f"{name} cell {c} is outside the grid")
        if grid.occupancy[c]:
            raise ValueError(f"{name} cell {c} is occupied")
    return start, goal


def _expand_path(jump_cells, grid: VoxelGrid) -> CellPath:
    cells = [jump_cells[0]]
    cost = 0.0
    for a, b in zip(jump_cells, jump_cells[1:]):
        delta = [b[i] - a[i] for i in range(3)]
        n = max(abs(v) for v in delta)
        step = tuple(v // n for v in delta)
        length = DIR_LEN[DIR_INDEX[step]]
        cur = a
        for _ in range(n):
            cur = (cur[0] + step[0], cur[1] + step[1], cur[2] + step[2])
            cells.append(cur)
            cost += length
    return CellPath(cells, cost * grid.resolution)


def plan_jps(grid: VoxelGrid, start, goal) -> CellPath:
    """Optimal 26-connected path from ``start`` to ``goal`` cell via JPS."""
    start, goal = _check_endpoints(grid, start, goal)
    if start == goal:
        return CellPath([start], 0.0)
    lat = _Lattice(grid)
    move_mask, occ_mask, offsets = lat.move_mask, lat.occ_mask, lat.offsets
    s_idx, g_idx = lat.index(start), lat.index(goal)

    def jump(idx, j):
        off = offsets[j]
        bit = 1 << j
        subs = PROPER_SUB_DIRS[j]
        while True:
            if not move_mask[idx] & bit:
                return -1
            idx += off
            if idx == g_idx:
                return idx
            m = occ_mask[idx]
            if m and _forced(j, m):
                return idx
            for s in subs:
                if jump(idx, s) != -1:
                    return idx

    g_best = {s_idx: 0.0}
    parent = {s_idx: None}
    arrive = {s_idx: -1}
    closed = set()
    heap = [(_octile(start, goal), 0.0, s_idx)]
    expansions = 0
    while heap:
        f, g, idx = heapq.heappop(heap)
        if idx in closed or g > g_best[idx]:
            continue
        closed.add(idx)
        expansions += 1
        if idx == g_idx:
            chain = []
            while idx is not None:
                chain.append(lat.cell(idx))
                idx = parent[idx]
            path = _expand_path(chain[::-1], grid)
            path.expansions = expansions
            return path
        j_in = arrive[idx]
        if j_in < 0:
            succ = range(26)
        else:
            m = occ_mask[idx]
            succ = sorted(set(SUB_DIRS[j_in]) | set(_forced(j_in, m) if m else ()))
        cell = lat.cell(idx)
        for j in succ:
            nxt = jump(idx, j)
            if nxt == -1 or nxt in closed:
                continue
            ncell = lat.cell(nxt)
            steps = max(abs(ncell[i] - cell[i]) for i in range(3))
            ng = g + steps * DIR_LEN[j]
            if ng < g_best.get(nxt, math.inf) - 1e-12:
                g_best[nxt] = ng
                parent[nxt] = idx
                arrive[nxt] = j
                heapq.heappush(heap, (ng + _octile(ncell, goal), ng, nxt))
    raise NoPathError(f"goal {goal} unreachable from {start}",
                      sorted(lat.cell(i) for i in closed))


def plan_astar(grid: VoxelGrid, start, goal, heuristic: bool = True) -> CellPath:
    """Plain A* on the same move model (Dijkstra when ``heuristic`` is False)."""
    start, goal = _check_endpoints(grid, start, goal)
    if start == goal:
        return CellPath([start], 0.0)
    lat = _Lattice(grid)
    move_mask, offsets = lat.move_mask, lat.offsets
    s_idx, g_idx = lat.index(start), lat.index(goal)

    def h(idx):
        if not heuristic:
            return 0.0
        c = lat.cell(idx)
        return math.dist(c, goal)

    g_best = {s_idx: 0.0}
    parent = {s_idx: None}
    closed = set()
    heap = [(h(s_idx), 0.0, s_idx)]
    expansions = 0
    while heap:
        f, g, idx = heapq.heappop(heap)
        if idx in closed:
            continue
        closed.add(idx)
        expansions += 1
        if idx == g_idx:
            chain = []
            while idx is not None:
                chain.append(lat.cell(idx))
                idx = parent[idx]
            path = _expand_path(chain[::-1], grid)
            path.expansions = expansions
            return path
        mm = move_mask[idx]
        for j in range(26):
            if not mm >> j & 1:
                continue
            nxt = idx + offsets[j]
            if nxt in closed:
                continue
            ng = g + DIR_LEN[j]
            if ng < g_best.get(nxt, math.inf) - 1e-12:
                g_best[nxt] = ng
                parent[nxt] = idx
                heapq.heappush(heap, (ng + h(nxt), ng, nxt))
    raise NoPathError(f"goal {goal} unreachable from {start}",
                      sorted(lat.cell(i) for i in closed))


def to_world(path: CellPath, grid: VoxelGrid) -> np.ndarray:
    """Cell-center polyline, one vertex per cell."""
    return grid.cell_centers(path.cells)


def nearest_free_cell(grid: VoxelGrid, point) -> tuple | None:
    """Free in-bounds cell whose center is closest to ``point`` (ties: lowest index)."""
    free = np.argwhere(~grid.occupancy)
    if len(free) == 0:
        return None
    d = np.linalg.norm(grid.cell_centers(free) - np.asarray(point, dtype=float), axis=1)
    best = np.flatnonzero(d <= d.min() + 1e-12)[0]
    return tuple(int(v) for v in free[best])
