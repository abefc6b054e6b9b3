"""Obstacle worlds, a ray-casting range sensor and voxel occupancy grids."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from uavmpc.errors import SensingError

_EPS = 1e-12


@dataclass(frozen=True)
class Cylinder:
    """Vertical cylinder; ``z0``/``z1`` bound its height."""

    cx: float
    cy: float
    radius: float
    z0: float = 0.0
    z1: float = 3.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"cylinder radius must be > 0, got {self.radius}")
        if not self.z1 > self.z0:
            raise ValueError("cylinder needs z1 > z0")

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        radial = np.hypot(pts[:, 0] - self.cx, pts[:, 1] - self.cy) - self.radius
        vertical = np.maximum(self.z0 - pts[:, 2], pts[:, 2] - self.z1)
        outside = np.hypot(np.maximum(radial, 0), np.maximum(vertical, 0))
        inside = np.minimum(np.maximum(radial, vertical), 0)
        return outside + inside

    def ray_hits(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """First non-negative hit parameter per unit ray, ``inf`` on a miss."""
        t_best = np.full(len(dirs), np.inf)
        ox, oy = origin[0] - self.cx, origin[1] - self.cy
        dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
        # lateral surface
        qa = dx * dx + dy * dy
        qb = 2 * (ox * dx + oy * dy)
        qc = ox * ox + oy * oy - self.radius ** 2
        disc = qb * qb - 4 * qa * qc
        ok = (qa > _EPS) & (disc >= 0)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            for t in ((-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)):
                z = origin[2] + t * dz
                good = ok & (t >= 0) & (z >= self.z0) & (z <= self.z1)
                t_best = np.where(good & (t < t_best), t, t_best)
            # caps
            for zc in (self.z0, self.z1):
                t = (zc - origin[2]) / dz
                x = ox + t * dx
                y = oy + t * dy
                good = (np.abs(dz) > _EPS) & (t >= 0) & (x * x + y * y <= self.radius ** 2)
                t_best = np.where(good & (t < t_best), t, t_best)
        return t_best


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3 or not all(h > l for l, h in zip(lo, hi)):
            raise ValueError("box needs 3D corners with hi > lo on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        lo, hi = np.array(self.lo), np.array(self.hi)
        center, half = (lo + hi) / 2, (hi - lo) / 2
        q = np.abs(pts - center) - half
        outside = np.linalg.norm(np.maximum(q, 0), axis=1)
        inside = np.minimum(q.max(axis=1), 0)
        return outside + inside

    def ray_hits(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        lo, hi = np.array(self.lo), np.array(self.hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / dirs
            t1 = (lo - origin) * inv
            t2 = (hi - origin) * inv
        # axis-parallel rays: the slab is all-or-nothing
        par = np.abs(dirs) < _EPS
        inside_slab = (origin >= lo) & (origin <= hi)
        tmin = np.where(par, np.where(inside_slab, -np.inf, np.inf), np.minimum(t1, t2))
        tmax = np.where(par, np.where(inside_slab, np.inf, -np.inf), np.maximum(t1, t2))
        t_near = tmin.max(axis=1)
        t_far = tmax.min(axis=1)
        hit = (t_near <= t_far) & (t_far >= 0)
        t = np.where(t_near >= 0, t_near, t_far)
        return np.where(hit, t, np.inf)


@dataclass(frozen=True)
class ObstacleWorld:
    """Static obstacles inside an axis-aligned box ``bounds`` (3x2, lo/hi rows per axis)."""

    bounds: np.ndarray
    cylinders: tuple = ()
    boxes: tuple = ()

    def __post_init__(self):
        b = np.array(self.bounds, dtype=float).reshape(3, 2)
        if not np.all(b[:, 1] > b[:, 0]):
            raise ValueError("world bounds must be non-degenerate on every axis")
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "cylinders", tuple(self.cylinders))
        object.__setattr__(self, "boxes", tuple(self.boxes))

    @property
    def obstacles(self) -> tuple:
        return self.cylinders + self.boxes

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.bounds[:, 0]) and np.all(p <= self.bounds[:, 1]))

    def surface_distance(self, point) -> float:
        """Signed distance to the nearest obstacle surface (negative inside)."""
        if not self.obstacles:
            return float("inf")
        p = np.asarray(point, dtype=float).reshape(1, 3)
        return float(min(o.signed_distance(p)[0] for o in self.obstacles))

    def __eq__(self, other):
        if not isinstance(other, ObstacleWorld):
            return NotImplemented
        return (np.array_equal(self.bounds, other.bounds) and self.cylinders == other.cylinders
                and self.boxes == other.boxes)

    def __hash__(self):
        return hash((self.bounds.tobytes(), self.cylinders, self.boxes))


@dataclass(frozen=True)
class SensorConfig:
    range: float = 3.0
    azimuth_rays: int = 64
    elevation_rays: int = 16
    elevation_span_deg: float = 90.0

    def directions(self) -> np.ndarray:
        az = np.arange(self.azimuth_rays) * (2 * np.pi / self.azimuth_rays)
        half = np.deg2rad(self.elevation_span_deg) / 2
        el = np.linspace(-half, half, self.elevation_rays) if self.elevation_rays > 1 else np.zeros(1)
        A, E = np.meshgrid(az, el, indexing="ij")
        A, E = A.ravel(), E.ravel()
        return np.column_stack([np.cos(E) * np.cos(A), np.cos(E) * np.sin(A), np.sin(E)])


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __len__(self):
        return len(self.points)


def sense(world: ObstacleWorld, position, range: float | None = None,
          rays: SensorConfig | None = None) -> PointCloud:
    """Cast the sensor's rays from ``position`` and keep the first hit on each.

    ``range`` overrides ``rays.range`` when given.
    """
    rays = rays or SensorConfig()
    if range is None:
        range = rays.range
    if not range > 0:
        raise ValueError("sensor range must be > 0")
    pos = np.asarray(position, dtype=float)
    if world.surface_distance(pos) < 0:
        raise SensingError(f"sensor position {pos} is inside an obstacle")
    dirs = rays.directions()
    t = np.full(len(dirs), np.inf)
    for obs in world.obstacles:
        t = np.minimum(t, obs.ray_hits(pos, dirs))
    keep = t <= range
    pts = pos + dirs[keep] * t[keep, None]
    return PointCloud(pts, pos.copy())


@dataclass(frozen=True)
class VoxelGrid:
    """Dense occupancy grid. ``raw`` keeps the occupancy before inflation."""

    origin: np.ndarray
    resolution: float
    dims: tuple
    occupancy: np.ndarray = field(repr=False)
    inflation_radius: float = 0.0
    raw: np.ndarray | None = field(default=None, repr=False)
    dropped: int = 0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError("dims must be three counts >= 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        if self.occupancy.shape != dims:
            raise ValueError("occupancy shape does not match dims")
        if self.raw is None:
            object.__setattr__(self, "raw", self.occupancy)

    def world_to_cell(self, q) -> tuple:
        c = np.floor((np.asarray(q, dtype=float) - self.origin) / self.resolution).astype(int)
        return tuple(int(v) for v in c)

    def cell_to_world_center(self, c) -> np.ndarray:
        return self.origin + (np.asarray(c, dtype=float) + 0.5) * self.resolution

    def cell_centers(self, cells) -> np.ndarray:
        return self.origin + (np.asarray(cells, dtype=float).reshape(-1, 3) + 0.5) * self.resolution

    def in_bounds(self, c) -> bool:
        return all(0 <= c[i] < self.dims[i] for i in range(3))

    def is_free(self, c) -> bool:
        return self.in_bounds(c) and not self.occupancy[tuple(c)]

    def occupied_count(self) -> int:
        return int(self.occupancy.sum())


def crop(grid: VoxelGrid, lo, hi) -> VoxelGrid:
    """Sub-grid of cells ``lo <= c < hi`` (per axis), keeping world coordinates."""
    lo = np.asarray(lo, dtype=int)
    hi = np.asarray(hi, dtype=int)
    if np.any(lo < 0) or np.any(hi > np.array(grid.dims)) or np.any(hi <= lo):
        raise ValueError("crop window must be a non-empty range inside the grid")
    sl = tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))
    return VoxelGrid(grid.origin + lo * grid.resolution, grid.resolution, tuple(hi - lo),
                     grid.occupancy[sl].copy(), grid.inflation_radius, grid.raw[sl].copy(),
                     grid.dropped)


def empty_grid(origin, resolution: float, dims) -> VoxelGrid:
    return VoxelGrid(origin, resolution, dims, np.zeros(tuple(int(d) for d in dims), dtype=bool))


def voxelize(cloud: PointCloud, origin, resolution: float, dims) -> VoxelGrid:
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    dims = tuple(int(d) for d in dims)
    origin = np.asarray(origin, dtype=float)
    occ = np.zeros(dims, dtype=bool)
    pts = np.asarray(cloud.points, dtype=float).reshape(-1, 3)
    cells = np.floor((pts - origin) / resolution).astype(np.int64)
    inside = np.all((cells >= 0) & (cells < np.array(dims)), axis=1)
    c = cells[inside]
    occ[c[:, 0], c[:, 1], c[:, 2]] = True
    return VoxelGrid(origin, float(resolution), dims, occ, dropped=int((~inside).sum()))


def ball_offsets(radius: float, resolution: float) -> np.ndarray:
    """Integer cell offsets whose centers lie within ``radius + resolution/2``."""
    reach = radius + resolution / 2
    n = int(np.floor(reach / resolution + 1e-9))
    r = np.arange(-n, n + 1)
    K = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    # small slack so exact-boundary centers are kept despite rounding
    dist = np.linalg.norm(K * resolution, axis=1)
    return K[dist <= reach + 1e-9 * resolution]


def inflate(grid: VoxelGrid, radius: float) -> VoxelGrid:
    if radius < 0:
        raise ValueError("inflation radius must be >= 0")
    # same cell set as dilating with ball_offsets, via an exact distance transform
    reach = radius + grid.resolution / 2
    if not grid.occupancy.any() or reach < grid.resolution:
        occ = grid.occupancy.copy()
    else:
        dist = ndimage.distance_transform_edt(~grid.occupancy)
        occ = dist * grid.resolution <= reach + 1e-9 * grid.resolution
    return replace(grid, occupancy=occ, inflation_radius=float(radius), raw=grid.raw)


def block_outside(grid: VoxelGrid, bounds) -> VoxelGrid:
    """Mark cells whose centers fall outside ``bounds`` as occupied (raw untouched)."""
    b = np.asarray(bounds, dtype=float).reshape(3, 2)
    axes = [grid.origin[i] + (np.arange(grid.dims[i]) + 0.5) * grid.resolution for i in range(3)]
    outside = [(a < b[i, 0]) | (a > b[i, 1]) for i, a in enumerate(axes)]
    mask = outside[0][:, None, None] | outside[1][None, :, None] | outside[2][None, None, :]
    if not mask.any():
        return grid
    return replace(grid, occupancy=grid.occupancy | mask, raw=grid.raw)


def obstacle_set(grid: VoxelGrid, position, horizon_radius: float, cap: int = 50,
                 spacing: float | None = None) -> np.ndarray:
    """Nearest raw-occupied cell centers within ``horizon_radius``, at most ``cap``.

    Ordering is by distance, then lexicographic cell index. With ``spacing``
    the cells are first thinned to the nearest one per ``spacing``-sized block
    (anchored at the grid origin), so the cap covers more distinct surfaces.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    cells = np.argwhere(grid.raw)
    if len(cells) == 0:
        return np.zeros((0, 3))
    centers = grid.cell_centers(cells)
    d = np.linalg.norm(centers - np.asarray(position, dtype=float), axis=1)
    near = d <= horizon_radius
    cells, centers, d = cells[near], centers[near], d[near]
    order = np.lexsort((cells[:, 2], cells[:, 1], cells[:, 0], d))
    if spacing is not None and len(order):
        if not spacing > 0:
            raise ValueError("spacing must be > 0")
        blocks = np.floor((centers[order] - grid.origin) / spacing + 1e-9).astype(np.int64)
        _, first = np.unique(blocks, axis=0, return_index=True)
        order = order[np.sort(first)]
    return centers[order[:cap]]
