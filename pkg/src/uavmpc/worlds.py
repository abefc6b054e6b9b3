"""Synthetic obstacle fields for benchmarking."""

from __future__ import annotations

import numpy as np

from uavmpc.mapping import Box, Cylinder, ObstacleWorld


def dense_cylinder_field(seed: int, n_cylinders: int = 20, length: float = 30.0,
                         width: float = 15.0, radius=(0.4, 0.8), height: float = 3.0,
                         min_gap: float = 1.6, keep_clear: float = 2.0,
                         margin: float = 2.0):
    """Random cylinder forest between a start and goal ``length`` apart.

    Cylinders keep at least ``min_gap`` of free space between surfaces and
    stay ``keep_clear`` away from start and goal. Returns (world, start, goal).
    """
    rng = np.random.default_rng(seed)
    z = height / 3
    start = np.array([0.0, width / 2, z])
    goal = np.array([length, width / 2, z])
    placed: list[Cylinder] = []
    attempts = 0
    while len(placed) < n_cylinders and attempts < 20_000:
        attempts += 1
        r = rng.uniform(*radius)
        cx = rng.uniform(keep_clear, length - keep_clear)
        cy = rng.uniform(r + 0.5, width - r - 0.5)
        if any(np.hypot(cx - e[0], cy - e[1]) < r + keep_clear for e in (start, goal)):
            continue
        if any(np.hypot(cx - c.cx, cy - c.cy) < r + c.radius + min_gap for c in placed):
            continue
        placed.append(Cylinder(float(cx), float(cy), float(r), 0.0, height))
    bounds = [[-margin, length + margin], [0.0, width], [0.0, height]]
    return ObstacleWorld(bounds, cylinders=placed), start, goal


def blocked_corridor(length: float = 8.0, width: float = 6.0, height: float = 3.0):
    """A wall spanning the whole cross-section between start and goal."""
    wall = Box((length / 2 - 0.2, 0.0, 0.0), (length / 2 + 0.2, width, height))
    world = ObstacleWorld([[-1.0, length + 1.0], [0.0, width], [0.0, height]], boxes=[wall])
    return world, np.array([0.0, width / 2, 1.0]), np.array([length, width / 2, 1.0])
