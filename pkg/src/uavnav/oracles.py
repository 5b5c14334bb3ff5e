"""Brute-force reference implementations used by selfcheck and the test
suite. These deliberately avoid the analytic code paths they validate."""

from __future__ import annotations

import numpy as np

from .world import LIDAR_R_MAX, Arena, Cylinder, VehicleState, beam_bearings


def march_lidar(state: VehicleState, arena: Arena,
                obstacles, r_max: float = LIDAR_R_MAX,
                step: float = 1e-3) -> np.ndarray:
    """Ray-marching lidar: walk each beam in fixed increments until the
    sample point leaves the arena footprint or enters a cylinder."""
    px, py = float(state.position[0]), float(state.position[1])
    bearings = beam_bearings(state.yaw)
    ts = np.arange(step, r_max + 0.5 * step, step)
    xs = px + ts[None, :] * np.cos(bearings)[:, None]
    ys = py + ts[None, :] * np.sin(bearings)[:, None]
    h = arena.half_extent_xy
    hit = (np.abs(xs) > h) | (np.abs(ys) > h)
    for cyl in obstacles:
        hit |= (xs - cyl.cx) ** 2 + (ys - cyl.cy) ** 2 < cyl.radius ** 2
    ranges = np.full(len(bearings), r_max)
    any_hit = hit.any(axis=1)
    first = hit.argmax(axis=1)
    ranges[any_hit] = ts[first[any_hit]]
    return ranges
