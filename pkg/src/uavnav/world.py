"""Kinematic quadrotor world: arena, cylinder obstacles, planar lidar, OU wind.

Everything here is deterministic given a seeded numpy Generator. A world
instance owns no global state; independent instances can run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# Control step and sensor defaults. r_max exceeds any wall distance reachable
# from the central flight region, so in practice every beam returns a hit.
DT = 0.1
LIDAR_BEAMS = 20
LIDAR_FOV = math.radians(270.0)
LIDAR_R_MAX = 12.0

V_LIN_MAX = 0.25
D_YAW_MAX = 0.25
V_ALT_MAX = 0.25

WIND_CLAMP = 0.175
OU_THETA = 0.15
OU_SIGMA = 0.08
OU_MU = 0.0


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


@dataclass(frozen=True)
class Arena:
    half_extent_xy: float = 5.0
    z_min: float = 0.0
    z_max: float = 5.0

    def __post_init__(self):
        if self.half_extent_xy <= 0:
            raise ValueError("half_extent_xy must be positive")
        if self.z_min >= self.z_max:
            raise ValueError("z_min must be below z_max")


@dataclass(frozen=True)
class Cylinder:
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("cylinder radius must be positive")


# Four full-height risers placed symmetrically inside the goal region.
OBSTACLES_ENV2 = (
    Cylinder(1.5, 1.5, 0.35),
    Cylinder(-1.5, 1.5, 0.35),
    Cylinder(-1.5, -1.5, 0.35),
    Cylinder(1.5, -1.5, 0.35),
)


def obstacles_for_env(env_id: int) -> tuple[Cylinder, ...]:
    if env_id == 1:
        return ()
    if env_id == 2:
        return OBSTACLES_ENV2
    raise ValueError(f"unknown env_id {env_id!r} (expected 1 or 2)")


@dataclass(frozen=True)
class WindState:
    """Per-axis OU wind velocity, clamped to +/-clamp after every step."""

    v: np.ndarray  # shape (3,)
    theta: float = OU_THETA
    sigma: float = OU_SIGMA
    mu: float = OU_MU
    clamp: float = WIND_CLAMP

    @staticmethod
    def zero(theta: float = OU_THETA, sigma: float = OU_SIGMA,
             mu: float = OU_MU, clamp: float = WIND_CLAMP) -> "WindState":
        return WindState(np.zeros(3), theta, sigma, mu, clamp)

    @staticmethod
    def stationary(rng: np.random.Generator, theta: float = OU_THETA,
                   sigma: float = OU_SIGMA, mu: float = OU_MU,
                   clamp: float = WIND_CLAMP) -> "WindState":
        """Draw from the stationary distribution N(mu, sigma^2/(2 theta))."""
        std = sigma / math.sqrt(2.0 * theta)
        v = np.clip(mu + std * rng.standard_normal(3), -clamp, clamp)
        return WindState(v, theta, sigma, mu, clamp)


def ou_step(wind: WindState, dt: float, rng: np.random.Generator) -> WindState:
    """One Euler-Maruyama step of the OU process, clamped per axis."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    noise = rng.standard_normal(3)
    v = wind.v + wind.theta * (wind.mu - wind.v) * dt \
        + wind.sigma * math.sqrt(dt) * noise
    v = np.clip(v, -wind.clamp, wind.clamp)
    return replace(wind, v=v)


@dataclass
class VehicleState:
    position: np.ndarray              # (3,) meters
    yaw: float                        # radians in (-pi, pi]
    last_action: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @staticmethod
    def initial() -> "VehicleState":
        # Start pose: arena center at 2.5 m altitude, nose along +x.
        return VehicleState(np.array([0.0, 0.0, 2.5]), 0.0, np.zeros(3))


def step_kinematics(state: VehicleState, action: np.ndarray,
                    wind: WindState, dt: float) -> VehicleState:
    """Advance the kinematic model: yaw first, then translate along new yaw.

    action = (v_lin, d_yaw, v_alt) already clamped to its ranges.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_lin, d_yaw, v_alt = float(action[0]), float(action[1]), float(action[2])
    yaw = wrap_angle(state.yaw + d_yaw)
    vel = np.array([
        v_lin * math.cos(yaw) + wind.v[0],
        v_lin * math.sin(yaw) + wind.v[1],
        v_alt + wind.v[2],
    ])
    pos = state.position + dt * vel
    return VehicleState(pos, yaw, np.asarray(action, dtype=float).copy())


def out_of_bounds(state: VehicleState, arena: Arena) -> bool:
    """Closed-interval convention: exactly on the boundary is in-bounds."""
    x, y, z = state.position
    h = arena.half_extent_xy
    return abs(x) > h or abs(y) > h or z < arena.z_min or z > arena.z_max


def beam_bearings(yaw: float, n_beams: int = LIDAR_BEAMS,
                  fov: float = LIDAR_FOV) -> np.ndarray:
    """Beam-center bearings: yaw - fov/2 + (k + 0.5) * fov/n, k = 0..n-1.

    The 20 beams tile the 270 degree fan evenly; none points exactly forward.
    """
    step = fov / n_beams
    k = np.arange(n_beams)
    return yaw - fov / 2.0 + (k + 0.5) * step


def cast_lidar(state: VehicleState, arena: Arena,
               obstacles: tuple[Cylinder, ...] | list[Cylinder],
               r_max: float = LIDAR_R_MAX) -> np.ndarray:
    """Analytic planar raycast at the vehicle's altitude.

    Returns 20 ranges (meters), each min(wall hit, nearest cylinder hit, r_max).
    Rays are horizontal, so only the four vertical walls and the full-height
    cylinders can intersect them.
    """
    px, py = float(state.position[0]), float(state.position[1])
    bearings = beam_bearings(state.yaw)
    dx = np.cos(bearings)
    dy = np.sin(bearings)

    h = arena.half_extent_xy
    t = np.full(LIDAR_BEAMS, r_max)
    # Exit distance from a convex box = min positive plane-crossing t.
    for d, p in ((dx, px), (dy, py)):
        with np.errstate(divide="ignore"):
            t_pos = np.where(d > 0, (h - p) / np.where(d > 0, d, 1.0), np.inf)
            t_neg = np.where(d < 0, (-h - p) / np.where(d < 0, d, 1.0), np.inf)
        t = np.minimum(t, np.minimum(t_pos, t_neg))

    for cyl in obstacles:
        ox = cyl.cx - px
        oy = cyl.cy - py
        b = dx * ox + dy * oy                      # projection onto the ray
        c = ox * ox + oy * oy - cyl.radius ** 2    # squared clearance
        disc = b * b - c
        hit = (disc >= 0.0) & (b > 0.0)
        t_cyl = np.where(hit, b - np.sqrt(np.maximum(disc, 0.0)), np.inf)
        t_cyl = np.where(t_cyl > 0.0, t_cyl, np.inf)
        t = np.minimum(t, t_cyl)

    return np.minimum(t, r_max)
