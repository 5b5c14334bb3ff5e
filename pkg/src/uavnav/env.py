"""Episodic navigation environment on top of the kinematic world.

Builds the 26-float observation (20 normalized ranges, previous action,
normalized goal distance, two relative goal angles), applies the sparse
arrive/collide reward, and manages single-goal and waypoint tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .world import (
    DT,
    LIDAR_R_MAX,
    Arena,
    Cylinder,
    VehicleState,
    WindState,
    cast_lidar,
    obstacles_for_env,
    ou_step,
    out_of_bounds,
    step_kinematics,
    wrap_angle,
)

OBS_DIM = 26
ACT_DIM = 3

ACTION_LOW = np.array([0.0, -0.25, -0.25])
ACTION_HIGH = np.array([0.25, 0.25, 0.25])

D_NORM = 10.0  # distance normalization constant (meters)

TIMEOUT_GOAL = 1000
TIMEOUT_WAYPOINT = 3000

START_POSITION = np.array([0.0, 0.0, 2.5])

# Training-goal region: central 5x5 m footprint, away from floor/ceiling.
GOAL_XY_HALF = 2.5
GOAL_Z_MIN = 1.0
GOAL_Z_MAX = 4.0
GOAL_MIN_DIST_FROM_START = 1.0

WAYPOINT_RADIUS = 3.5
WAYPOINT_COUNT = 8
WAYPOINT_Z = 2.5


class EpisodeFinishedError(RuntimeError):
    """Raised when step() is called on an episode that already ended."""


def clamp_action(action: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(action, dtype=float), ACTION_LOW, ACTION_HIGH)


def scale_action(u: np.ndarray) -> np.ndarray:
    """Map a normalized action u in [-1,1]^3 to (v_lin, d_yaw, v_alt)."""
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    return ACTION_LOW + 0.5 * (u + 1.0) * (ACTION_HIGH - ACTION_LOW)


def unscale_action(action: np.ndarray) -> np.ndarray:
    """Inverse of scale_action (exact for in-box actions)."""
    a = np.asarray(action, dtype=float)
    return 2.0 * (a - ACTION_LOW) / (ACTION_HIGH - ACTION_LOW) - 1.0


@dataclass(frozen=True)
class RewardParams:
    r_arrive: float = 100.0
    r_collide: float = -10.0
    c_d: float = 0.5   # arrival margin (meters)
    c_o: float = 0.5   # collision clearance (meters)

    def __post_init__(self):
        if self.c_d <= 0 or self.c_o <= 0:
            raise ValueError("c_d and c_o must be positive")


@dataclass(frozen=True)
class TaskSpec:
    kind: str                      # "goal" | "waypoint"
    goals: tuple                   # ordered goal positions, each (3,) array-like
    timeout_steps: int

    def __post_init__(self):
        if self.kind not in ("goal", "waypoint"):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if len(self.goals) == 0:
            raise ValueError("task needs at least one goal")
        if self.timeout_steps <= 0:
            raise ValueError("timeout_steps must be positive")


def validate_task(task: TaskSpec, arena: Arena,
                  obstacles: tuple[Cylinder, ...],
                  clearance: float) -> None:
    """Goals must lie inside the arena and outside obstacles inflated by c_o."""
    for g in task.goals:
        g = np.asarray(g, dtype=float)
        if abs(g[0]) > arena.half_extent_xy or abs(g[1]) > arena.half_extent_xy:
            raise ValueError(f"goal {g} outside arena footprint")
        if not (arena.z_min <= g[2] <= arena.z_max):
            raise ValueError(f"goal {g} outside arena altitude band")
        for cyl in obstacles:
            if math.hypot(g[0] - cyl.cx, g[1] - cyl.cy) < cyl.radius + clearance:
                raise ValueError(f"goal {g} too close to obstacle at "
                                 f"({cyl.cx}, {cyl.cy})")


def sample_goal(rng: np.random.Generator,
                obstacles: tuple[Cylinder, ...],
                clearance: float) -> np.ndarray:
    """Rejection-sample a training goal in the central 5x5 m region."""
    while True:
        g = np.array([
            rng.uniform(-GOAL_XY_HALF, GOAL_XY_HALF),
            rng.uniform(-GOAL_XY_HALF, GOAL_XY_HALF),
            rng.uniform(GOAL_Z_MIN, GOAL_Z_MAX),
        ])
        if np.linalg.norm(g - START_POSITION) < GOAL_MIN_DIST_FROM_START:
            continue
        if any(math.hypot(g[0] - c.cx, g[1] - c.cy) < c.radius + clearance
               for c in obstacles):
            continue
        return g


def default_waypoints() -> tuple:
    """Eight waypoints on a 3.5 m circle at z=2.5, counter-clockwise from +x."""
    pts = []
    for i in range(WAYPOINT_COUNT):
        a = 2.0 * math.pi * i / WAYPOINT_COUNT
        pts.append(np.array([WAYPOINT_RADIUS * math.cos(a),
                             WAYPOINT_RADIUS * math.sin(a),
                             WAYPOINT_Z]))
    return tuple(pts)


def waypoint_task(timeout_steps: int = TIMEOUT_WAYPOINT) -> TaskSpec:
    return TaskSpec("waypoint", default_waypoints(), timeout_steps)


@dataclass
class Observation:
    ranges_norm: np.ndarray   # (20,) in [0,1]
    prev_action: np.ndarray   # (3,) raw action values
    dist_norm: float
    angle_xy: float           # (-pi, pi]
    angle_z: float

    def vector(self) -> np.ndarray:
        v = np.empty(OBS_DIM, dtype=np.float32)
        v[:20] = self.ranges_norm
        v[20:23] = self.prev_action
        v[23] = self.dist_norm
        v[24] = self.angle_xy
        v[25] = self.angle_z
        return v


def build_observation(state: VehicleState, ranges: np.ndarray,
                      goal: np.ndarray, r_max: float = LIDAR_R_MAX,
                      d_norm: float = D_NORM) -> Observation:
    delta = np.asarray(goal, dtype=float) - state.position
    dist = float(np.linalg.norm(delta))
    horiz = math.hypot(delta[0], delta[1])
    if dist == 0.0:
        # Coincident with the goal: angles are conventionally zero.
        angle_xy = 0.0
        angle_z = 0.0
    else:
        angle_xy = wrap_angle(math.atan2(delta[1], delta[0]) - state.yaw)
        angle_z = math.atan2(delta[2], horiz)
    return Observation(
        ranges_norm=np.asarray(ranges) / r_max,
        prev_action=np.asarray(state.last_action, dtype=float),
        dist_norm=dist / d_norm,
        angle_xy=angle_xy,
        angle_z=angle_z,
    )


def compute_reward(d_t: float, min_x: float, params: RewardParams,
                   oob: bool = False) -> tuple[float, str]:
    """Sparse reward: arrival dominates collision when both hold in one step."""
    if d_t < params.c_d:
        return params.r_arrive, "arrived"
    if min_x < params.c_o or oob:
        return params.r_collide, "collided"
    return 0.0, "running"


@dataclass
class StepResult:
    observation: Observation
    reward: float
    done: bool
    outcome: str          # running | arrived | collided | timeout
    waypoint_index: int   # number of goals reached so far


class NavEnv:
    """Episodic environment. One instance is single-threaded; run independent
    instances (with independent seeds) for parallel evaluation."""

    def __init__(self, env_id: int = 1, task: TaskSpec | None = None,
                 seed: int | None = None, wind_on: bool = True,
                 reward_params: RewardParams = RewardParams(),
                 arena: Arena = Arena(), dt: float = DT,
                 r_max: float = LIDAR_R_MAX,
                 ou_theta: float = 0.15, ou_sigma: float = 0.08,
                 ou_clamp: float = 0.175):
        self.env_id = env_id
        self.arena = arena
        self.obstacles = obstacles_for_env(env_id)
        self.dt = dt
        self.r_max = r_max
        self.wind_on = wind_on
        self.reward_params = reward_params
        self._ou = dict(theta=ou_theta, sigma=ou_sigma, mu=0.0, clamp=ou_clamp)
        self._fixed_task = task
        if task is not None:
            validate_task(task, arena, self.obstacles, reward_params.c_o)
        self.rng = np.random.default_rng(seed)

        self.task: TaskSpec | None = None
        self.state: VehicleState | None = None
        self.wind: WindState | None = None
        self.scan: np.ndarray | None = None
        self.waypoint_index = 0
        self.step_count = 0
        self._done = True

    # -- episode control ----------------------------------------------------

    def reset(self, task: TaskSpec | None = None) -> Observation:
        task = task if task is not None else self._fixed_task
        if task is None:
            goal = sample_goal(self.rng, self.obstacles, self.reward_params.c_o)
            task = TaskSpec("goal", (goal,), TIMEOUT_GOAL)
        else:
            validate_task(task, self.arena, self.obstacles,
                          self.reward_params.c_o)
        self.task = task
        self.state = VehicleState.initial()
        if self.wind_on:
            self.wind = WindState.stationary(self.rng, **self._ou)
        else:
            self.wind = WindState.zero(**self._ou)
        self.scan = cast_lidar(self.state, self.arena, self.obstacles,
                               self.r_max)
        self.waypoint_index = 0
        self.step_count = 0
        self._done = False
        return build_observation(self.state, self.scan, self.current_goal(),
                                 self.r_max)

    def current_goal(self) -> np.ndarray:
        idx = min(self.waypoint_index, len(self.task.goals) - 1)
        return np.asarray(self.task.goals[idx], dtype=float)

    @property
    def done(self) -> bool:
        return self._done

    def step(self, action: np.ndarray) -> StepResult:
        if self._done:
            raise EpisodeFinishedError("step() called on a finished episode")
        action = clamp_action(action)
        if self.wind_on:
            self.wind = ou_step(self.wind, self.dt, self.rng)
        self.state = step_kinematics(self.state, action, self.wind, self.dt)

        oob = out_of_bounds(self.state, self.arena)
        self.scan = cast_lidar(self._scan_state(oob), self.arena,
                               self.obstacles, self.r_max)
        goal = self.current_goal()
        d_t = float(np.linalg.norm(goal - self.state.position))
        min_x = float(self.scan.min())
        reward, outcome = compute_reward(d_t, min_x, self.reward_params, oob)

        done = False
        if outcome == "arrived":
            self.waypoint_index += 1
            if self.waypoint_index >= len(self.task.goals):
                done = True
            else:
                outcome = "running"   # intermediate waypoint: episode continues
        elif outcome == "collided":
            done = True

        self.step_count += 1
        if not done and outcome == "running" \
                and self.step_count >= self.task.timeout_steps:
            done = True
            outcome = "timeout"

        self._done = done
        obs = build_observation(self.state, self.scan, self.current_goal(),
                                self.r_max)
        return StepResult(obs, reward, done, outcome, self.waypoint_index)

    def _scan_state(self, oob: bool) -> VehicleState:
        # cast_lidar expects an in-arena origin; after an out-of-bounds
        # termination, cast from the nearest in-arena point so the final
        # observation stays well-formed.
        if not oob:
            return self.state
        h = self.arena.half_extent_xy
        pos = self.state.position.copy()
        pos[0] = min(max(pos[0], -h), h)
        pos[1] = min(max(pos[1], -h), h)
        return VehicleState(pos, self.state.yaw, self.state.last_action)


def path_percentage(waypoints_reached: int, total_waypoints: int,
                    kind: str = "waypoint") -> float:
    if kind != "waypoint":
        raise ValueError("path percentage is defined for waypoint trials only")
    return 100.0 * waypoints_reached / total_waypoints


TRAJECTORY_HEADER = "step,t,x,y,z,yaw,v_lin,d_yaw,v_alt,reward,outcome"


class TrajectoryLogger:
    """Collects per-step rows in the documented trajectory CSV schema."""

    def __init__(self):
        self.rows = [self._format(0, 0.0, START_POSITION, 0.0,
                                  np.zeros(3), 0.0, "running")]

    @staticmethod
    def _format(step, t, pos, yaw, action, reward, outcome) -> str:
        return (f"{step},{t:.1f},{pos[0]:.6f},{pos[1]:.6f},{pos[2]:.6f},"
                f"{yaw:.6f},{action[0]:.6f},{action[1]:.6f},{action[2]:.6f},"
                f"{reward:.1f},{outcome}")

    def log(self, step: int, dt: float, state: VehicleState,
            reward: float, outcome: str) -> None:
        self.rows.append(self._format(step, step * dt, state.position,
                                      state.yaw, state.last_action,
                                      reward, outcome))

    def write(self, path) -> None:
        with open(path, "w") as f:
            f.write(TRAJECTORY_HEADER + "\n")
            f.write("\n".join(self.rows) + "\n")
