"""BUG2 baseline: m-line pursuit in the horizontal plane with left-handed
boundary following, plus independent proportional altitude control.

The planner reads the true vehicle pose and the 20-beam scan; it emits
actions in the same box as the learned agents so comparisons stay fair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .env import ACTION_HIGH, ACTION_LOW
from .world import LIDAR_FOV, wrap_angle

V_MAX = 0.25
D_YAW_MAX = 0.25
V_ALT_MAX = 0.25


@dataclass(frozen=True)
class Bug2Params:
    d_trigger: float = 1.0      # front range that starts boundary following
    standoff: float = 0.8       # desired lateral clearance while following
    eps_line: float = 0.15      # m-line re-acquisition band
    eps_progress: float = 0.2   # required improvement over the hit distance
    k_z: float = 0.5            # altitude P gain (1/s)
    k_side: float = 0.8         # standoff-regulation gain (rad per m)
    k_bearing: float = 0.5      # tangent-following gain (rad per rad)
    d_safe: float = 0.8         # lateral clearance that starts repulsion
    k_avoid: float = 2.5        # repulsion steering gain (rad per m)
    slow_radius: float = 2.0    # start decelerating this far from the goal


@dataclass
class Bug2State:
    mode: str = "motion-to-goal"          # or "boundary-follow"
    m_start: np.ndarray = field(default_factory=lambda: np.zeros(2))
    m_goal: np.ndarray = field(default_factory=lambda: np.zeros(2))
    hit_point: np.ndarray | None = None
    hit_distance: float | None = None

    def arm(self, start_xy, goal_xy):
        self.mode = "motion-to-goal"
        self.m_start = np.asarray(start_xy, dtype=float).copy()
        self.m_goal = np.asarray(goal_xy, dtype=float).copy()
        self.hit_point = None
        self.hit_distance = None


def _beam_offsets_deg(n: int) -> np.ndarray:
    step = math.degrees(LIDAR_FOV) / n
    return -math.degrees(LIDAR_FOV) / 2.0 + (np.arange(n) + 0.5) * step


def _sector_min(ranges: np.ndarray, lo_deg: float, hi_deg: float) -> float:
    """Min range over beams whose bearing offset (degrees) is in [lo, hi]."""
    offsets = _beam_offsets_deg(len(ranges))
    sel = (offsets >= lo_deg) & (offsets <= hi_deg)
    return float(ranges[sel].min())


def _nearest_in_sector(ranges: np.ndarray, lo_deg: float,
                       hi_deg: float) -> tuple[float, float]:
    """(min range, bearing offset in degrees) over a beam sector."""
    offsets = _beam_offsets_deg(len(ranges))
    sel = np.flatnonzero((offsets >= lo_deg) & (offsets <= hi_deg))
    k = sel[np.argmin(ranges[sel])]
    return float(ranges[k]), float(offsets[k])


def _dist_to_mline(p, start, goal) -> float:
    seg = goal - start
    L = math.hypot(seg[0], seg[1])
    if L < 1e-9:
        return float(np.linalg.norm(p - goal))
    d = p - start
    return abs(seg[0] * d[1] - seg[1] * d[0]) / L


def bug2_step(position: np.ndarray, yaw: float, goal: np.ndarray,
              ranges: np.ndarray, state: Bug2State,
              params: Bug2Params = Bug2Params()) -> tuple[np.ndarray, Bug2State]:
    """One control step. Returns a physical action and the updated state."""
    p = np.asarray(position[:2], dtype=float)
    g = np.asarray(goal[:2], dtype=float)
    d_xy = float(np.linalg.norm(g - p))
    v_alt = max(-V_ALT_MAX, min(V_ALT_MAX,
                                params.k_z * (float(goal[2]) - float(position[2]))))
    front_min = _sector_min(ranges, -27.0, 27.0)

    if state.mode == "motion-to-goal":
        # Only divert when the obstruction is actually closer than the goal.
        if front_min < params.d_trigger and front_min < d_xy:
            state.mode = "boundary-follow"
            state.hit_point = p.copy()
            state.hit_distance = d_xy
        else:
            err = wrap_angle(math.atan2(g[1] - p[1], g[0] - p[0]) - yaw)
            # Light repulsion keeps grazing passes outside the collision ring
            # when the obstruction is beside the m-line rather than ahead.
            d_near, bearing = _nearest_in_sector(ranges, -90.0, 90.0)
            avoid = 0.0
            if d_near < params.d_safe:
                avoid = math.copysign(params.k_avoid * (params.d_safe - d_near),
                                      -bearing)
            d_yaw = max(-D_YAW_MAX, min(D_YAW_MAX, err + avoid))
            v_lin = V_MAX * min(1.0, d_xy / params.slow_radius) \
                * max(0.0, math.cos(err)) \
                * max(0.4, min(1.0, d_near / params.d_safe))
            return np.array([v_lin, d_yaw, v_alt]), state

    # Boundary following, obstacle kept on the left: steer the nearest
    # return toward 90 degrees port while regulating the standoff distance.
    d_near, bearing = _nearest_in_sector(ranges, -27.0, 117.0)
    d_yaw = (params.k_bearing * math.radians(bearing - 90.0)
             + params.k_side * (d_near - params.standoff))
    d_yaw = max(-D_YAW_MAX, min(D_YAW_MAX, d_yaw))
    creep = (front_min - 0.45) / (params.d_trigger - 0.45)
    v_lin = V_MAX * min(1.0, max(0.2, creep))

    if (_dist_to_mline(p, state.m_start, state.m_goal) < params.eps_line
            and d_xy < state.hit_distance - params.eps_progress):
        state.mode = "motion-to-goal"
        state.hit_point = None
        state.hit_distance = None

    action = np.array([v_lin, d_yaw, v_alt])
    return np.clip(action, ACTION_LOW, ACTION_HIGH), state


class Bug2Policy:
    """Closed-loop adapter used by the evaluation harness.

    Re-arms the m-line whenever the environment switches to the next
    waypoint; reads pose and scan straight from the environment (the
    baseline is privileged by construction).
    """

    kind = "bug2"
    is_recurrent = False

    def __init__(self, params: Bug2Params = Bug2Params()):
        self.params = params
        self.state = Bug2State()
        self._armed_for = None

    def start_trial(self, env):
        self.state = Bug2State()
        self.state.arm(env.state.position[:2], env.current_goal()[:2])
        self._armed_for = env.waypoint_index

    def act(self, env, obs=None):
        if env.waypoint_index != self._armed_for:
            self.state.arm(env.state.position[:2], env.current_goal()[:2])
            self._armed_for = env.waypoint_index
        action, self.state = bug2_step(env.state.position, env.state.yaw,
                                       env.current_goal(), env.scan,
                                       self.state, self.params)
        return action


def bug2_trial(env, params: Bug2Params = Bug2Params()):
    """Run one closed-loop trial to completion. Returns the final StepResult
    and the number of steps taken."""
    env.reset()
    policy = Bug2Policy(params)
    policy.start_trial(env)
    steps = 0
    while True:
        res = env.step(policy.act(env))
        steps += 1
        if res.done:
            return res, steps
