import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavnav.oracles import march_lidar
from uavnav.world import (
    Arena,
    Cylinder,
    VehicleState,
    WindState,
    beam_bearings,
    cast_lidar,
    obstacles_for_env,
    ou_step,
    out_of_bounds,
    step_kinematics,
    wrap_angle,
)


def test_zero_action_zero_wind_keeps_pose():
    s = VehicleState(np.array([1.0, -2.0, 3.0]), 0.7)
    s2 = step_kinematics(s, np.zeros(3), WindState.zero(), 0.1)
    assert np.allclose(s2.position, s.position)
    assert s2.yaw == s.yaw
    assert np.all(s2.last_action == 0.0)


def test_forward_motion_hand_computed():
    # v_lin = 0.25 for dt = 0.1 at yaw 0 moves exactly 0.025 m along +x
    s = VehicleState(np.array([0.0, 0.0, 2.5]), 0.0)
    s2 = step_kinematics(s, np.array([0.25, 0.0, 0.0]), WindState.zero(), 0.1)
    assert s2.position[0] == pytest.approx(0.025, abs=1e-15)
    assert s2.position[1] == 0.0
    assert s2.position[2] == 2.5


def test_climb_against_downdraft_hand_computed():
    # dz = dt * (v_alt + wind_z) = 0.1 * (0.25 - 0.175) = 0.0075
    s = VehicleState(np.array([0.0, 0.0, 2.5]), 0.0)
    wind = WindState(np.array([0.0, 0.0, -0.175]))
    s2 = step_kinematics(s, np.array([0.0, 0.25, 0.25]), wind, 0.1)
    assert s2.yaw == pytest.approx(0.25)
    assert s2.position[2] == pytest.approx(2.5 + 0.0075, abs=1e-15)


def test_yaw_applied_before_translation():
    s = VehicleState(np.zeros(3), 0.0)
    s2 = step_kinematics(s, np.array([0.25, math.pi / 2, 0.0]),
                         WindState.zero(), 1.0)
    # translation uses the post-turn heading
    assert s2.position[0] == pytest.approx(0.0, abs=1e-12)
    assert s2.position[1] == pytest.approx(0.25)


@given(st.floats(-50, 50), st.lists(st.floats(-0.25, 0.25), min_size=1,
                                    max_size=60))
@settings(max_examples=200, deadline=None)
def test_yaw_stays_wrapped(yaw0, dyaws):
    s = VehicleState(np.zeros(3), wrap_angle(yaw0))
    for d in dyaws:
        s = step_kinematics(s, np.array([0.0, d, 0.0]), WindState.zero(), 0.1)
        assert -math.pi < s.yaw <= math.pi


def test_step_displacement_bound():
    # |dpos| <= dt * (v_lin + v_alt + |wind| * sqrt(3)) for in-range inputs
    rng = np.random.default_rng(0)
    bound = 0.1 * (0.25 + 0.25 + 0.175 * math.sqrt(3))
    for _ in range(500):
        s = VehicleState(rng.normal(size=3), rng.uniform(-math.pi, math.pi))
        action = np.array([rng.uniform(0, 0.25), rng.uniform(-0.25, 0.25),
                           rng.uniform(-0.25, 0.25)])
        wind = WindState(rng.uniform(-0.175, 0.175, size=3))
        s2 = step_kinematics(s, action, wind, 0.1)
        assert np.linalg.norm(s2.position - s.position) <= bound + 1e-12


class TestOu:
    def test_sigma_zero_decays_monotonically(self):
        rng = np.random.default_rng(0)
        w = WindState(np.array([0.1, 0.0, 0.0]), sigma=0.0)
        prev = 0.1
        for _ in range(200):
            w = ou_step(w, 0.1, rng)
            assert 0.0 <= w.v[0] < prev
            prev = w.v[0]

    def test_clamp_always_holds(self):
        rng = np.random.default_rng(1)
        w = WindState.zero()
        for _ in range(20_000):
            w = ou_step(w, 0.1, rng)
            assert np.all(np.abs(w.v) <= 0.175)

    def test_dt_must_be_positive(self):
        with pytest.raises(ValueError):
            ou_step(WindState.zero(), 0.0, np.random.default_rng(0))

    def test_stationary_draw_within_clamp(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            w = WindState.stationary(rng)
            assert np.all(np.abs(w.v) <= 0.175)


class TestLidar:
    def test_forwardmost_beams_on_center_wall(self):
        # nearest beams to the heading sit at +/-6.75 deg (beam-center tiling)
        expected = 5.0 / math.cos(math.radians(6.75))
        s = VehicleState(np.array([0.0, 0.0, 2.5]), 0.0)
        r = cast_lidar(s, Arena(), (), 12.0)
        assert r[9] == pytest.approx(expected, abs=1e-9)
        assert r[10] == pytest.approx(expected, abs=1e-9)

    def test_bearing_convention(self):
        b = beam_bearings(0.0)
        assert b[0] == pytest.approx(math.radians(-135.0 + 6.75))
        assert b[19] == pytest.approx(math.radians(135.0 - 6.75))
        assert np.allclose(np.diff(b), math.radians(13.5))

    def test_max_range_when_nothing_in_reach(self):
        # aiming across the long diagonal: wall lies beyond r_max
        s = VehicleState(np.array([-4.9, -4.9, 2.5]), math.radians(45.0))
        r = cast_lidar(s, Arena(), (), 12.0)
        assert r[9] == 12.0 and r[10] == 12.0

    def test_cylinder_hit_matches_quadratic_and_marching(self):
        # ray-circle quadratic for the two near-center beams at +/-6.75 deg
        b = 2.0 * math.cos(math.radians(6.75))
        c = 2.0 ** 2 - 0.5 ** 2
        expected = b - math.sqrt(b * b - c)
        s = VehicleState(np.array([0.0, 0.0, 2.5]), 0.0)
        obstacles = (Cylinder(2.0, 0.0, 0.5),)
        r = cast_lidar(s, Arena(), obstacles, 12.0)
        assert r[9] == pytest.approx(expected, abs=1e-9)
        assert r[10] == pytest.approx(expected, abs=1e-9)
        m = march_lidar(s, Arena(), obstacles, 12.0)
        assert np.abs(r - m).max() <= 1e-3

    def test_matches_marching_oracle_on_random_poses(self):
        rng = np.random.default_rng(42)
        arena = Arena()
        for env_id in (1, 2):
            obstacles = obstacles_for_env(env_id)
            for _ in range(60):
                while True:
                    pos = np.array([rng.uniform(-4.8, 4.8),
                                    rng.uniform(-4.8, 4.8),
                                    rng.uniform(0.2, 4.8)])
                    if all(math.hypot(pos[0] - o.cx, pos[1] - o.cy)
                           > o.radius + 0.02 for o in obstacles):
                        break
                s = VehicleState(pos, rng.uniform(-math.pi, math.pi))
                a = cast_lidar(s, arena, obstacles)
                m = march_lidar(s, arena, obstacles)
                assert np.abs(a - m).max() <= 1e-3


class TestBounds:
    def test_center_in_bounds(self):
        assert not out_of_bounds(VehicleState(np.array([0, 0, 2.5]), 0.0),
                                 Arena())

    def test_above_ceiling(self):
        assert out_of_bounds(VehicleState(np.array([0, 0, 5.01]), 0.0),
                             Arena())

    def test_boundary_is_closed(self):
        assert not out_of_bounds(VehicleState(np.array([5.0, 0, 2.5]), 0.0),
                                 Arena())
        assert not out_of_bounds(VehicleState(np.array([0, -5.0, 0.0]), 0.0),
                                 Arena())
        assert out_of_bounds(VehicleState(np.array([5.0001, 0, 2.5]), 0.0),
                             Arena())


def test_world_determinism():
    def rollout():
        rng = np.random.default_rng(123)
        s = VehicleState(np.array([0.0, 0.0, 2.5]), 0.0)
        w = WindState.stationary(rng)
        track = []
        for i in range(300):
            w = ou_step(w, 0.1, rng)
            a = np.array([0.2, 0.05 * math.sin(i / 10), 0.01])
            s = step_kinematics(s, a, w, 0.1)
            track.append((*s.position, s.yaw, *w.v))
        return np.array(track)

    t1, t2 = rollout(), rollout()
    assert np.array_equal(t1, t2)


def test_invalid_geometry_rejected():
    with pytest.raises(ValueError):
        Arena(-1.0)
    with pytest.raises(ValueError):
        Arena(5.0, 3.0, 1.0)
    with pytest.raises(ValueError):
        Cylinder(0, 0, 0.0)
    with pytest.raises(ValueError):
        obstacles_for_env(3)
