import math

import pytest
from hypothesis import given, strategies as st

from avpark.vehicle import (ControlInput, VehicleParams, VehicleState, footprint_radius,
                            min_turn_radius, normalize_angle, step)


def test_straight_motion():
    s = step(VehicleState(0, 0, 1, 0), ControlInput(0, 0), 1.0, VehicleParams())
    assert (s.x, s.y, s.v, s.psi) == (1.0, 0.0, 1.0, 0.0)


def test_zero_speed_leaves_pose_alone():
    p = VehicleParams()
    s = step(VehicleState(0, 0, 0, 0.3), ControlInput(0.7, 0.4), 1.0, p)
    assert (s.x, s.y, s.psi) == (0.0, 0.0, 0.3)
    assert s.v == pytest.approx(0.7)


def test_heading_update_matches_bicycle_rate():
    p = VehicleParams(wheelbase=2.5)
    s = step(VehicleState(0, 0, 1, 0), ControlInput(0, 0.2), 0.1, p)
    assert s.psi == pytest.approx(0.1 * math.tan(0.2) / 2.5, abs=1e-12)
    # hand evaluation: tan(0.2) = 0.2027100355, so 0.1 * 0.2027100355 / 2.5
    assert s.psi == pytest.approx(0.0081084014, abs=1e-10)


def test_speed_clamped_to_vmax():
    p = VehicleParams(v_max=1.0)
    s = step(VehicleState(0, 0, 0.95, 0), ControlInput(1.0, 0), 0.1, p)
    assert s.v == 1.0


def test_min_turn_radius_values():
    assert min_turn_radius(VehicleParams(wheelbase=2.7, delta_max=math.pi / 4)) == pytest.approx(2.7)
    assert min_turn_radius(VehicleParams(wheelbase=2.7, delta_max=math.pi / 6)) == pytest.approx(
        4.6765, abs=1e-4)


def test_footprint_radius():
    assert footprint_radius(VehicleParams(body_length=4, body_width=2)) == pytest.approx(math.sqrt(5))
    zero = VehicleParams(body_length=0, body_width=0)
    assert footprint_radius(zero, 1.0) == 1.0
    p = VehicleParams()
    assert footprint_radius(p, 1.5) - footprint_radius(p, 0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        footprint_radius(p, -0.1)


def test_params_validation():
    with pytest.raises(ValueError):
        VehicleParams(wheelbase=0)
    with pytest.raises(ValueError):
        VehicleParams(delta_max=math.pi / 2)


def test_heading_rate_error_shrinks_linearly():
    p = VehicleParams()
    v, delta = 1.5, 0.3
    rate = v * math.tan(delta) / p.wheelbase
    errs = []
    for dt in (1e-2, 1e-3, 1e-4):
        # two steps so the rate is measured away from the initial state
        s1 = step(VehicleState(0, 0, v, 0.2), ControlInput(0.5, delta), dt, p)
        s2 = step(s1, ControlInput(0.5, delta), dt, p)
        errs.append(abs((s2.psi - s1.psi) / dt - rate))
    assert errs[1] <= errs[0] * 0.11 + 1e-15
    assert errs[2] <= errs[1] * 0.11 + 1e-15


def test_constant_steer_traces_min_radius_circle():
    p = VehicleParams()
    r = min_turn_radius(p)
    v, dt = 1.0, 0.01
    s = VehicleState(0, 0, v, 0)
    # centre of the turn sits on the left of the start pose
    cx, cy = 0.0, r
    worst = 0.0
    for _ in range(int(2 * math.pi * r / (v * dt))):
        s = step(s, ControlInput(0, p.delta_max), dt, p)
        worst = max(worst, abs(math.hypot(s.x - cx, s.y - cy) - r))
    assert worst <= 2 * v * dt


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-2, 2), st.floats(-10, 10),
       st.floats(-1, 1), st.floats(-0.57, 0.57), st.floats(0.001, 1.0))
def test_psi_stays_normalised(x, y, v, psi, a, delta, dt):
    s = step(VehicleState(x, y, v, psi), ControlInput(a, delta), dt, VehicleParams())
    assert -math.pi < s.psi <= math.pi
    assert all(math.isfinite(t) for t in s.as_tuple())


@given(st.floats(-20, 20))
def test_normalize_angle_range(angle):
    n = normalize_angle(angle)
    assert -math.pi < n <= math.pi
    assert math.isclose(math.cos(n), math.cos(angle), abs_tol=1e-9)
    assert math.isclose(math.sin(n), math.sin(angle), abs_tol=1e-9)


@given(st.floats(-3, 3), st.floats(-1, 1))
def test_zero_speed_zero_control_identity(psi, pos):
    p = VehicleParams()
    s0 = VehicleState(pos, -pos, 0.0, normalize_angle(psi))
    s = step(s0, ControlInput(0.0, 0.0), 0.1, p)
    assert (s.x, s.y, s.psi) == (s0.x, s0.y, s0.psi)
