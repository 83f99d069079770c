import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from avpark.mpc import (FORWARD, REVERSE, MpcConfig, MpcController, ReferenceTrack,
                        control_tick, rollout_cost, rollout_gradient, solve)
from avpark.vehicle import ControlInput, VehicleParams, VehicleState, normalize_angle, step


def _line(length=40.0, y=0.0, heading=0.0, spacing=0.25):
    s = np.arange(0.0, length + 1e-9, spacing)
    return np.column_stack([s * math.cos(heading), y + s * math.sin(heading),
                            np.full_like(s, heading)])


ZEROS = [ControlInput()] * MpcConfig().horizon


def _oracle_cost(state, u_seq, poses, cfg, u_prev):
    """Straight-line re-implementation: brute projection, taper advance, vehicle.step."""
    xy = poses[:, :2]
    seglen = np.hypot(*np.diff(xy, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    best = (math.inf, 0.0)
    for i in range(len(xy) - 1):
        a, b = xy[i], xy[i + 1]
        t = min(1.0, max(0.0, np.dot((state.x, state.y) - a, b - a) / np.dot(b - a, b - a)))
        p = a + t * (b - a)
        d = math.hypot(p[0] - state.x, p[1] - state.y)
        if d < best[0]:
            best = (d, cum[i] + t * seglen[i])
    s = best[1]
    goal = xy[-1]
    m = 1.0 if math.hypot(state.x - goal[0], state.y - goal[1]) < cfg.align_distance else 0.0
    total = 0.0
    prev = u_prev
    for u in u_seq:
        frac = min(1.0, max(cfg.min_advance, (cum[-1] - s) / cfg.taper))
        s = min(cum[-1], s + cfg.v_forward * frac * cfg.dt)
        D = (np.interp(s, cum, xy[:, 0]), np.interp(s, cum, xy[:, 1]))
        state = step(state, u, cfg.dt, cfg.vehicle)
        total += cfg.w_effort * (u.a ** 2 + u.delta ** 2)
        total += cfg.w_smooth * ((u.a - prev.a) ** 2 + (u.delta - prev.delta) ** 2)
        total += cfg.w_track * ((state.x - D[0]) ** 2 + (state.y - D[1]) ** 2)
        total += m * cfg.w_heading * normalize_angle(state.psi - poses[-1, 2]) ** 2
        prev = u
    return total


def _random_case(seed):
    rng = np.random.default_rng(seed)
    cfg = MpcConfig(horizon=int(rng.integers(3, 12)))
    p = cfg.vehicle
    pts = np.cumsum(rng.uniform(0.5, 1.5, size=(int(rng.integers(3, 12)), 2)), axis=0)
    pts = np.vstack([[0.0, 0.0], pts])
    heads = np.arctan2(*np.diff(pts, axis=0).T[::-1])
    poses = np.column_stack([pts, np.append(heads, heads[-1])])
    state = VehicleState(*rng.uniform(-1, 3, 2), rng.uniform(-1.5, 1.5), rng.uniform(-3, 3))
    u_seq = [ControlInput(rng.uniform(p.a_min, p.a_max), rng.uniform(-p.delta_max, p.delta_max))
             for _ in range(cfg.horizon)]
    u_prev = ControlInput(rng.uniform(p.a_min, p.a_max), rng.uniform(-p.delta_max, p.delta_max))
    return cfg, ReferenceTrack(poses), poses, state, u_seq, u_prev


def test_config_validation():
    with pytest.raises(ValueError):
        MpcConfig(horizon=0)
    with pytest.raises(ValueError):
        MpcConfig(w_track=-1)


def test_reference_track_gear_segments():
    poses = _line(4.0)
    gears = [FORWARD] * 10 + [REVERSE] * (len(poses) - 10)
    ref = ReferenceTrack(poses, gears)
    assert [s.gear for s in ref.segments] == [FORWARD, REVERSE]
    # the reverse segment starts where the forward one stops
    assert np.array_equal(ref.segments[1].xy[0], ref.segments[0].xy[-1])
    assert ref.length == pytest.approx(4.0)
    with pytest.raises(ValueError):
        ReferenceTrack(np.zeros((0, 3)))


def test_on_track_zero_controls_cost_nothing():
    ref = ReferenceTrack(_line())
    assert rollout_cost(VehicleState(0, 0, 1.0, 0), ZEROS, ref, MpcConfig()) == 0.0


def test_single_effort_term():
    cfg = MpcConfig(w_effort=1.0, w_smooth=0.0, w_track=0.0, w_heading=0.0)
    u = list(ZEROS)
    u[4] = ControlInput(1.0, 0.0)
    assert rollout_cost(VehicleState(0, 0, 1.0, 0), u, ReferenceTrack(_line()), cfg) == 1.0


def test_wrong_horizon_rejected():
    with pytest.raises(ValueError):
        rollout_cost(VehicleState(), ZEROS[:3], ReferenceTrack(_line()), MpcConfig())


@given(st.integers(0, 2**31))
def test_cost_matches_independent_oracle(seed):
    cfg, ref, poses, state, u_seq, u_prev = _random_case(seed)
    got = rollout_cost(state, u_seq, ref, cfg, u_prev)
    assert got == pytest.approx(_oracle_cost(state, u_seq, poses, cfg, u_prev), abs=1e-9, rel=1e-12)


@given(st.integers(0, 2**31))
def test_gradient_matches_central_differences(seed):
    cfg, ref, _, state, u_seq, u_prev = _random_case(seed)
    # keep away from the bounds and the speed clamp, where the cost has kinks
    u_seq = [ControlInput(0.5 * u.a, 0.5 * u.delta) for u in u_seq]
    state = replace(state, v=0.5 * state.v)
    ga, gd = rollout_gradient(state, u_seq, ref, cfg, u_prev)
    h = 1e-6
    for k in range(cfg.horizon):
        for which, g in (("a", ga[k]), ("delta", gd[k])):
            plus, minus = list(u_seq), list(u_seq)
            plus[k] = replace(u_seq[k], **{which: getattr(u_seq[k], which) + h})
            minus[k] = replace(u_seq[k], **{which: getattr(u_seq[k], which) - h})
            fd = (rollout_cost(state, plus, ref, cfg, u_prev)
                  - rollout_cost(state, minus, ref, cfg, u_prev)) / (2 * h)
            assert abs(g - fd) <= 1e-4 * max(1.0, abs(fd))


@given(st.integers(0, 2**31))
def test_solve_dominates_and_respects_bounds(seed):
    cfg, ref, _, state, _, u_prev = _random_case(seed)
    cfg = replace(cfg, iterations=8)
    out = solve(state, ref, cfg, u_prev)
    assert len(out) == cfg.horizon
    assert all(u.within(cfg.vehicle) for u in out)
    (amin, amax), (dmin, dmax) = cfg.bounds
    hold = [ControlInput(min(max(u_prev.a, amin), amax), min(max(u_prev.delta, dmin), dmax))] * cfg.horizon
    best = rollout_cost(state, out, ref, cfg, u_prev)
    assert best <= rollout_cost(state, [ControlInput()] * cfg.horizon, ref, cfg, u_prev)
    assert best <= rollout_cost(state, hold, ref, cfg, u_prev)


def test_on_track_command_is_near_zero():
    u = control_tick(VehicleState(0, 0, 1.0, 0), ReferenceTrack(_line()), MpcConfig())
    assert abs(u.a) < 1e-6 and abs(u.delta) < 1e-6


def test_lateral_offset_steers_back():
    ref = ReferenceTrack(_line())
    cfg = MpcConfig()
    state = VehicleState(0, 1.0, 1.0, 0)
    out = solve(state, ref, cfg)
    assert out[0].delta < 0
    assert rollout_cost(state, out, ref, cfg) < rollout_cost(state, ZEROS, ref, cfg)


def test_zero_steering_bound_gives_zero_steering():
    cfg = MpcConfig(vehicle=VehicleParams(delta_max=0.0))
    out = solve(VehicleState(0, 1.5, 0.5, 0.4), ReferenceTrack(_line()), cfg)
    assert all(u.delta == 0.0 for u in out)


def test_heading_term_off_far_from_goal():
    ref = ReferenceTrack(_line(), goal_heading=1.0)
    bd = {}
    rollout_cost(VehicleState(0, 0.5, 1.0, 0.7), ZEROS, ref, MpcConfig(), breakdown=bd)
    assert bd["heading"] == 0.0
    assert bd["total"] == bd["effort"] + bd["smooth"] + bd["track"]


def test_heading_term_prioritised_near_goal():
    ref = ReferenceTrack(_line(10.0))
    cfg = MpcConfig()
    state = VehicleState(7.5, 0.0, 0.5, 0.3)
    with_m = solve(state, ref, cfg)
    without_m = solve(state, ref, replace(cfg, align_distance=0.0))
    on, off = {}, {}
    rollout_cost(state, with_m, ref, cfg, breakdown=on)
    rollout_cost(state, without_m, ref, cfg, breakdown=off)
    assert on["heading"] > 0
    assert on["heading"] < off["heading"]
    assert with_m[0].delta < without_m[0].delta


def test_control_tick_is_deterministic():
    ref = ReferenceTrack(_line())
    state = VehicleState(1.0, 0.7, 0.3, -0.2)
    assert control_tick(state, ref, MpcConfig()) == control_tick(state, ref, MpcConfig())


def test_straight_track_closed_loop():
    ref = ReferenceTrack(_line())
    ctl = MpcController()
    state = VehicleState(0.0, 1.0, 0.0, 0.0)
    errs = []
    for _ in range(100):
        u = ctl.control_tick(state, ref)
        assert u.within(ctl.cfg.vehicle)
        state = step(state, u, ctl.cfg.dt, ctl.cfg.vehicle)
        errs.append(abs(state.y))
    assert min(errs) < 0.1
    assert errs[-1] < 0.1


def test_controller_switches_gear_when_stopped_at_segment_end():
    poses = np.vstack([_line(5.0), _line(5.0)[::-1][1:]])
    n = len(_line(5.0))
    ref = ReferenceTrack(poses, [FORWARD] * n + [REVERSE] * (len(poses) - n))
    ctl = MpcController()
    ctl.control_tick(VehicleState(2.0, 0.0, 1.0, 0.0), ref)
    assert ctl.segment == 0
    ctl.control_tick(VehicleState(5.0, 0.0, 0.0, 0.0), ref)
    assert ctl.segment == 1 and ctl.on_final_segment
    ctl.reset()
    assert ctl.segment == 0
