"""Receding-horizon tracking controller for the kinematic bicycle model.

Per predicted step the cost is

    W1 |u|^2 + W2 |u - u_before|^2 + W3 |D - p|^2 + m W4 (psi - psi_goal)^2

with D the reference point reached by advancing along the track at the
desired speed, p the predicted position, and m = 1 only while the car's
current position lies within ``align_distance`` of the goal. Each gear segment is its
own tracking problem: its goal is the segment's end pose, so the car lines up
with the switch pose before changing gear. Controls are optimised by
projected gradient descent with an analytic (adjoint) gradient.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .vehicle import ControlInput, VehicleParams, normalize_angle

FORWARD = 1
REVERSE = -1


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 20
    dt: float = 0.1
    w_effort: float = 0.1
    w_smooth: float = 1.0
    w_track: float = 2.0
    w_heading: float = 5.0
    align_distance: float = 5.0
    iterations: int = 30
    v_forward: float = 1.0
    v_reverse: float = 0.5
    taper: float = 3.0
    min_advance: float = 0.2
    vehicle: VehicleParams = field(default_factory=VehicleParams)

    def __post_init__(self):
        if self.horizon < 1 or self.dt <= 0:
            raise ValueError("horizon must be >= 1 and dt > 0")
        if min(self.w_effort, self.w_smooth, self.w_track, self.w_heading) < 0:
            raise ValueError("cost weights must be non-negative")

    @property
    def bounds(self):
        p = self.vehicle
        return (p.a_min, p.a_max), (-p.delta_max, p.delta_max)


class ReferenceTrack:
    """Pose list split into constant-gear segments, each arc-length parameterised."""

    def __init__(self, poses, gears=None, goal_heading=None):
        poses = np.asarray(poses, dtype=float).reshape(-1, 3)
        if len(poses) == 0:
            raise ValueError("reference track is empty")
        gears = np.full(len(poses), FORWARD) if gears is None else np.asarray(gears)
        self.poses = poses
        self.gears = gears
        self.goal = (float(poses[-1, 0]), float(poses[-1, 1]))
        self.goal_heading = float(poses[-1, 2] if goal_heading is None else goal_heading)
        self.segments = []
        start = 0
        for i in range(1, len(poses) + 1):
            if i == len(poses) or gears[i] != gears[start]:
                seg = poses[start:i]
                if self.segments and len(seg):
                    # segments share their switch point
                    seg = np.vstack([self.segments[-1].xy[-1:], seg[:, :2]])
                else:
                    seg = seg[:, :2]
                self.segments.append(_Segment(seg, int(gears[start]), float(poses[i - 1, 2])))
                start = i
        self.segments[-1].end_heading = self.goal_heading

    def segment_goal(self, segment):
        """Goal position and heading used by the alignment term on ``segment``."""
        seg = self.segments[segment]
        return (float(seg.xy[-1, 0]), float(seg.xy[-1, 1])), seg.end_heading

    def __len__(self):
        return len(self.poses)

    @property
    def length(self):
        return sum(s.length for s in self.segments)


class _Segment:
    def __init__(self, xy, gear, end_heading=0.0):
        self.xy = np.asarray(xy, dtype=float)
        self.gear = gear
        self.end_heading = end_heading
        d = np.hypot(*np.diff(self.xy, axis=0).T) if len(self.xy) > 1 else np.zeros(0)
        self.s = np.concatenate([[0.0], np.cumsum(d)])
        self.length = float(self.s[-1])

    def project(self, x, y, s_lo=-math.inf, s_hi=math.inf):
        """Arc length of the nearest point, optionally restricted to a window."""
        if len(self.xy) == 1:
            return 0.0
        a = self.xy[:-1]
        b = self.xy[1:]
        ab = b - a
        L2 = (ab ** 2).sum(axis=1)
        L2 = np.where(L2 > 0, L2, 1.0)
        t = np.clip(((x - a[:, 0]) * ab[:, 0] + (y - a[:, 1]) * ab[:, 1]) / L2, 0.0, 1.0)
        px = a[:, 0] + t * ab[:, 0]
        py = a[:, 1] + t * ab[:, 1]
        d2 = (px - x) ** 2 + (py - y) ** 2
        s = self.s[:-1] + t * np.sqrt((ab ** 2).sum(axis=1))
        mask = (self.s[1:] >= s_lo) & (self.s[:-1] <= s_hi)
        if mask.any():
            d2 = np.where(mask, d2, np.inf)
        i = int(np.argmin(d2))
        return float(min(max(s[i], s_lo), s_hi)) if mask.any() else float(s[i])

    def point_at(self, s):
        s = min(max(s, 0.0), self.length)
        return (float(np.interp(s, self.s, self.xy[:, 0])),
                float(np.interp(s, self.s, self.xy[:, 1])))


def reference_points(ref, cfg, s0, segment=0):
    """Targets D(t+1..t+N): advance from arc length ``s0`` at the desired speed."""
    seg = ref.segments[segment]
    v_c = cfg.v_forward if seg.gear == FORWARD else cfg.v_reverse
    out = []
    s = s0
    for _ in range(cfg.horizon):
        remaining = seg.length - s
        frac = min(1.0, max(cfg.min_advance, remaining / cfg.taper)) if cfg.taper > 0 else 1.0
        s = min(seg.length, s + v_c * frac * cfg.dt)
        out.append(seg.point_at(s))
    return out


def _evaluate(state, a_seq, d_seq, targets, goal, psi_goal, cfg, u_prev, want_grad,
              breakdown=None):
    """Cost of one control sequence and, optionally, its gradient."""
    p = cfg.vehicle
    dt = cfg.dt
    L = p.wheelbase
    vmax = p.v_max
    W1, W2, W3, W4 = cfg.w_effort, cfg.w_smooth, cfg.w_track, cfg.w_heading
    dgate = cfg.align_distance
    gx, gy = goal
    N = len(a_seq)
    x, y, v, psi = state
    # the switch looks at where the car is now, so a predicted step can never
    # buy its way out of (or into) the alignment penalty
    m = math.hypot(x - gx, y - gy) < dgate
    xs = [x]
    ys = [y]
    vs = [v]
    ps = [psi]
    clamped = []
    stage = []
    cost = 0.0
    effort = smooth = track = head = 0.0
    a_last, d_last = u_prev
    for k in range(N):
        a = a_seq[k]
        dl = d_seq[k]
        effort += W1 * (a * a + dl * dl)
        smooth += W2 * ((a - a_last) ** 2 + (dl - d_last) ** 2)
        a_last, d_last = a, dl
        c, s = math.cos(psi), math.sin(psi)
        nx = x + v * c * dt
        ny = y + v * s * dt
        nv = v + a * dt
        clip = nv > vmax or nv < -vmax
        nv = min(max(nv, -vmax), vmax)
        npsi = psi + v * math.tan(dl) / L * dt
        x, y, v, psi = nx, ny, nv, npsi
        xs.append(x)
        ys.append(y)
        vs.append(v)
        ps.append(psi)
        clamped.append(clip)
        tx, ty = targets[k]
        ex = x - tx
        ey = y - ty
        track += W3 * (ex * ex + ey * ey)
        eh = normalize_angle(psi - psi_goal) if m else 0.0
        head += W4 * eh * eh
        stage.append((2.0 * W3 * ex, 2.0 * W3 * ey, 2.0 * W4 * eh))
    cost = effort + smooth + track + head
    if breakdown is not None:
        breakdown.update(effort=effort, smooth=smooth, track=track, heading=head,
                         total=effort + smooth + track + head)
    if not want_grad:
        return cost, None, None

    ga = [0.0] * N
    gd = [0.0] * N
    lx, ly, lpsi = stage[N - 1]
    lv = 0.0
    for k in range(N - 1, -1, -1):
        v = vs[k]
        psi = ps[k]
        dl = d_seq[k]
        c, s = math.cos(psi), math.sin(psi)
        cv = 0.0 if clamped[k] else 1.0
        tan_d = math.tan(dl)
        sec2 = 1.0 + tan_d * tan_d
        a_before = a_seq[k - 1] if k else u_prev[0]
        d_before = d_seq[k - 1] if k else u_prev[1]
        g_a = 2.0 * W1 * a_seq[k] + 2.0 * W2 * (a_seq[k] - a_before)
        g_d = 2.0 * W1 * dl + 2.0 * W2 * (dl - d_before)
        if k + 1 < N:
            g_a -= 2.0 * W2 * (a_seq[k + 1] - a_seq[k])
            g_d -= 2.0 * W2 * (d_seq[k + 1] - dl)
        g_a += lv * cv * dt
        g_d += lpsi * v * sec2 / L * dt
        ga[k] = g_a
        gd[k] = g_d
        nlx = lx
        nly = ly
        nlv = lx * c * dt + ly * s * dt + lv * cv + lpsi * tan_d / L * dt
        nlpsi = lpsi - lx * v * s * dt + ly * v * c * dt
        if k > 0:
            sx, sy, spsi = stage[k - 1]
            nlx += sx
            nly += sy
            nlpsi += spsi
        lx, ly, lv, lpsi = nlx, nly, nlv, nlpsi
    return cost, ga, gd


def _targets(state, ref, cfg, segment, s_hint=None):
    seg = ref.segments[segment]
    if s_hint is None:
        s0 = seg.project(state.x, state.y)
    else:
        s0 = seg.project(state.x, state.y, s_hint - 1.0, s_hint + 5.0)
    return reference_points(ref, cfg, s0, segment), s0


def _as_lists(u_seq):
    return [u.a for u in u_seq], [u.delta for u in u_seq]


def rollout_cost(state, u_seq, ref, cfg, u_prev=None, segment=0, breakdown=None,
                 targets=None):
    """Predicted cost of applying ``u_seq`` from ``state`` against ``ref``."""
    if len(u_seq) != cfg.horizon:
        raise ValueError(f"control sequence must have {cfg.horizon} entries")
    u_prev = u_prev or ControlInput()
    if targets is None:
        targets, _ = _targets(state, ref, cfg, segment)
    a_seq, d_seq = _as_lists(u_seq)
    goal, hg = ref.segment_goal(segment)
    cost, _, _ = _evaluate(state.as_tuple(), a_seq, d_seq, targets, goal, hg, cfg,
                           (u_prev.a, u_prev.delta), False, breakdown)
    return cost


def rollout_gradient(state, u_seq, ref, cfg, u_prev=None, segment=0, targets=None):
    """Analytic gradient of ``rollout_cost`` as two lists (d/da, d/ddelta)."""
    u_prev = u_prev or ControlInput()
    if targets is None:
        targets, _ = _targets(state, ref, cfg, segment)
    a_seq, d_seq = _as_lists(u_seq)
    goal, hg = ref.segment_goal(segment)
    _, ga, gd = _evaluate(state.as_tuple(), a_seq, d_seq, targets, goal, hg, cfg,
                          (u_prev.a, u_prev.delta), True)
    return ga, gd


def _clip(vals, lo, hi):
    return [min(max(v, lo), hi) for v in vals]


def solve(state, ref, cfg, u_prev=None, segment=0, warm=None, targets=None):
    """Optimised control sequence of length N; never worse than zero or hold-previous."""
    u_prev = u_prev or ControlInput()
    if targets is None:
        targets, _ = _targets(state, ref, cfg, segment)
    (amin, amax), (dmin, dmax) = cfg.bounds
    N = cfg.horizon
    st = state.as_tuple()
    up = (u_prev.a, u_prev.delta)
    goal, hg = ref.segment_goal(segment)

    def cost_of(a, d):
        return _evaluate(st, a, d, targets, goal, hg, cfg, up, False)[0]

    zero = ([0.0] * N, [0.0] * N)
    hold = ([min(max(up[0], amin), amax)] * N, [min(max(up[1], dmin), dmax)] * N)
    if warm is not None:
        a, d = _clip(warm[0], amin, amax), _clip(warm[1], dmin, dmax)
    else:
        a, d = list(hold[0]), list(hold[1])
    # cheap multi-start: constant-control seeds pull the descent out of the
    # stand-still basin when the car must first move away to line up
    start_cost = cost_of(a, d)
    for sa_ in (0.5 * amin, 0.0, 0.5 * amax):
        for sd_ in (dmin, 0.0, dmax):
            ca, cd = [sa_] * N, [sd_] * N
            c = cost_of(ca, cd)
            if c < start_cost:
                start_cost, a, d = c, ca, cd
    sa = max(abs(amin), abs(amax))
    sd = max(abs(dmin), abs(dmax))
    sa2, sd2 = sa * sa, sd * sd
    cost, ga, gd = _evaluate(st, a, d, targets, goal, hg, cfg, up, True)
    alpha = 0.05
    for _ in range(cfg.iterations):
        improved = False
        for _ls in range(12):
            na = _clip([ai - alpha * sa2 * gi for ai, gi in zip(a, ga)], amin, amax)
            nd = _clip([di - alpha * sd2 * gi for di, gi in zip(d, gd)], dmin, dmax)
            ncost = cost_of(na, nd)
            if ncost < cost:
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
        rel = (cost - ncost) / max(cost, 1e-12)
        a, d = na, nd
        cost, ga, gd = _evaluate(st, a, d, targets, goal, hg, cfg, up, True)
        alpha = min(alpha * 2.0, 10.0)
        if rel < 1e-9:
            break

    best = (cost, a, d)
    for ca, cd in (zero, hold):
        c = cost_of(ca, cd)
        if c < best[0]:
            best = (c, list(ca), list(cd))
    _, a, d = best
    return [ControlInput(ai, di) for ai, di in zip(a, d)]


class MpcController:
    """Stateful tracker: remembers the active gear segment, progress and warm start."""

    def __init__(self, cfg=None, switch_distance=0.6, switch_speed=0.15):
        self.cfg = cfg or MpcConfig()
        self.switch_distance = switch_distance
        self.switch_speed = switch_speed
        self.reset()

    def reset(self):
        self.segment = 0
        self.progress = None
        self.u_prev = ControlInput()
        self._warm = None
        self.last_breakdown = {}

    def _maybe_switch(self, state, ref):
        while self.segment < len(ref.segments) - 1:
            seg = ref.segments[self.segment]
            ex, ey = seg.xy[-1]
            dist = math.hypot(state.x - ex, state.y - ey)
            # a car stopped beside the end of the segment counts as arrived: the
            # lateral offset is the next segment's problem, waiting would deadlock
            at_end = (dist < 2.0 * self.switch_distance
                      and seg.project(state.x, state.y) >= seg.length - 0.05)
            if (dist < self.switch_distance or at_end) and abs(state.v) < self.switch_speed:
                self.segment += 1
                self.progress = None
                self._warm = None
            else:
                break

    @property
    def on_final_segment(self):
        return self._ref_segments is not None and self.segment == self._ref_segments - 1

    _ref_segments = None

    def solve(self, state, ref):
        self._ref_segments = len(ref.segments)
        self._maybe_switch(state, ref)
        targets, s0 = _targets(state, ref, self.cfg, self.segment, self.progress)
        self.progress = s0
        u_seq = solve(state, ref, self.cfg, self.u_prev, self.segment, self._warm, targets)
        bd = {}
        rollout_cost(state, u_seq, ref, self.cfg, self.u_prev, self.segment, bd, targets)
        self.last_breakdown = bd
        return u_seq

    def control_tick(self, state, ref):
        u_seq = self.solve(state, ref)
        u = u_seq[0]
        self.u_prev = u
        tail = u_seq[1:] + u_seq[-1:]
        self._warm = ([c.a for c in tail], [c.delta for c in tail])
        return u


def control_tick(state, ref, cfg, u_prev=None, segment=0):
    """Stateless single tick: first command of ``solve``."""
    return solve(state, ref, cfg, u_prev, segment)[0]
