"""Reverse-in parking manoeuvres built from Ackermann arcs.

Both manoeuvres are constructed as the car's *exit* from the spot (driving
forward), then reversed: the park-in path is the exit path read backwards in
reverse gear. The last exit pose becomes the entry pose the approach planner
has to reach.
"""
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import ExitBlocked, Infeasible, SpotTooSmall
from .smoothing import poses_from, ramp, smooth_junction
from .vehicle import min_turn_radius, normalize_angle

POSE_STEP = 0.25
RADIUS_MARGIN = 1.1
JUNCTION_WINDOW = 2
# the S-curve flips steering mid-manoeuvre; wider arcs leave the tracker steering
# authority to spare, so the widest one the spot allows is tried first
PARALLEL_RADIUS_FACTORS = (1.6, 1.3, RADIUS_MARGIN, 1.0)
# parallel exits move sideways until the car is out in the aisle; smallest clear shift wins
SHIFT_FACTORS = (1.0, 1.5, 2.0, 2.5, 3.0)


class ParkingKind(str, Enum):
    PERPENDICULAR = "perpendicular"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class ParkingSpec:
    center: tuple
    spot_heading: float
    kind: ParkingKind = ParkingKind.PERPENDICULAR
    spot_length: float = 6.0
    spot_width: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ParkingKind(self.kind))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @classmethod
    def default_for(cls, center, spot_heading, kind, params):
        """Spot dimensions sized generously around the vehicle body."""
        kind = ParkingKind(kind)
        if kind is ParkingKind.PERPENDICULAR:
            return cls(center, spot_heading, kind, 1.2 * params.body_length,
                       1.4 * params.body_width)
        return cls(center, spot_heading, kind, 2.0 * params.body_length,
                   1.4 * params.body_width)


@dataclass(frozen=True)
class Segment:
    """A straight (curvature 0) or circular piece of the exit path."""

    length: float
    curvature: float = 0.0


@dataclass
class ParkingPath:
    poses: np.ndarray
    entry_pose: tuple
    exit_poses: np.ndarray
    segments: list
    radius: float
    gear: str = "reverse"
    side: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def parked_pose(self):
        return tuple(self.poses[-1])


def integrate_segments(start, segments, step=POSE_STEP):
    """Closed-form pose samples along consecutive segments.

    Returns one array per segment; each starts at the previous one's end pose.
    """
    x, y, psi = start
    out = []
    for seg in segments:
        n = max(1, int(math.ceil(seg.length / step - 1e-9)))
        s = ramp(seg.length, n)
        k = seg.curvature
        if abs(k) < 1e-12:
            piece = poses_from(x + s * math.cos(psi), y + s * math.sin(psi), psi)
        else:
            hs = psi + k * s
            piece = poses_from(x + (np.sin(hs) - math.sin(psi)) / k,
                               y - (np.cos(hs) - math.cos(psi)) / k, hs)
        out.append(piece)
        x, y, psi = piece[-1]
    return out


def end_pose(start, segments):
    """Final pose of ``integrate_segments`` without sampling the way there."""
    x, y, psi = start
    for seg in segments:
        k = seg.curvature
        if abs(k) < 1e-12:
            x += seg.length * math.cos(psi)
            y += seg.length * math.sin(psi)
        else:
            h = psi + k * seg.length
            x += (math.sin(h) - math.sin(psi)) / k
            y -= (math.cos(h) - math.cos(psi)) / k
            psi = h
    return x, y, psi


def _join(pieces, smooth, corner_tol=1e-6):
    """Concatenate pieces, Bezier-blending only joints with a heading jump.

    Tangent joints are left alone: a quadratic blend across a straight-to-arc
    or arc-to-arc joint always peaks above the arc's own curvature.
    """
    path = pieces[0]
    for nxt in pieces[1:]:
        jump = abs(normalize_angle(nxt[0, 2] - path[-1, 2]))
        if smooth and jump > corner_tol:
            path = smooth_junction(path, nxt, window=JUNCTION_WINDOW)
        else:
            path = np.vstack([path, nxt[1:]])
    heads = path[:, 2]
    wrap = np.nonzero((heads > math.pi) | (heads <= -math.pi))[0]
    heads[wrap] = [normalize_angle(h) for h in heads[wrap]]
    return path


def _check_clear(poses, cm):
    if cm is None:
        return True
    return cm.points_clear(poses)


def _build(spec, segments_for, params, cm, approach_from, safeguard):
    """Try both turning sides and the margin-inflated radius first; return the best."""
    r_min = min_turn_radius(params)
    start = (spec.center[0], spec.center[1], spec.spot_heading)

    def score(end):
        ex, ey, eh = end
        if approach_from is None:
            return 0.0
        # prefer an entry the approach reaches while already facing the exit direction
        dx, dy = ex - approach_from[0], ey - approach_from[1]
        norm = math.hypot(dx, dy) or 1.0
        return -(dx * math.cos(eh) + dy * math.sin(eh)) / norm

    for radius in _radii(spec, params, r_min):
        options = []
        for side in (1, -1):
            segments = segments_for(radius, side, safeguard)
            options.append((score(end_pose(start, segments)), -side, segments))
        # best-scoring side first; only that side is sampled unless it collides
        for _, neg_side, segments in sorted(options, key=lambda o: o[:2]):
            exit_poses = _join(integrate_segments(start, segments), smooth=True)
            if _check_clear(exit_poses, cm):
                poses = exit_poses[::-1].copy()
                return ParkingPath(poses, tuple(poses[0]), exit_poses, segments, radius,
                                   side=-neg_side)
    raise ExitBlocked(f"no collision-free exit from spot at {spec.center}")


def _radii(spec, params, r_min):
    if spec.kind is ParkingKind.PARALLEL:
        r_max = parallel_feasible(spec, params).r_max
        fits = [f * r_min for f in PARALLEL_RADIUS_FACTORS if f * r_min <= r_max]
        return fits or [r_min]
    return [RADIUS_MARGIN * r_min, r_min]


def _check_size(spec, params):
    if spec.spot_length < params.body_length or spec.spot_width < params.body_width:
        raise SpotTooSmall(
            f"spot {spec.spot_length}x{spec.spot_width} smaller than body "
            f"{params.body_length}x{params.body_width}")


def plan_perpendicular(spec, params, grid=None, cm=None, approach_from=None, safeguard=None):
    """Nose-out perpendicular parking: pull out, quarter turn, straight safeguard."""
    _check_size(spec, params)
    safeguard = 1.5 * params.body_length if safeguard is None else safeguard
    # the body clears the spot row before the turn starts
    pull_out = spec.spot_length

    def segments_for(radius, side, sg):
        return [Segment(pull_out), Segment(radius * math.pi / 2, side / radius), Segment(sg)]

    return _build(spec, segments_for, params, cm, approach_from, safeguard)


@dataclass(frozen=True)
class ParallelFeasibility:
    feasible: bool
    r_needed: float
    r_max: float

    def __bool__(self):
        return self.feasible


def parallel_r_max(spot_length, spot_width, params):
    """Largest rear-axle radius whose swept front corner clears the spot's far corner.

    The car sits against the rear of the spot and pivots about a centre on the
    rear-axle line. Its outer front corner A and the spot corner P lie on one
    circle about that centre exactly when R equals the returned value.
    """
    reach = spot_length - params.rear_overhang
    f = params.front_reach
    w = params.body_width
    num = reach * reach - f * f + (spot_width * spot_width - w * w) / 4.0
    return num / (w + spot_width)


def parallel_feasible(spec, params):
    r_needed = min_turn_radius(params)
    r_max = parallel_r_max(spec.spot_length, spec.spot_width, params)
    return ParallelFeasibility(bool(r_needed <= r_max), float(r_needed), float(r_max))


def plan_parallel(spec, params, grid=None, cm=None, approach_from=None, safeguard=None,
                  lateral_shift=None):
    """Parallel parking: two tangent arcs of opposite curvature plus a safeguard."""
    _check_size(spec, params)
    verdict = parallel_feasible(spec, params)
    if not verdict:
        raise Infeasible(verdict.r_needed, verdict.r_max)
    safeguard = 1.5 * params.body_length if safeguard is None else safeguard
    if lateral_shift is None:
        shifts = [f * spec.spot_width for f in SHIFT_FACTORS]
    else:
        shifts = [lateral_shift]
    # with room ahead the car backs in past the bay and finishes with a straight
    # reverse, so its heading already matches the spot during the final approach
    settles = (spec.spot_length / 2.0, 0.0) if cm is not None else (0.0,)
    attempts = [(settle, shift) for settle in settles for shift in shifts]
    for i, (settle, shift) in enumerate(attempts):
        def segments_for(radius, side, sg, shift=shift, settle=settle):
            cos_phi = max(-1.0, 1.0 - shift / (2.0 * radius))
            phi = math.acos(cos_phi)
            arcs = [Segment(radius * phi, side / radius), Segment(radius * phi, -side / radius),
                    Segment(sg)]
            return ([Segment(settle)] if settle > 0 else []) + arcs
        try:
            path = _build(spec, segments_for, params, cm, approach_from, safeguard)
        except ExitBlocked:
            if i == len(attempts) - 1:
                raise
            continue
        path.meta["lateral_shift"] = shift
        path.meta["settle"] = settle
        return path


def plan_parking(spec, params, grid=None, cm=None, approach_from=None, safeguard=None):
    if spec.kind is ParkingKind.PARALLEL:
        return plan_parallel(spec, params, grid, cm, approach_from, safeguard)
    return plan_perpendicular(spec, params, grid, cm, approach_from, safeguard)


_AXES = [0.0, math.pi / 2, math.pi, -math.pi / 2]


def _free_run(grid, cm, x0, y0, heading, limit=60):
    dx, dy = round(math.cos(heading)), round(math.sin(heading))
    w, h, obst = grid.width, grid.height, grid.flat
    n = 0
    x, y = int(round(x0)), int(round(y0))
    while n < limit:
        x += dx
        y += dy
        if not (0 <= x < w and 0 <= y < h) or obst[y * w + x]:
            break
        n += 1
    return n


def infer_spot_heading(grid, center, kind, spot_width=3.0, cm=None, approach_from=None):
    """Guess the nose direction of a parked car from the free space around it.

    Perpendicular spots face the longest free axis ray (the aisle). A parallel
    spot's shortest ray hits the kerb, so the aisle lies opposite it and the car
    runs along the lane; the nose points away from ``approach_from`` so the car
    reaches the entry pose without turning around. Without an origin the
    direction with the longer free run wins.
    """
    runs = [(_free_run(grid, cm, center[0], center[1], h), -i, h) for i, h in enumerate(_AXES)]
    if ParkingKind(kind) is ParkingKind.PERPENDICULAR:
        return max(runs)[2]
    aisle = normalize_angle(min(runs)[2] + math.pi)
    options = [normalize_angle(aisle + math.pi / 2), normalize_angle(aisle - math.pi / 2)]
    if approach_from is not None:
        dx, dy = center[0] - approach_from[0], center[1] - approach_from[1]
        along = [dx * math.cos(h) + dy * math.sin(h) for h in options]
        if abs(along[0] - along[1]) > 1e-9:
            return options[0] if along[0] > along[1] else options[1]
    ox = center[0] + spot_width * math.cos(aisle)
    oy = center[1] + spot_width * math.sin(aisle)
    return max(options, key=lambda h: (_free_run(grid, cm, ox, oy, h), h))
