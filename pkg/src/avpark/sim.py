"""Closed-loop scenario runs: plan, smooth, track with MPC, collect metrics."""
import csv
import math
import os
import time
from dataclasses import dataclass, field, replace, asdict
from enum import Enum

import numpy as np

from . import clearance, search
from .exceptions import ExitBlocked, IoError
from .map_io import bundled_map, load_grid
from .metrics import mean_abs, polyline_length
from .mpc import FORWARD, REVERSE, MpcConfig, MpcController, ReferenceTrack
from .parking_geom import ParkingKind, ParkingSpec, infer_spot_heading, plan_parking
from .search import ClearanceMode, PlannerConfig, Smoothing
from .smoothing import (SplineConfig, polyline_poses, poses_from, ramp, smooth_junction,
                        smooth_path_safe)
from .vehicle import VehicleParams, VehicleState, footprint_radius, normalize_angle, step

POSITION_TOLERANCE = 0.5
HEADING_TOLERANCE = math.radians(5.0)
TICK_BUDGET = 5000
CLEARANCE_MARGIN = 0.5

ABLATION_ROWS = ("Basic A*", "Experiment 1", "Experiment 2", "Experiment 3",
                 "Experiment 4", "Experiment 5", "Experiment 6", "Improved A*")


@dataclass(frozen=True)
class Scenario:
    map_path: str
    start: tuple
    parking: ParkingSpec
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    seed: int = 0
    spline: SplineConfig = field(default_factory=SplineConfig)
    tick_budget: int = TICK_BUDGET
    clearance_margin: float = CLEARANCE_MARGIN

    @property
    def start_heading(self):
        return self.start[2] if len(self.start) > 2 else None


@dataclass
class RunReport:
    map_load_ms: float = 0.0
    planning_ms: float = 0.0
    path_length: float = 0.0
    travel_time: float = 0.0
    mean_abs_accel: float = 0.0
    mean_abs_steer: float = 0.0
    reached_goal: bool = False
    final_position_error: float = math.inf
    final_heading_error: float = math.inf
    termination: str = ""
    ticks: int = 0
    expansions: int = 0
    cells_resolved: int = 0
    safety_violations: int = 0
    bound_violations: int = 0
    best_effort_cell: tuple = None
    entry_pose: tuple = None
    target_pose: tuple = None
    spline_stride: int = None
    spot_heading: float = None
    config: dict = field(default_factory=dict)
    label: str = ""
    trace: list = field(default_factory=list)

    TIMING_FIELDS = ("map_load_ms", "planning_ms")
    TRACE_COLUMNS = ("t", "x", "y", "psi", "v", "a", "delta", "cost")

    def to_dict(self, include_trace=False):
        out = {k: v for k, v in asdict(self).items() if k != "trace"}
        for k, v in out.items():
            if isinstance(v, float) and not math.isfinite(v):
                out[k] = None
        if include_trace:
            out["trace"] = [list(r) for r in self.trace]
        return out

    def comparable(self):
        """Every field except wall-clock timings, for determinism checks."""
        d = self.to_dict(include_trace=True)
        for k in self.TIMING_FIELDS:
            d.pop(k)
        return d

    def write_trace(self, file):
        try:
            with open(file, "w", newline="", encoding="utf-8") as fh:
                wr = csv.writer(fh)
                wr.writerow(self.TRACE_COLUMNS)
                for row in self.trace:
                    wr.writerow([f"{v:.6f}" for v in row])
        except OSError as exc:
            raise IoError(str(exc)) from exc


def resolve_map(path):
    """Use the given path, or the bundled copy of the same file name if it does not exist."""
    if os.path.exists(path):
        return path
    fallback = bundled_map(path)
    return fallback if os.path.exists(fallback) else path


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def effective_config(sc):
    """Flat echo of every setting that influenced the run."""
    mpc = asdict(sc.mpc)
    mpc.pop("vehicle")
    return _plain({
        "map": sc.map_path, "start": list(sc.start), "spot": list(sc.parking.center),
        "heading": sc.parking.spot_heading, "kind": sc.parking.kind,
        "spot_length": sc.parking.spot_length, "spot_width": sc.parking.spot_width,
        "seed": sc.seed, "tick_budget": sc.tick_budget,
        "clearance_margin": sc.clearance_margin,
        "vehicle": asdict(sc.vehicle), "planner": sc.planner.to_dict(), "mpc": mpc,
        "spline": asdict(sc.spline),
    })


def _lead_in(q, entry, spacing):
    n = max(1, int(math.ceil(math.hypot(entry[0] - q[0], entry[1] - q[1]) / spacing - 1e-9)))
    ts = ramp(1.0, n)
    return poses_from(q[0] + ts * (entry[0] - q[0]), q[1] + ts * (entry[1] - q[1]), entry[2])


def _initial_heading(poses):
    p0 = poses[0, :2]
    for x, y, _ in poses[1:]:
        if math.hypot(x - p0[0], y - p0[1]) >= 1.0:
            return math.atan2(y - p0[1], x - p0[0])
    return float(poses[-1, 2])


@dataclass
class Plan:
    """Everything the planning phase hands to the controller."""

    poses: np.ndarray
    gears: np.ndarray
    search: search.SearchResult
    parking: object
    target_pose: tuple
    goal_reachable: bool
    spline_stride: int
    spot_heading: float
    approach: np.ndarray
    _reference: ReferenceTrack = None

    @property
    def reference(self):
        """Tracking view of the poses; built on first use, outside the planning timer."""
        if self._reference is None:
            self._reference = ReferenceTrack(self.poses, self.gears, goal_heading=self.target_pose[2])
        return self._reference


def build_plan(sc, grid, cm, check_cm):
    """Parking path, approach search, smoothing and blending; no control."""
    cfg = sc.planner
    start_cell = (int(round(sc.start[0])), int(round(sc.start[1])))
    spec = sc.parking
    if spec.spot_heading is None:
        heading = infer_spot_heading(grid, spec.center, spec.kind, spec.spot_width, cm,
                                     approach_from=start_cell)
        spec = replace(spec, spot_heading=heading)
    try:
        park = plan_parking(spec, sc.vehicle, grid, cm, approach_from=start_cell)
    except ExitBlocked:
        park = None

    if park is not None:
        ex, ey, eh = park.entry_pose
        lead = park.segments[-1].length
        q = (ex - lead * math.cos(eh), ey - lead * math.sin(eh))
        goal_cell = (int(round(q[0])), int(round(q[1])))
    else:
        goal_cell = (int(round(spec.center[0])), int(round(spec.center[1])))
    res = search.plan(grid, cm, start_cell, goal_cell, cfg)
    if not res.reached_goal and res.best_effort_cell not in (None, start_cell):
        # the fallback path was pulled toward the unreachable goal; aim the route
        # at the cell the car will actually stop on, keeping the same endpoint
        retry = search.plan(grid, cm, start_cell, res.best_effort_cell, cfg)
        if retry.reached_goal:
            res = replace(retry, reached_goal=False, best_effort_cell=res.best_effort_cell,
                          expansions=res.expansions + retry.expansions)
    reached = res.reached_goal and park is not None
    path = [(float(x), float(y)) for x, y in res.path]
    if reached and len(path) > 1:
        # finish on the exact safeguard point rather than its rounded cell
        path[-1] = q

    smooth = cfg.smoothing is Smoothing.BSPLINE
    stride = None
    if len(path) < 2:
        approach = polyline_poses(path + path, sc.spline.output_spacing)[:1]
    elif smooth:
        approach, stride = smooth_path_safe(path, sc.spline, check_cm.points_clear)
    else:
        approach = polyline_poses(path, sc.spline.output_spacing)

    if reached:
        lead_poses = _lead_in((q[0], q[1]), park.entry_pose, sc.spline.output_spacing)
        if smooth and len(approach) > 1:
            forward = smooth_junction(approach, lead_poses, window=4, max_gap=1.5)
        else:
            forward = np.vstack([approach, lead_poses])
        reverse = park.poses[1:]
        poses = np.vstack([forward, reverse])
        gears = np.concatenate([np.full(len(forward), FORWARD), np.full(len(reverse), REVERSE)])
        target = tuple(float(v) for v in park.parked_pose)
    else:
        poses, gears = approach, np.full(len(approach), FORWARD)
        target = tuple(float(v) for v in approach[-1])
    return Plan(poses, gears, res, park, target, reached, stride, spec.spot_heading, approach)


def safety_audit_map(grid, vehicle):
    """Lazy clearance at the physical footprint radius, used for the per-tick audit."""
    return clearance.lazy(grid, footprint_radius(vehicle, 0.0))


def _prepare(sc):
    t0 = time.perf_counter()
    grid = load_grid(resolve_map(sc.map_path))
    radius = footprint_radius(sc.vehicle, sc.clearance_margin)
    cm = clearance.build(grid, radius, sc.planner.use_clearance)
    map_load_ms = (time.perf_counter() - t0) * 1e3
    # smoothing is vetted against the inflated footprint even when the search ignores it
    check_cm = cm if sc.planner.use_clearance is not ClearanceMode.OFF else clearance.lazy(grid, radius)
    return grid, cm, check_cm, map_load_ms


def plan_only(sc):
    """Planning phase of a scenario; returns (plan, report) without running MPC."""
    grid, cm, check_cm, map_load_ms = _prepare(sc)
    t1 = time.perf_counter()
    pl = build_plan(sc, grid, cm, check_cm)
    planning_ms = (time.perf_counter() - t1) * 1e3
    rep = _base_report(sc, pl, map_load_ms, planning_ms, cm)
    return pl, rep


def _base_report(sc, pl, map_load_ms, planning_ms, cm):
    rep = RunReport(map_load_ms=map_load_ms, planning_ms=planning_ms)
    rep.path_length = polyline_length(pl.poses[:, :2])
    rep.expansions = pl.search.expansions
    rep.cells_resolved = cm.resolved
    rep.best_effort_cell = pl.search.best_effort_cell
    rep.entry_pose = tuple(pl.parking.entry_pose) if pl.parking is not None else None
    rep.target_pose = pl.target_pose
    rep.spline_stride = pl.spline_stride
    rep.spot_heading = pl.spot_heading
    rep.config = effective_config(sc)
    return rep


def run_scenario(sc):
    grid, cm, check_cm, map_load_ms = _prepare(sc)
    t1 = time.perf_counter()
    pl = build_plan(sc, grid, cm, check_cm)
    planning_ms = (time.perf_counter() - t1) * 1e3
    rep = _base_report(sc, pl, map_load_ms, planning_ms, cm)
    # the margin is the tracking buffer; the audit uses the bare body footprint
    audit_cm = safety_audit_map(grid, sc.vehicle)

    ref = pl.reference
    psi0 = sc.start_heading
    if psi0 is None:
        psi0 = _initial_heading(ref.poses)
    state = VehicleState(float(sc.start[0]), float(sc.start[1]), 0.0, psi0)
    ctl = MpcController(sc.mpc)
    params = sc.mpc.vehicle
    dt = sc.mpc.dt
    tx, ty, th = pl.target_pose
    check_heading = pl.goal_reachable

    def errors(st):
        pos = math.hypot(st.x - tx, st.y - ty)
        head = abs(normalize_angle(st.psi - th))
        return pos, head

    rep.termination = "tick_budget_exhausted"
    for tick in range(sc.tick_budget):
        u = ctl.control_tick(state, ref)
        if not u.within(params):
            rep.bound_violations += 1
        state = step(state, u, dt, params)
        rep.trace.append((round((tick + 1) * dt, 10), state.x, state.y, state.psi, state.v,
                          u.a, u.delta, float(ctl.last_breakdown.get("total", 0.0))))
        if not audit_cm.pose_clear(state.x, state.y):
            rep.safety_violations += 1
        if ctl.segment == len(ref.segments) - 1:
            pos, head = errors(state)
            if pos < POSITION_TOLERANCE and (not check_heading or head < HEADING_TOLERANCE):
                rep.termination = "goal_reached" if pl.goal_reachable else "best_effort_reached"
                break

    pos, head = errors(state)
    rep.ticks = len(rep.trace)
    rep.travel_time = rep.ticks * dt
    _aggregate(rep)
    rep.final_position_error = pos
    rep.final_heading_error = math.degrees(head)
    rep.reached_goal = rep.termination == "goal_reached"
    return rep


def _aggregate(rep):
    rep.mean_abs_accel = mean_abs([r[5] for r in rep.trace]) if rep.trace else 0.0
    rep.mean_abs_steer = (math.degrees(mean_abs([r[6] for r in rep.trace]))
                          if rep.trace else 0.0)


def ablation_configs(improved=None):
    """The eight planner variants, in table order, derived from the improved config."""
    imp = improved or PlannerConfig()
    base = replace(imp, w_far=1.0, w_near=1.0, tie_break_p=0.0, use_binary_heap=False,
                   bidirectional=False, use_clearance=ClearanceMode.EAGER,
                   smoothing=Smoothing.OFF)
    return [
        base,
        replace(imp, w_far=1.0, w_near=1.0, tie_break_p=0.0),
        replace(imp, use_clearance=ClearanceMode.EAGER),
        replace(imp, bidirectional=False, use_binary_heap=False),
        replace(imp, neighborhood=search.Neighborhood.SIXTEEN),
        replace(imp, smoothing=Smoothing.OFF),
        replace(imp, smoothing=Smoothing.OFF, bidirectional=False, use_binary_heap=False),
        imp,
    ]


def run_ablation(base, timing_repeats=1):
    """Run all eight rows on the same map, start and spot; table order is preserved.

    With ``timing_repeats`` > 1 each row also reloads the map and replans that
    many times in total, and reports the median of each timing field.
    """
    reports = []
    for label, cfg in zip(ABLATION_ROWS, ablation_configs(base.planner)):
        sc = replace(base, planner=cfg)
        rep = run_scenario(sc)
        rep.label = label
        if timing_repeats > 1:
            extra = [plan_only(sc)[1] for _ in range(timing_repeats - 1)]
            for k in RunReport.TIMING_FIELDS:
                setattr(rep, k, float(np.median([getattr(r, k) for r in [rep] + extra])))
        reports.append(rep)
    return reports


def format_table(reports):
    cols = [("row", 14, "s"), ("map_load_ms", 12, ".2f"), ("planning_ms", 12, ".2f"),
            ("path_length", 12, ".2f"), ("travel_time", 12, ".1f"),
            ("mean_abs_accel", 15, ".3f"), ("mean_abs_steer", 15, ".3f"),
            ("reached_goal", 13, "s")]
    lines = ["".join(f"{name:>{w}}" for name, w, _ in cols)]
    for r in reports:
        vals = [r.label, r.map_load_ms, r.planning_ms, r.path_length, r.travel_time,
                r.mean_abs_accel, r.mean_abs_steer, str(r.reached_goal).lower()]
        lines.append("".join(f"{v:>{w}{fmt if fmt != 's' else ''}}"
                             for v, (_, w, fmt) in zip(vals, cols)))
    return "\n".join(lines)
