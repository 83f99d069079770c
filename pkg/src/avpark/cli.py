"""Command-line front end: ``avpark {plan,run,ablate,inspect}``.

Settings come from three layers, highest first: command-line flags, a flat
``key = value`` config file (``--config``), built-in defaults. Config keys are
the flag names with underscores (``map``, ``start``, ``bidirectional``, ...);
any dataclass field is also reachable with a section prefix such as
``vehicle.wheelbase``, ``planner.w_far``, ``mpc.horizon`` or
``spline.sample_stride``.
"""
import argparse
import json
import math
import sys
from dataclasses import fields, replace

import numpy as np

from . import clearance, fixtures
from .exceptions import AvparkError, IoError, ParseError
from .map_io import OccupancyGrid, load_grid, write_grid_text, write_json, write_path_csv
from .mpc import MpcConfig
from .parking_geom import ParkingKind, ParkingSpec
from .search import PlannerConfig
from .sim import Scenario, format_table, plan_only, resolve_map, run_ablation, run_scenario
from .smoothing import SplineConfig
from .vehicle import VehicleParams, footprint_radius

EXIT_OK, EXIT_SCENARIO, EXIT_USAGE = 0, 1, 2

SECTIONS = {"vehicle": VehicleParams, "planner": PlannerConfig, "mpc": MpcConfig,
            "spline": SplineConfig}
SCENARIO_KEYS = ("map", "start", "spot", "heading", "kind", "seed", "spot_length",
                 "spot_width", "tick_budget", "clearance_margin", "out", "trace", "radius",
                 "preview", "timing_repeats")
PLANNER_FIELDS = [f.name for f in fields(PlannerConfig)]
# value a --no-<field> toggle switches to, and the one a bare --<field> switches to
TOGGLES = {
    "w_far": (1.0, 1.5), "w_near": (1.0, 0.8), "switch_distance": (0.0, 15.0),
    "tie_break_p": (0.0, 0.001), "neighborhood": ("eight", "sixteen"),
    "use_binary_heap": (False, True), "bidirectional": (False, True),
    "use_clearance": ("off", "lazy"), "smoothing": ("off", "bspline"),
    "heuristic": ("manhattan", "euclidean"),
}


class UsageError(Exception):
    pass


def parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def parse_tuple(text, sizes=(2,)):
    if isinstance(text, (tuple, list)):
        vals = [float(v) for v in text]
    else:
        try:
            vals = [float(v) for v in str(text).split(",")]
        except ValueError:
            raise UsageError(f"expected comma-separated numbers, got {text!r}") from None
    if len(vals) not in sizes:
        raise UsageError(f"expected {' or '.join(map(str, sizes))} values, got {text!r}")
    return tuple(vals)


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(value, default):
    if isinstance(value, str):
        if isinstance(default, bool):
            return parse_bool(value)
        if isinstance(default, int) and not isinstance(default, bool):
            try:
                return int(value)
            except ValueError:
                raise UsageError(f"not an integer: {value!r}") from None
        if isinstance(default, float):
            try:
                return float(value)
            except ValueError:
                raise UsageError(f"not a number: {value!r}") from None
    return value


def _build_section(cls, settings, prefix, bare=()):
    base = cls()
    kwargs = {}
    for f in fields(cls):
        if f.name == "vehicle":
            continue
        for key in (f"{prefix}.{f.name}",) + ((f.name,) if f.name in bare else ()):
            if key in settings:
                kwargs[f.name] = _coerce(settings[key], getattr(base, f.name))
    try:
        return replace(base, **kwargs)
    except ValueError as exc:
        raise UsageError(f"{prefix}: {exc}") from None


def _check_keys(settings):
    known = set(SCENARIO_KEYS) | set(PLANNER_FIELDS)
    for key in settings:
        section, _, name = key.partition(".")
        if name and section in SECTIONS and name in {f.name for f in fields(SECTIONS[section])}:
            continue
        if key not in known:
            raise UsageError(f"unknown setting {key!r}")


def build_scenario(settings, need_spot=True):
    """Scenario from merged settings (strings or already-typed values)."""
    _check_keys(settings)
    if "map" not in settings:
        raise UsageError("--map is required")
    vehicle = _build_section(VehicleParams, settings, "vehicle")
    planner = _build_section(PlannerConfig, settings, "planner", bare=PLANNER_FIELDS)
    mpc = replace(_build_section(MpcConfig, settings, "mpc"), vehicle=vehicle)
    spline = _build_section(SplineConfig, settings, "spline")
    start = parse_tuple(settings.get("start", "0,0"), (2, 3))
    if len(start) == 3:
        start = (start[0], start[1], math.radians(start[2]))
    if need_spot and "spot" not in settings:
        raise UsageError("--spot is required")
    spot = parse_tuple(settings.get("spot", "0,0"))
    try:
        kind = ParkingKind(str(settings.get("kind", "perpendicular")).lower())
    except ValueError:
        raise UsageError(f"unknown parking kind {settings.get('kind')!r}") from None
    heading = settings.get("heading")
    heading = None if heading in (None, "", "auto") else math.radians(float(heading))
    spec = ParkingSpec.default_for(spot, heading, kind, vehicle)
    dims = {k: float(settings[k]) for k in ("spot_length", "spot_width") if k in settings}
    if dims:
        spec = replace(spec, **dims)
    return Scenario(
        map_path=str(settings["map"]), start=start, parking=spec, vehicle=vehicle,
        planner=planner, mpc=mpc, seed=int(settings.get("seed", 0)), spline=spline,
        tick_budget=int(settings.get("tick_budget", Scenario.__dataclass_fields__[
            "tick_budget"].default)),
        clearance_margin=float(settings.get("clearance_margin", Scenario.__dataclass_fields__[
            "clearance_margin"].default)))


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--map", help="text or PGM map; bundled file names resolve too (inspect also takes random:SIZE:DENSITY)")
    common.add_argument("--start", help="X,Y[,PSI] with PSI in degrees")
    common.add_argument("--spot", help="X,Y centre of the parking spot")
    common.add_argument("--heading", help="spot nose direction in degrees, or 'auto'")
    common.add_argument("--kind", choices=[k.value for k in ParkingKind])
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--out", help="write the JSON result here instead of stdout")
    common.add_argument("--trace", help="CSV destination (run: per-tick trace; plan: poses)")
    common.add_argument("--seed", type=int)
    common.add_argument("--spot-length", type=float)
    common.add_argument("--spot-width", type=float)
    common.add_argument("--tick-budget", type=int)
    common.add_argument("--clearance-margin", type=float)
    toggles = common.add_argument_group("planner toggles")
    for name in PLANNER_FIELDS:
        off, on = TOGGLES[name]
        flag = name.replace("_", "-")
        toggles.add_argument(f"--{flag}", dest=name, nargs="?", const=on, metavar="VALUE",
                             help=f"bare flag sets {on}")
        toggles.add_argument(f"--no-{flag}", dest=name, action="store_const", const=off,
                             help=f"sets {off}")

    p = argparse.ArgumentParser(prog="avpark", description="Grid A* + MPC parking simulator")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("plan", parents=[common], help="plan only; path CSV and planning metrics")
    sub.add_parser("run", parents=[common], help="plan and track; full report JSON")
    abl = sub.add_parser("ablate", parents=[common], help="eight-row ablation table")
    abl.add_argument("--timing-repeats", type=int,
                     help="fresh map loads and plans per row; timings are their medians (default 5)")
    ins = sub.add_parser("inspect", parents=[common], help="map statistics")
    ins.add_argument("--radius", type=float, help="clearance radius in cells")
    ins.add_argument("--preview", help="write the inflated map as text here")
    return p


def merge_settings(args):
    """Defaults < config file < flags, as one flat dict of raw values."""
    settings = read_config(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        settings[key] = value
    return settings


def _load_map(spec, seed):
    if str(spec).startswith("random:"):
        try:
            _, size, density = str(spec).split(":")
            return fixtures.random_grid(np.random.default_rng(seed), int(size), float(density))
        except ValueError:
            raise UsageError(f"random map spec must be random:SIZE:DENSITY, got {spec!r}") from None
    return load_grid(resolve_map(spec))


def _emit(obj, out):
    if out:
        write_json(obj, out)
    else:
        json.dump(obj, sys.stdout, indent=2)
        sys.stdout.write("\n")


def _inspect(settings):
    _check_keys(settings)
    if "map" not in settings:
        raise UsageError("--map is required")
    seed = int(settings.get("seed", 0))
    grid = _load_map(settings["map"], seed)
    vehicle = _build_section(VehicleParams, settings, "vehicle")
    margin = float(settings.get("clearance_margin", 0.5))
    radius = float(settings.get("radius", footprint_radius(vehicle, margin)))
    cm = clearance.precompute_all(grid, radius)
    free = int((cm.states == clearance.TRAVERSABLE).sum())
    stats = {"map": str(settings["map"]), "width": grid.width, "height": grid.height,
             "resolution": grid.resolution, "obstacle_density": grid.obstacle_density,
             "radius": radius, "traversable_cells": free,
             "traversable_fraction": free / (grid.width * grid.height)}
    if settings.get("preview"):
        write_grid_text(OccupancyGrid(cm.states != clearance.TRAVERSABLE), settings["preview"])
    _emit(stats, settings.get("out"))


def _plan(settings):
    sc = build_scenario(settings)
    pl, rep = plan_only(sc)
    if settings.get("trace"):
        write_path_csv(pl.reference.poses, settings["trace"])
    out = rep.to_dict()
    for k in ("travel_time", "mean_abs_accel", "mean_abs_steer", "final_position_error",
              "final_heading_error", "ticks", "termination", "safety_violations",
              "bound_violations"):
        out.pop(k, None)
    out["reached_goal"] = bool(pl.goal_reachable)
    _emit(out, settings.get("out"))


def _run(settings):
    sc = build_scenario(settings)
    rep = run_scenario(sc)
    if settings.get("trace"):
        rep.write_trace(settings["trace"])
    _emit(rep.to_dict(), settings.get("out"))


def _ablate(settings):
    sc = build_scenario(settings)
    repeats = int(settings.get("timing_repeats", 5))
    if repeats < 1:
        raise UsageError("--timing-repeats must be at least 1")
    reports = run_ablation(sc, timing_repeats=repeats)
    rows = [dict(row=r.label, **r.to_dict()) for r in reports]
    table = format_table(reports)
    if settings.get("out"):
        write_json(rows, settings["out"])
        print(table)
    else:
        _emit(rows, None)
        print(table, file=sys.stderr)


COMMANDS = {"plan": _plan, "run": _run, "ablate": _ablate, "inspect": _inspect}


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        settings = merge_settings(args)
        COMMANDS[args.command](settings)
    except (UsageError, ParseError) as exc:
        print(f"avpark: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (IoError, OSError) as exc:
        print(f"avpark: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AvparkError as exc:
        print(f"avpark: scenario failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
