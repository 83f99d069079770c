from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from avpark.map_io import OccupancyGrid

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def empty_grid():
    return OccupancyGrid(np.zeros((20, 20), dtype=bool))


def random_instances(seed, count, sizes=(10, 50), densities=(0.1, 0.3)):
    """Seeded (grid, start, goal) triples with free endpoints."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(sizes[0], sizes[1] + 1))
        cells = rng.random((n, n)) < rng.uniform(*densities)
        free = np.argwhere(~cells)
        if len(free) < 2:
            continue
        a, b = rng.choice(len(free), 2, replace=False)
        start = (int(free[a][1]), int(free[a][0]))
        goal = (int(free[b][1]), int(free[b][0]))
        out.append((OccupancyGrid(cells), start, goal))
    return out


SCENARIOS = {
    "vertical": ("vertical.txt", (95, 85), (109, 133), "perpendicular"),
    "parallel": ("parallel.txt", (110, 65), (142, 110), "parallel"),
    "unreachable": ("unreachable.txt", (95, 85), (109, 117), "perpendicular"),
}


def scenario(name, planner=None, **kw):
    from avpark.parking_geom import ParkingSpec
    from avpark.search import PlannerConfig
    from avpark.sim import Scenario
    from avpark.vehicle import VehicleParams

    map_name, start, spot, kind = SCENARIOS[name]
    vp = VehicleParams()
    spec = ParkingSpec.default_for(spot, None, kind, vp)
    return Scenario(map_name, start, spec, vp, planner or PlannerConfig(), **kw)


_RUNS = {}


def cached_run(name, baseline=False):
    """Closed-loop runs are seconds each; share them across test modules."""
    from avpark.search import PlannerConfig
    from avpark.sim import run_scenario

    key = (name, baseline)
    if key not in _RUNS:
        _RUNS[key] = run_scenario(scenario(name, PlannerConfig.baseline() if baseline else None))
    return _RUNS[key]


ACCEPTANCE = {}


@contextmanager
def criterion(number, title):
    """Record one acceptance line; the body's assertions decide pass or fail."""
    ok = False
    try:
        yield
        ok = True
    finally:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        ACCEPTANCE[number] = line
        print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
