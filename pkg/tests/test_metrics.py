import math

import numpy as np
import pytest

from avpark import clearance
from avpark.map_io import OccupancyGrid
from avpark.metrics import (brute_force_inflation, de_casteljau, dijkstra_cost, mean_abs,
                            polyline_length, reachable_set)
from avpark.search import Neighborhood, PlannerConfig, path_cost, plan

from conftest import random_instances


def _raw(g):
    return clearance.lazy(g, 0)


def test_dijkstra_open_diagonal():
    g = OccupancyGrid(np.zeros((5, 5), bool))
    assert dijkstra_cost(g, _raw(g), (0, 0), (4, 4)) == pytest.approx(4 * math.sqrt(2))


def test_dijkstra_walled_goal():
    cells = np.zeros((7, 7), bool)
    cells[2:5, 2:5] = True
    cells[3, 3] = False
    g = OccupancyGrid(cells)
    assert dijkstra_cost(g, _raw(g), (0, 0), (3, 3)) is None


def test_dijkstra_lower_bounds_every_variant():
    variants = [PlannerConfig(use_clearance="off"),
                PlannerConfig(use_clearance="off", bidirectional=False, use_binary_heap=False),
                PlannerConfig(use_clearance="off", w_far=2.0, w_near=2.0)]
    for g, s, t in random_instances(21, 50, (20, 20), (0.15, 0.25)):
        cm = _raw(g)
        opt = dijkstra_cost(g, cm, s, t)
        for cfg in variants:
            r = plan(g, cm, s, t, cfg)
            if r.reached_goal:
                assert opt is not None and opt <= path_cost(r.path) + 1e-9


def test_reachable_set_empty_grid():
    g = OccupancyGrid(np.zeros((6, 9), bool))
    assert reachable_set(g, _raw(g), (0, 0)) == {(x, y) for x in range(9) for y in range(6)}


def test_reachable_set_blocked_start():
    cells = np.zeros((5, 5), bool)
    cells[2, 2] = True
    g = OccupancyGrid(cells)
    assert reachable_set(g, _raw(g), (2, 2)) == set()


def test_reachable_set_contains_planned_paths():
    for g, s, t in random_instances(22, 30, (15, 30)):
        cm = _raw(g)
        reach = reachable_set(g, cm, s, Neighborhood.SIXTEEN)
        r = plan(g, cm, s, t, PlannerConfig(use_clearance="off", neighborhood="sixteen"))
        assert set(r.path) <= reach


def test_brute_force_inflation_single_obstacle():
    cells = np.zeros((15, 15), bool)
    cells[7, 7] = True
    out = brute_force_inflation(OccupancyGrid(cells), 2)
    ys, xs = np.mgrid[0:15, 0:15]
    disc = (xs - 7) ** 2 + (ys - 7) ** 2 <= 4
    edge = (xs < 2) | (ys < 2) | (xs > 12) | (ys > 12)
    assert np.array_equal(out, disc | edge)


def test_de_casteljau_quadratic():
    assert np.allclose(de_casteljau([(0, 0), (1, 1), (2, 0)], 0.5), (1.0, 0.5))


def test_aggregates():
    assert mean_abs([1, -3, 2]) == 2
    assert mean_abs([]) == 0.0
    assert polyline_length([(0, 0), (3, 4), (3, 5)]) == 6.0
    assert polyline_length([(1, 1, 0.3)]) == 0.0
