"""Reference oracles and aggregate metrics.

The oracles here are deliberately plain: uniform-cost search, breadth-first
flood fill and brute-force inflation. They share only the move definitions
(``neighbor_offsets``/``stepping_stones``) with the planner, never its open-list
machinery.
"""
import heapq
import math
from collections import deque

import numpy as np

from .clearance import TRAVERSABLE
from .search import Neighborhood, neighbor_offsets


def _moves(grid, cm, cell, neighborhood):
    x, y = cell
    for dx, dy, cost, stones in neighbor_offsets(neighborhood):
        nx, ny = x + dx, y + dy
        if not grid.in_bounds(nx, ny) or cm.query((nx, ny)) != TRAVERSABLE:
            continue
        if any(cm.query((x + sx, y + sy)) != TRAVERSABLE for sx, sy in stones):
            continue
        yield (nx, ny), cost


def dijkstra_cost(grid, cm, start, goal, neighborhood=Neighborhood.EIGHT):
    """Optimal path cost over the planner's move graph, or None if unreachable."""
    start, goal = tuple(start), tuple(goal)
    if cm.query(start) != TRAVERSABLE or cm.query(goal) != TRAVERSABLE:
        return None
    dist = {start: 0.0}
    pq = [(0.0, start)]
    done = set()
    while pq:
        d, cell = heapq.heappop(pq)
        if cell in done:
            continue
        if cell == goal:
            return d
        done.add(cell)
        for nxt, c in _moves(grid, cm, cell, neighborhood):
            nd = d + c
            if nd < dist.get(nxt, math.inf):
                dist[nxt] = nd
                heapq.heappush(pq, (nd, nxt))
    return None


def reachable_set(grid, cm, start, neighborhood=Neighborhood.EIGHT):
    start = tuple(start)
    if not grid.in_bounds(*start) or cm.query(start) != TRAVERSABLE:
        return set()
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for nxt, _ in _moves(grid, cm, cell, neighborhood):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def brute_force_inflation(grid, radius):
    """Boolean (h, w) array, True where an obstacle or the map edge is within radius."""
    h, w = grid.height, grid.width
    obst = np.argwhere(grid.cells)
    out = np.zeros((h, w), dtype=bool)
    r = int(math.floor(radius + 1e-9))
    for y in range(h):
        for x in range(w):
            if radius > 0 and (x - r < 0 or y - r < 0 or x + r >= w or y + r >= h):
                # part of the disc may still fall inside; test the off-map points
                off = any(
                    dx * dx + dy * dy <= radius * radius + 1e-9
                    and not (0 <= x + dx < w and 0 <= y + dy < h)
                    for dx in range(-r, r + 1) for dy in range(-r, r + 1)
                )
                if off:
                    out[y, x] = True
                    continue
            if len(obst):
                d2 = (obst[:, 1] - x) ** 2 + (obst[:, 0] - y) ** 2
                out[y, x] = bool((d2 <= radius * radius + 1e-9).any())
    return out


def de_casteljau(control, t):
    pts = [np.asarray(p, dtype=float) for p in control]
    while len(pts) > 1:
        pts = [(1.0 - t) * a + t * b for a, b in zip(pts, pts[1:])]
    return pts[0]


def mean_abs(values):
    values = list(values)
    return sum(abs(v) for v in values) / len(values) if values else 0.0


def polyline_length(points):
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.hypot(*np.diff(pts[:, :2], axis=0).T).sum())
