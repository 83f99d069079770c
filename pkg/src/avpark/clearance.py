"""Vehicle-volume traversability over an occupancy grid.

A cell is impassable when any obstacle (or any point off the map) lies within
``radius`` of its centre. Verdicts are cached in a tri-state matrix that starts
out UNKNOWN and is resolved on demand, so a search only pays for the cells it
actually touches.
"""
import math
from array import array

import numpy as np

from .exceptions import OutOfBounds

IMPASSABLE = -1
UNKNOWN = 0
TRAVERSABLE = 1


def disc_offsets(radius):
    """Integer offsets within Euclidean ``radius`` of the origin, nearest first."""
    r = int(math.floor(radius + 1e-9))
    offs = [(dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1)
            if dx * dx + dy * dy <= radius * radius + 1e-9]
    offs.sort(key=lambda o: (o[0] * o[0] + o[1] * o[1], o[1], o[0]))
    return offs


class ClearanceMatrix:
    """Tri-state cache of clearance verdicts for one grid and one radius.

    ``states`` holds IMPASSABLE (-1), UNKNOWN (0) or TRAVERSABLE (1) per cell in
    row-major order. A verdict never changes once resolved.
    """

    def __init__(self, grid, radius):
        if radius < 0:
            raise ValueError("radius must be non-negative")
        self.grid = grid
        self.radius = float(radius)
        self._w = grid.width
        self._h = grid.height
        self._obst = grid.flat
        self._offsets = disc_offsets(self.radius)
        self._reach = int(math.floor(self.radius + 1e-9))
        self._flat_offsets = [dy * self._w + dx for dx, dy in self._offsets]
        self._states = array("b", bytes(self._w * self._h))
        self.resolved = 0

    @property
    def states(self):
        return np.frombuffer(self._states, dtype=np.int8).reshape(self._h, self._w)

    @property
    def unknown_count(self):
        return self._w * self._h - self.resolved

    def _scan(self, x, y):
        w, h, obst = self._w, self._h, self._obst
        r = self._reach
        if r <= x < w - r and r <= y < h - r:
            base = y * w + x
            for o in self._flat_offsets:
                if obst[base + o]:
                    return IMPASSABLE
            return TRAVERSABLE
        for dx, dy in self._offsets:
            nx = x + dx
            ny = y + dy
            if nx < 0 or ny < 0 or nx >= w or ny >= h:
                return IMPASSABLE
            if obst[ny * w + nx]:
                return IMPASSABLE
        return TRAVERSABLE

    def query_index(self, idx):
        """Verdict for the row-major cell index ``idx``, resolving it if needed."""
        s = self._states[idx]
        if s:
            return s
        y, x = divmod(idx, self._w)
        s = self._scan(x, y)
        self._states[idx] = s
        self.resolved += 1
        return s

    def query(self, cell):
        x, y = cell
        if not (0 <= x < self._w and 0 <= y < self._h):
            raise OutOfBounds(f"cell {cell} outside {self._w}x{self._h} grid")
        return self.query_index(y * self._w + x)

    def is_traversable(self, cell):
        return self.query(cell) == TRAVERSABLE

    def pose_clear(self, x, y):
        """Verdict for the cell containing the continuous point (x, y)."""
        cx, cy = int(round(x)), int(round(y))
        if not (0 <= cx < self._w and 0 <= cy < self._h):
            return False
        return self.query_index(cy * self._w + cx) == TRAVERSABLE

    def points_clear(self, points):
        """True when every continuous point in ``points`` (n, >=2) passes ``pose_clear``."""
        pts = np.asarray(points, dtype=float)
        if len(pts) == 0:
            return True
        cells = np.rint(pts[:, :2]).astype(np.int64)
        cx, cy = cells[:, 0], cells[:, 1]
        if ((cx < 0) | (cy < 0) | (cx >= self._w) | (cy >= self._h)).any():
            return False
        idx = cy * self._w + cx
        states = np.frombuffer(self._states, dtype=np.int8)
        seen = states[idx]
        if (seen == IMPASSABLE).any():
            return False
        query = self.query_index
        # path order, each unknown cell once
        return all(query(i) == TRAVERSABLE for i in dict.fromkeys(idx[seen == 0].tolist()))


def lazy(grid, radius):
    """Empty cache; every verdict is computed on first query."""
    return ClearanceMatrix(grid, radius)


def precompute_all(grid, radius):
    """Resolve every cell up front by tallying each cell's full disc.

    This is the map-loading baseline: each cell inspects every point of its
    disc, obstacle or not, and no result is reused between cells.
    """
    cm = ClearanceMatrix(grid, radius)
    w, h, obst = cm._w, cm._h, cm._obst
    offsets = cm._offsets
    states = cm._states
    for y in range(h):
        for x in range(w):
            hits = 0
            for dx, dy in offsets:
                nx = x + dx
                ny = y + dy
                if nx < 0 or ny < 0 or nx >= w or ny >= h or obst[ny * w + nx]:
                    hits += 1
            states[y * w + x] = IMPASSABLE if hits else TRAVERSABLE
    cm.resolved = w * h
    return cm


def build(grid, radius, mode):
    """Construct the matrix for a clearance mode: 'lazy', 'eager' or 'off'."""
    mode = str(getattr(mode, "value", mode)).lower()
    if mode == "lazy":
        return lazy(grid, radius)
    if mode == "eager":
        return precompute_all(grid, radius)
    if mode == "off":
        return lazy(grid, 0.0)
    raise ValueError(f"unknown clearance mode {mode!r}")
