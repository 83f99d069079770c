"""Occupancy-grid loading and result writers.

Grids use the (x, y) = (column, row) convention with the origin in the top-left
corner; every other module follows it.
"""
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyGrid, IoError, ParseError

FREE_CHAR = "."
OBSTACLE_CHAR = "#"
PGM_THRESHOLD = 128


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Binary obstacle raster, ``cells[y, x]`` is True for an obstacle."""

    cells: np.ndarray
    resolution: float = 1.0
    _flat: bytes = field(init=False, repr=False)

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=bool)
        if cells.ndim != 2:
            raise ParseError(f"grid must be 2-D, got shape {cells.shape}")
        if cells.size == 0:
            raise EmptyGrid("grid has no cells")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        # row-major bytes: cheap scalar lookups in the planner's inner loops
        object.__setattr__(self, "_flat", cells.astype(np.uint8).tobytes())

    @classmethod
    def from_rows(cls, rows, resolution=1.0):
        return cls(np.array([[ch == OBSTACLE_CHAR for ch in row] for row in rows]),
                   resolution)

    @property
    def width(self):
        return self.cells.shape[1]

    @property
    def height(self):
        return self.cells.shape[0]

    @property
    def flat(self):
        return self._flat

    def in_bounds(self, x, y):
        return 0 <= x < self.width and 0 <= y < self.height

    def is_obstacle(self, x, y):
        return bool(self.cells[y, x])

    @property
    def obstacle_density(self):
        return float(self.cells.mean())

    def to_text(self):
        return "\n".join(
            "".join(OBSTACLE_CHAR if c else FREE_CHAR for c in row) for row in self.cells
        ) + "\n"

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (self.cells.shape == other.cells.shape
                and bool(np.array_equal(self.cells, other.cells))
                and self.resolution == other.resolution)

    def __hash__(self):
        return hash((self.cells.shape, self._flat, self.resolution))


def load_grid(path, resolution=1.0):
    """Read a grid from a text map ('.'/'#') or a P2/P5 PGM image."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] in (b"P2", b"P5"):
        return OccupancyGrid(_parse_pgm(data), resolution)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text: {exc}") from None
    return OccupancyGrid(_parse_text(text), resolution)


def _parse_text(text):
    rows = [line.strip() for line in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows:
        raise EmptyGrid("map file contains no rows")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"row {i} has length {len(row)}, expected {width}")
        bad = set(row) - {FREE_CHAR, OBSTACLE_CHAR}
        if bad:
            raise ParseError(f"row {i}: illegal character(s) {sorted(bad)!r}")
    buf = np.frombuffer("".join(rows).encode("ascii"), dtype=np.uint8)
    return (buf == ord(OBSTACLE_CHAR)).reshape(len(rows), width)


def _pgm_header(data, count):
    """Return ``count`` header tokens and the offset just past the last one."""
    tokens = []
    pos = 2
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ParseError("truncated PGM header")
        tokens.append(data[start:pos])
    try:
        return [int(t) for t in tokens], pos
    except ValueError:
        raise ParseError(f"bad PGM header tokens {tokens!r}") from None


def _parse_pgm(data):
    magic = data[:2]
    (width, height, maxval), pos = _pgm_header(data, 3)
    if width < 1 or height < 1:
        raise EmptyGrid(f"PGM declares {width}x{height} pixels")
    if not 0 < maxval <= 255:
        raise ParseError(f"unsupported PGM maxval {maxval}")
    count = width * height
    if magic == b"P5":
        raster = data[pos + 1:pos + 1 + count]
        if len(raster) != count:
            raise ParseError(f"P5 raster has {len(raster)} bytes, expected {count}")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    else:
        body = data[pos:]
        body = b"\n".join(line.split(b"#", 1)[0] for line in body.splitlines())
        try:
            values = np.array([int(t) for t in body.split()], dtype=np.int64)
        except ValueError:
            raise ParseError("non-integer intensity in P2 raster") from None
        if values.size != count:
            raise ParseError(f"P2 raster has {values.size} values, expected {count}")
    if values.max(initial=0) > maxval:
        raise ParseError("intensity exceeds maxval")
    # threshold on the 0..255 scale regardless of maxval
    return (values * 255 < PGM_THRESHOLD * maxval).reshape(height, width)


def write_grid_text(grid, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(grid.to_text())


def _poses_of(path):
    poses = getattr(path, "poses", path)
    return np.asarray(poses, dtype=float).reshape(-1, 3) if len(poses) else np.empty((0, 3))


def write_path_csv(path, file):
    """Write one ``x,y,heading`` line per pose with six decimals."""
    poses = _poses_of(path)
    if len(poses) == 0:
        raise ValueError("cannot write an empty path")
    try:
        with open(file, "w", encoding="utf-8") as fh:
            for x, y, h in poses:
                fh.write(f"{x:.6f},{y:.6f},{h:.6f}\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def write_json(obj, file):
    try:
        with open(file, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=False)
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def bundled_map(name):
    """Absolute path of a map shipped with the package (e.g. ``vertical.txt``)."""
    return os.path.join(os.path.dirname(__file__), "maps", os.path.basename(name))
