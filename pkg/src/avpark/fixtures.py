"""Deterministic garage maps bundled with the package.

The maps are 200x200 cells, mostly occupied, with narrow drivable aisles and
carved parking spots. They approximate the topology of real perception grids
rather than any particular pixels. Regenerate with ``python -m avpark.fixtures``.
"""
import os

import numpy as np

from .map_io import OccupancyGrid, bundled_map, write_grid_text

SIZE = 200


def _carve(cells, x0, x1, y0, y1, value=False):
    cells[y0:y1 + 1, x0:x1 + 1] = value


def _speckle(cells, rng, count=600):
    """Perception noise: isolated free pockets inside occupied regions."""
    h, w = cells.shape
    for _ in range(count):
        x, y = rng.integers(2, w - 2), rng.integers(2, h - 2)
        if cells[y - 1:y + 2, x - 1:x + 2].all():
            cells[y, x] = False


def _parked_row(cells, x_start, x_end, y0, y1, pitch, empty=()):
    """A row of spots separated by one-cell dividers; ``empty`` spot indices are carved."""
    for i, x in enumerate(range(x_start, x_end - pitch + 2, pitch)):
        if i in empty:
            _carve(cells, x, x + pitch - 2, y0, y1)


def vertical(seed=0):
    """Perpendicular-parking garage; start (95, 85), spot centred on (109, 133).

    The start sits in an open driving hall north of the spot row, so the
    approach runs diagonally across free floor rather than around a corner.
    """
    rng = np.random.default_rng(seed)
    cells = np.ones((SIZE, SIZE), dtype=bool)
    _carve(cells, 88, 102, 30, 72)            # entry ramp from the north
    _carve(cells, 70, 175, 73, 128)           # driving hall
    _parked_row(cells, 105, 177, 129, 141, 10, empty=(0, 2, 5))   # spot 0 spans x 105..113
    _parked_row(cells, 113, 175, 60, 72, 10, empty=(1, 4))
    for x, y in ((130, 88), (150, 88), (80, 105), (140, 108), (160, 108)):
        _carve(cells, x, x + 2, y, y + 2, True)   # structural pillars
    _speckle(cells, rng)
    return OccupancyGrid(cells)


def parallel(seed=1):
    """Parallel-parking garage; start (110, 65), bay centred on (142, 110)."""
    rng = np.random.default_rng(seed)
    cells = np.ones((SIZE, SIZE), dtype=bool)
    _carve(cells, 103, 117, 30, 106)          # north-south aisle holding the start
    _carve(cells, 103, 185, 90, 106)          # east-west aisle
    _carve(cells, 131, 175, 107, 113)         # kerbside lane; the target bay is its west end
    _carve(cells, 154, 156, 112, 113, True)   # kerb stone between bays
    for x in (124, 160):
        _carve(cells, x, x + 2, 90, 91, True)
    _speckle(cells, rng)
    return OccupancyGrid(cells)


def unreachable(seed=0):
    """The vertical garage with the aisle walled off around the destination (109, 117)."""
    cells = np.array(vertical(seed).cells)
    _carve(cells, 104, 116, 110, 124, True)
    return OccupancyGrid(cells)


def random_grid(rng, size, density):
    """Uniform random obstacles, used by the property tests and acceptance runs."""
    h, w = (size, size) if np.isscalar(size) else size
    return OccupancyGrid(rng.random((h, w)) < density)


BUNDLED = {"vertical.txt": vertical, "parallel.txt": parallel, "unreachable.txt": unreachable}


def write_bundled(directory=None):
    paths = []
    for name, make in BUNDLED.items():
        path = os.path.join(directory, name) if directory else bundled_map(name)
        write_grid_text(make(), path)
        paths.append(path)
    return paths


if __name__ == "__main__":
    for p in write_bundled():
        print(p)
