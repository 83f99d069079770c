"""Input checks shared by the estimator front ends."""
import numpy as np

from .exceptions import DegenerateInput, NotFittedError
from .map_io import OccupancyGrid


def check_grid(grid):
    """Accept an OccupancyGrid or a 2-D boolean-like array."""
    if isinstance(grid, OccupancyGrid):
        return grid
    arr = np.asarray(grid)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D occupancy array, got shape {arr.shape}")
    if arr.dtype != bool and not np.isin(arr, (0, 1)).all():
        raise ValueError("occupancy array must be binary")
    return OccupancyGrid(arr.astype(bool))


def check_cell(cell, name="cell"):
    try:
        x, y = cell
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be an (x, y) pair, got {cell!r}") from None
    if int(x) != x or int(y) != y:
        raise ValueError(f"{name} must have integer coordinates, got {cell!r}")
    return int(x), int(y)


def check_path(path, min_len=2):
    pts = np.asarray(path, dtype=float)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise DegenerateInput(f"path must be an (n, 2) array, got shape {pts.shape}")
    if len(pts) < min_len:
        raise DegenerateInput(f"path needs at least {min_len} points")
    if not np.isfinite(pts).all():
        raise DegenerateInput("path contains non-finite coordinates")
    return pts[:, :2]


def check_is_fitted(estimator, attr):
    if not hasattr(estimator, attr):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first")
