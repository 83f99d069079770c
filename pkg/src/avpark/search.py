"""Grid A* planners: baseline and improved variants.

One ``plan`` entry point covers every ablation: weighted and tie-broken
priorities, binary-heap or linear open lists, eight- or sixteen-cell
neighbourhoods, bidirectional meeting, and a best-effort fallback when the goal
cannot be reached.
"""
import heapq
import math
import time
from dataclasses import dataclass, field, asdict
from enum import Enum
from functools import partial

from sklearn.base import BaseEstimator

from . import clearance
from ._validation import check_cell, check_grid, check_is_fitted
from .clearance import TRAVERSABLE
from .exceptions import GoalOutOfBounds, StartBlocked, StartOutOfBounds

SQRT2 = math.sqrt(2.0)
SQRT5 = math.sqrt(5.0)


class Neighborhood(str, Enum):
    EIGHT = "eight"
    SIXTEEN = "sixteen"


class Heuristic(str, Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    DIAGONAL = "diagonal"


class ClearanceMode(str, Enum):
    LAZY = "lazy"
    EAGER = "eager"
    OFF = "off"


class Smoothing(str, Enum):
    BSPLINE = "bspline"
    OFF = "off"


@dataclass(frozen=True)
class PlannerConfig:
    w_far: float = 1.5
    w_near: float = 0.8
    switch_distance: float = 15.0
    tie_break_p: float = 0.001
    neighborhood: Neighborhood = Neighborhood.EIGHT
    use_binary_heap: bool = True
    bidirectional: bool = True
    use_clearance: ClearanceMode = ClearanceMode.LAZY
    smoothing: Smoothing = Smoothing.BSPLINE
    heuristic: Heuristic = Heuristic.EUCLIDEAN

    def __post_init__(self):
        for name, enum in (("neighborhood", Neighborhood), ("use_clearance", ClearanceMode),
                           ("smoothing", Smoothing), ("heuristic", Heuristic)):
            object.__setattr__(self, name, enum(getattr(self, name)))
        if self.w_far < 0 or self.w_near < 0:
            raise ValueError("heuristic weights must be non-negative")
        if not 0 <= self.tie_break_p < 0.01:
            raise ValueError("tie_break_p must lie in [0, 0.01)")
        if self.switch_distance < 0:
            raise ValueError("switch_distance must be non-negative")

    @classmethod
    def baseline(cls):
        """Classic A*: no weighting, list open set, unidirectional, eager clearance."""
        return cls(w_far=1.0, w_near=1.0, tie_break_p=0.0, use_binary_heap=False,
                   bidirectional=False, use_clearance=ClearanceMode.EAGER,
                   smoothing=Smoothing.OFF)

    def to_dict(self):
        return {k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(self).items()}


@dataclass
class SearchResult:
    path: list = field(default_factory=list)
    reached_goal: bool = False
    best_effort_cell: tuple = None
    expansions: int = 0
    open_max: int = 0
    wall_time: float = 0.0

    @property
    def cost(self):
        return path_cost(self.path)


def path_cost(path):
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(path, path[1:]))


def heuristic(a, b, kind=Heuristic.EUCLIDEAN):
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    kind = Heuristic(kind)
    if kind is Heuristic.EUCLIDEAN:
        return math.hypot(dx, dy)
    if kind is Heuristic.MANHATTAN:
        return dx + dy
    return max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy)


def priority(g, h, w_effective, p):
    return g + (w_effective + p) * h


def effective_weight(node, target, cfg):
    d = math.hypot(node[0] - target[0], node[1] - target[1])
    return cfg.w_near if d < cfg.switch_distance else cfg.w_far


_RING8 = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
_KNIGHTS = [(2, 1), (1, 2), (-1, 2), (-2, 1), (-2, -1), (-1, -2), (1, -2), (2, -1)]


def stepping_stones(dx, dy):
    """The two eight-neighbourhood cells a knight move passes between."""
    if abs(dx) == 2:
        return ((dx // 2, 0), (dx // 2, dy))
    return ((0, dy // 2), (dx, dy // 2))


def neighbor_offsets(kind):
    """(dx, dy, cost, stones) tuples in the canonical order."""
    offs = [(dx, dy, SQRT2 if dx and dy else 1.0, ()) for dx, dy in _RING8]
    if Neighborhood(kind) is Neighborhood.SIXTEEN:
        offs += [(dx, dy, SQRT5, stepping_stones(dx, dy)) for dx, dy in _KNIGHTS]
    return offs


def neighbors(cell, kind=Neighborhood.EIGHT):
    x, y = cell
    return [((x + dx, y + dy), c) for dx, dy, c, _ in neighbor_offsets(kind)]


class _HeapOpen:
    """Binary heap of ``(key, item)`` entries; ``push`` takes one entry."""

    __slots__ = ("items", "push", "pop")

    def __init__(self):
        self.items = []
        self.push = partial(heapq.heappush, self.items)
        self.pop = partial(heapq.heappop, self.items)

    def __len__(self):
        return len(self.items)


class _ListOpen:
    """Unsorted open list; every pop scans the whole list for the minimum."""

    __slots__ = ("items", "push")

    def __init__(self):
        self.items = []
        self.push = self.items.append

    def pop(self):
        lst = self.items
        best = 0
        best_key = lst[0][0]
        for i in range(1, len(lst)):
            k = lst[i][0]
            if k < best_key:
                best_key = k
                best = i
        return lst.pop(best)

    def __len__(self):
        return len(self.items)


class _Direction:
    """Open/closed bookkeeping for one search direction."""

    def __init__(self, root, goal_ref, use_heap):
        self.root = root
        self.open = _HeapOpen() if use_heap else _ListOpen()
        self.g = {root: 0.0}
        self.parent = {root: None}
        self.closed = set()
        self.counter = 0
        self.goal_ref = goal_ref
        self.min_closed = None
        self.min_closed_f = math.inf

    def push(self, f, idx, g):
        self.counter += 1
        self.open.push(((f, self.counter), (idx, g)))

    def pop_valid(self):
        """Pop the best live entry; stale and already-closed entries are dropped."""
        pop = self.open.pop
        items = self.open.items
        while items:
            (f, _), (idx, g) = pop()
            if idx in self.closed or g > self.g[idx]:
                continue
            return f, idx, g
        return None

    def chain(self, idx):
        out = []
        while idx is not None:
            out.append(idx)
            idx = self.parent[idx]
        return out


def plan(grid, cm, start, goal, cfg=None):
    """Plan from ``start`` to ``goal`` cells (x, y) over the clearance matrix."""
    cfg = cfg or PlannerConfig()
    w = grid.width
    if not grid.in_bounds(*start):
        raise StartOutOfBounds(f"start {start} outside grid")
    if not grid.in_bounds(*goal):
        raise GoalOutOfBounds(f"goal {goal} outside grid")
    t0 = time.perf_counter()
    s_idx = start[1] * w + start[0]
    g_idx = goal[1] * w + goal[0]
    if cm.query_index(s_idx) != TRAVERSABLE:
        raise StartBlocked(f"start {start} is not traversable")
    if s_idx == g_idx:
        return SearchResult([tuple(start)], True, None, 0, 0,
                            (time.perf_counter() - t0) * 1e3)

    planner = _Planner(grid, cm, cfg, goal)
    fw = _Direction(s_idx, g_idx, cfg.use_binary_heap)
    fw.push(0.0, s_idx, 0.0)
    goal_ok = cm.query_index(g_idx) == TRAVERSABLE
    if cfg.bidirectional and goal_ok:
        bw = _Direction(g_idx, s_idx, cfg.use_binary_heap)
        bw.push(0.0, g_idx, 0.0)
        result = planner.bidirectional(fw, bw)
    else:
        result = planner.unidirectional(fw, g_idx)
    result.wall_time = (time.perf_counter() - t0) * 1e3
    return result


class _Planner:
    def __init__(self, grid, cm, cfg, goal):
        self.w = grid.width
        self.h = grid.height
        self.cm = cm
        self.cfg = cfg
        self.goal = tuple(goal)
        self.offsets = neighbor_offsets(cfg.neighborhood)
        self.hkind = Heuristic(cfg.heuristic)
        self.expansions = 0
        self.open_max = 0
        # best-effort tracking (forward direction only)
        self.best_idx = None
        self.best_d = math.inf
        self.best_g = math.inf

    def _note_best(self, idx, g):
        y, x = divmod(idx, self.w)
        d = math.hypot(x - self.goal[0], y - self.goal[1])
        if d < self.best_d or (d == self.best_d and g < self.best_g):
            self.best_d = d
            self.best_g = g
            self.best_idx = idx

    def expand(self, d, idx, g, target, track_best):
        """Close ``idx`` in direction ``d`` and push its admissible neighbours."""
        w, h = self.w, self.h
        cfg = self.cfg
        cm = self.cm
        query = cm.query_index
        # resolved verdicts are read straight from the matrix; query resolves the rest
        states = cm._states
        closed = d.closed
        gmap = d.g
        parent = d.parent
        y, x = divmod(idx, w)
        tx, ty = target % w, target // w
        p = cfg.tie_break_p
        w_far, w_near, sw = cfg.w_far, cfg.w_near, cfg.switch_distance
        hkind = self.hkind
        gx, gy = self.goal
        opush = d.open.push
        hypot = math.hypot
        for dx, dy, c, stones in self.offsets:
            nx = x + dx
            ny = y + dy
            if nx < 0 or ny < 0 or nx >= w or ny >= h:
                continue
            nidx = ny * w + nx
            if nidx in closed:
                continue
            if (states[nidx] or query(nidx)) != TRAVERSABLE:
                continue
            if stones:
                (ax, ay), (bx, by) = stones
                ia = (y + ay) * w + x + ax
                ib = (y + by) * w + x + bx
                if ((states[ia] or query(ia)) != TRAVERSABLE
                        or (states[ib] or query(ib)) != TRAVERSABLE):
                    continue
            ng = g + c
            if ng < gmap.get(nidx, math.inf):
                gmap[nidx] = ng
                parent[nidx] = idx
                ex = abs(nx - tx)
                ey = abs(ny - ty)
                dist = math.sqrt(ex * ex + ey * ey)
                if hkind is Heuristic.EUCLIDEAN:
                    hv = dist
                elif hkind is Heuristic.MANHATTAN:
                    hv = ex + ey
                else:
                    hv = max(ex, ey) + (SQRT2 - 1.0) * min(ex, ey)
                wt = w_near if dist < sw else w_far
                d.counter += 1
                opush(((ng + (wt + p) * hv, d.counter), (nidx, ng)))
                if track_best:
                    # same rule as _note_best, inlined on the hot path
                    bd = hypot(nx - gx, ny - gy)
                    if bd < self.best_d or (bd == self.best_d and ng < self.best_g):
                        self.best_d = bd
                        self.best_g = ng
                        self.best_idx = nidx
        n_open = len(d.open)
        if n_open > self.open_max:
            self.open_max = n_open

    def _cells(self, idxs):
        w = self.w
        return [(i % w, i // w) for i in idxs]

    def unidirectional(self, fw, target, fallback_only=False):
        if not fallback_only:
            self._note_best(fw.root, 0.0)
        while True:
            item = fw.pop_valid()
            if item is None:
                break
            f, idx, g = item
            fw.closed.add(idx)
            self.expansions += 1
            if idx == target:
                return SearchResult(self._cells(fw.chain(idx)[::-1]), True, None,
                                    self.expansions, self.open_max)
            self.expand(fw, idx, g, target, True)
        return self._fallback(fw)

    def _fallback(self, fw):
        path = self._cells(fw.chain(self.best_idx)[::-1])
        return SearchResult(path, False, path[-1], self.expansions, self.open_max)

    def bidirectional(self, fw, bw):
        self._note_best(fw.root, 0.0)
        dirs = (fw, bw)
        turn = 0
        while True:
            d = dirs[turn]
            other = dirs[1 - turn]
            item = d.pop_valid()
            if item is None:
                if d is bw:
                    # goal side exhausted: keep searching forward towards the goal
                    return self.unidirectional(fw, bw.root, fallback_only=True)
                return self._fallback(fw)
            f, idx, g = item
            d.closed.add(idx)
            self.expansions += 1
            if idx != d.root and f < d.min_closed_f:
                d.min_closed_f = f
                d.min_closed = idx
            if idx in other.closed:
                fpart = fw.chain(idx)[::-1]
                bpart = bw.chain(idx)[1:]
                return SearchResult(self._cells(fpart + bpart), True, None,
                                    self.expansions, self.open_max)
            target = other.min_closed if other.min_closed is not None else other.root
            self.expand(d, idx, g, target, d is fw)
            turn = 1 - turn


class AStarPlanner(BaseEstimator):
    """Estimator front end: ``fit`` binds a map, ``predict`` plans (start, goal) pairs.

    ``radius`` is the clearance radius in cells; with ``use_clearance='off'`` it
    is ignored and only the occupied cells themselves block.
    """

    def __init__(self, w_far=1.5, w_near=0.8, switch_distance=15.0, tie_break_p=0.001,
                 neighborhood="eight", use_binary_heap=True, bidirectional=True,
                 use_clearance="lazy", heuristic="euclidean", radius=0.0):
        self.w_far = w_far
        self.w_near = w_near
        self.switch_distance = switch_distance
        self.tie_break_p = tie_break_p
        self.neighborhood = neighborhood
        self.use_binary_heap = use_binary_heap
        self.bidirectional = bidirectional
        self.use_clearance = use_clearance
        self.heuristic = heuristic
        self.radius = radius

    def _config(self):
        return PlannerConfig(self.w_far, self.w_near, self.switch_distance, self.tie_break_p,
                             self.neighborhood, self.use_binary_heap, self.bidirectional,
                             self.use_clearance, Smoothing.OFF, self.heuristic)

    def fit(self, X, y=None):
        self.config_ = self._config()
        self.grid_ = check_grid(X)
        self.clearance_ = clearance.build(self.grid_, self.radius, self.config_.use_clearance)
        return self

    def plan(self, start, goal):
        check_is_fitted(self, "grid_")
        return plan(self.grid_, self.clearance_, check_cell(start, "start"),
                    check_cell(goal, "goal"), self.config_)

    def predict(self, X):
        """One cell path per (start, goal) pair; best-effort paths included."""
        return [self.plan(start, goal).path for start, goal in X]
