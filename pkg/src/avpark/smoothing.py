"""Bezier and B-spline path smoothing."""
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_path
from .exceptions import DegenerateInput, GapTooLarge


@dataclass(frozen=True)
class SplineConfig:
    degree: int = 3
    sample_stride: int = 3
    output_spacing: float = 0.25

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be at least 1")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be at least 1")
        if self.output_spacing <= 0:
            raise ValueError("output_spacing must be positive")


def bezier_point(control, t):
    """Evaluate a Bezier curve through the Bernstein form."""
    pts = np.asarray(control, dtype=float)
    if len(pts) < 2:
        raise DegenerateInput("a Bezier curve needs at least two control points")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    n = len(pts) - 1
    weights = np.array([math.comb(n, i) * t ** i * (1.0 - t) ** (n - i) for i in range(n + 1)])
    return weights @ pts


def bspline_basis(i, k, t, knots):
    """Cox-de Boor value of basis function ``i`` of degree ``k`` at ``t``.

    Spans are half-open except the last non-empty one, which also owns the
    final knot so clamped curves reach their end point. 0/0 terms are zero.
    """
    if k == 0:
        lo, hi = knots[i], knots[i + 1]
        if lo <= t < hi:
            return 1.0
        if t == knots[-1] and lo < hi == knots[-1]:
            return 1.0
        return 0.0
    out = 0.0
    den = knots[i + k] - knots[i]
    if den > 0:
        out += (t - knots[i]) / den * bspline_basis(i, k - 1, t, knots)
    den = knots[i + k + 1] - knots[i + 1]
    if den > 0:
        out += (knots[i + k + 1] - t) / den * bspline_basis(i + 1, k - 1, t, knots)
    return out


def ramp(stop, n):
    """``np.linspace(0, stop, n + 1)``, bit for bit while ``stop / n`` is nonzero.

    The planner builds dozens of short sample ramps per plan, where linspace's
    argument handling costs more than the arithmetic.
    """
    s = np.arange(n + 1.0) * (stop / n)
    s[-1] = stop
    return s


def poses_from(xs, ys, hs):
    """Stack coordinate columns into an (n, 3) pose array; ``hs`` may be a scalar."""
    out = np.empty((len(xs), 3))
    out[:, 0] = xs
    out[:, 1] = ys
    out[:, 2] = hs
    return out


def clamped_knots(n_ctrl, k):
    """Clamped uniform knot vector on [0, 1] for ``n_ctrl`` control points."""
    inner = n_ctrl - k - 1
    middle = [j / (inner + 1) for j in range(1, inner + 1)]
    return np.array([0.0] * (k + 1) + middle + [1.0] * (k + 1))


def basis_matrix(ts, k, knots):
    """All basis values at once: rows are parameters, columns basis functions."""
    ts = np.asarray(ts, dtype=float)
    knots = np.asarray(knots, dtype=float)
    n_basis0 = len(knots) - 1
    lo, hi = knots[:-1], knots[1:]
    B = ((ts[:, None] >= lo) & (ts[:, None] < hi)).astype(float)
    last = np.nonzero(lo < hi)[0][-1]
    B[ts == knots[-1], last] = 1.0
    for d in range(1, k + 1):
        n_basis = n_basis0 - d
        left_den = knots[d:d + n_basis] - knots[:n_basis]
        right_den = knots[d + 1:d + 1 + n_basis] - knots[1:1 + n_basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.where(left_den > 0,
                            (ts[:, None] - knots[:n_basis]) / left_den, 0.0)
            right = np.where(right_den > 0,
                             (knots[d + 1:d + 1 + n_basis] - ts[:, None]) / right_den, 0.0)
        B = left * B[:, :n_basis] + right * B[:, 1:n_basis + 1]
    return B


def control_points(raw, stride):
    """Every ``stride``-th raw point, always keeping the first and the last."""
    raw = np.asarray(raw, dtype=float)
    idx = list(range(0, len(raw), stride))
    if idx[-1] != len(raw) - 1:
        idx.append(len(raw) - 1)
    return raw[idx]


def _dedupe(points):
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.hypot(*np.diff(points, axis=0).T) > 1e-12
    return points[keep]


def resample(points, spacing, headings=None):
    """Resample a dense polyline at fixed arc-length spacing into (x, y, psi) poses."""
    points = np.asarray(points, dtype=float)
    seg = np.hypot(*np.diff(points, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    n = max(1, int(math.ceil(total / spacing - 1e-9)))
    q = ramp(total, n)
    x = np.interp(q, s, points[:, 0])
    y = np.interp(q, s, points[:, 1])
    if headings is None:
        d = np.diff(points, axis=0)
        seg_h = np.arctan2(d[:, 1], d[:, 0])
        headings = np.concatenate([seg_h, seg_h[-1:]])
    c = np.interp(q, s, np.cos(headings))
    sn = np.interp(q, s, np.sin(headings))
    out = poses_from(x, y, np.arctan2(sn, c))
    out[0, :2] = points[0]
    out[-1, :2] = points[-1]
    return out


def polyline_poses(raw, spacing=0.25):
    """Unsmoothed raw path as poses spaced along its straight segments."""
    pts = _dedupe(check_path(raw, min_len=1))
    if len(pts) == 1:
        return np.array([[pts[0, 0], pts[0, 1], 0.0]])
    d = np.diff(pts, axis=0)
    seg_h = np.arctan2(d[:, 1], d[:, 0])
    dense, heads = [pts[:1]], [seg_h[:1]]
    for a, b, hd in zip(pts[:-1], pts[1:], seg_h):
        n = max(1, int(math.ceil(math.hypot(*(b - a)) / spacing - 1e-9)))
        ts = np.linspace(0.0, 1.0, n + 1)[1:]
        dense.append(a + ts[:, None] * (b - a))
        heads.append(np.full(n, hd))
    dense = np.concatenate(dense)
    heads = np.concatenate(heads)
    # heading changes at the vertex itself, not smeared over the next segment
    seg = np.hypot(*np.diff(dense, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    n = max(1, int(math.ceil(total / spacing - 1e-9)))
    q = np.linspace(0.0, total, n + 1)
    x = np.interp(q, s, dense[:, 0])
    y = np.interp(q, s, dense[:, 1])
    pos = np.clip(np.searchsorted(s, q, side="left"), 0, len(heads) - 1)
    return np.column_stack([x, y, heads[pos]])


def bspline_curve(ctrl, k, samples_per_span=24):
    """Dense samples of the clamped B-spline and its tangent headings."""
    ctrl = np.asarray(ctrl, dtype=float)
    k = min(k, len(ctrl) - 1)
    # knots are valid by construction, so skip scipy's input checks
    spline = BSpline.construct_fast(clamped_knots(len(ctrl), k), ctrl, k)
    n = max(2, samples_per_span * (len(ctrl) - k) + 1)
    ts = ramp(1.0, n - 1)
    deriv = spline(ts, nu=1)
    return spline(ts), np.arctan2(deriv[:, 1], deriv[:, 0])


def smooth_path(raw, cfg=None):
    """Fit a clamped B-spline through sub-sampled raw cells and resample it as poses."""
    cfg = cfg or SplineConfig()
    pts = check_path(raw, min_len=2)
    if len(_dedupe(pts)) < 2:
        raise DegenerateInput("path has fewer than two distinct points")
    ctrl = _dedupe(control_points(pts, cfg.sample_stride))
    dense, heads = bspline_curve(ctrl, cfg.degree)
    return resample(dense, cfg.output_spacing, heads)


def smooth_path_safe(raw, cfg, path_clear):
    """Smooth, falling back to denser control points until ``path_clear(poses)`` holds.

    Returns ``(poses, stride_used)``; stride 0 means even stride 1 cut a corner
    and the raw polyline was returned instead.
    """
    stride = cfg.sample_stride
    while stride >= 1:
        c = SplineConfig(cfg.degree, stride, cfg.output_spacing)
        poses = smooth_path(raw, c)
        if path_clear(poses):
            return poses, stride
        stride -= 1
    return polyline_poses(raw, cfg.output_spacing), 0


def _tangent_intersection(p0, h0, p2, h2):
    d0 = np.array([math.cos(h0), math.sin(h0)])
    d2 = np.array([math.cos(h2), math.sin(h2)])
    cross = d0[0] * d2[1] - d0[1] * d2[0]
    if abs(cross) < 1e-9:
        return None
    diff = p2 - p0
    # p0 + s d0 == p2 + u d2; a proper corner lies ahead of p0 and behind p2
    s = (diff[0] * d2[1] - diff[1] * d2[0]) / cross
    u = (diff[0] * d0[1] - diff[1] * d0[0]) / cross
    if s <= 0 or u >= 0:
        return None
    return p0 + s * d0


def smooth_junction(seg_a, seg_b, window=2, max_gap=1.0):
    """Blend the joint of two pose lists with one quadratic Bezier.

    ``window`` poses on each side of the joint are replaced. The middle control
    point is the intersection of the tangents at the window ends, which keeps
    the blend tangent to both segments.
    """
    a = np.asarray(seg_a, dtype=float).reshape(-1, 3)
    b = np.asarray(seg_b, dtype=float).reshape(-1, 3)
    if len(a) == 0 or len(b) == 0:
        raise DegenerateInput("both segments need at least one pose")
    if math.hypot(*(a[-1, :2] - b[0, :2])) > max_gap:
        raise GapTooLarge("segments do not meet")
    na = min(window, len(a) - 1)
    nb = min(window, len(b) - 1)
    if na == 0 and nb == 0:
        return np.vstack([a, b[1:]])
    p0, h0 = a[-1 - na, :2], a[-1 - na, 2]
    p2, h2 = b[nb, :2], b[nb, 2]
    joint = 0.5 * (a[-1, :2] + b[0, :2])
    mid = _tangent_intersection(p0, h0, p2, h2)
    if mid is None or math.hypot(*(mid - joint)) > 2.0 * (na + nb + 1):
        mid = joint
    count = na + nb + 1
    ts = ramp(1.0, count - 1)
    pts = ((1 - ts) ** 2)[:, None] * p0 + (2 * (1 - ts) * ts)[:, None] * mid + (ts ** 2)[:, None] * p2
    d = (2 * (1 - ts))[:, None] * (mid - p0) + (2 * ts)[:, None] * (p2 - mid)
    heads = np.arctan2(d[:, 1], d[:, 0])
    degenerate = np.hypot(d[:, 0], d[:, 1]) < 1e-12
    heads[degenerate] = np.interp(ts[degenerate], [0.0, 1.0], [h0, h2])
    heads[0], heads[-1] = h0, h2
    blend = poses_from(pts[:, 0], pts[:, 1], heads)
    return np.vstack([a[:len(a) - 1 - na], blend, b[nb + 1:]])


class BSplineSmoother(TransformerMixin, BaseEstimator):
    """Transformer wrapper: maps raw cell paths to smoothed pose arrays."""

    def __init__(self, degree=3, sample_stride=3, output_spacing=0.25):
        self.degree = degree
        self.sample_stride = sample_stride
        self.output_spacing = output_spacing

    def fit(self, X=None, y=None):
        self.config_ = SplineConfig(self.degree, self.sample_stride, self.output_spacing)
        return self

    def transform(self, X):
        cfg = getattr(self, "config_", None) or SplineConfig(
            self.degree, self.sample_stride, self.output_spacing)
        return [smooth_path(path, cfg) for path in X]
