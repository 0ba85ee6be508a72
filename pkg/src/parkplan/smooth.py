"""Bezier and clamped B-spline smoothing of grid polylines."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateInput, DomainError
from .gridmap import traversable


@dataclass(frozen=True)
class SplineConfig:
    degree: int = 3
    sample_stride: int = 3
    # None -> ten samples per control point
    output_samples: int | None = None

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if self.output_samples is not None and self.output_samples < 2:
            raise ValueError("output_samples must be >= 2")


def bernstein(i, n, t):
    if not 0 <= i <= n:
        raise DomainError(f"Bernstein index {i} outside [0, {n}]")
    return math.comb(n, i) * t ** i * (1.0 - t) ** (n - i)


def bspline_basis(i, k, t, knots):
    """Cox-de Boor recurrence for the i-th degree-k basis function.

    Degree 0 is the indicator of [t_i, t_{i+1}); the final non-empty span is
    closed on the right so clamped curves reach their last control point.
    Terms with a zero-width denominator are dropped.
    """
    m = len(knots) - 1
    if i < 0 or i + k + 1 > m:
        raise DomainError(f"basis index {i} (degree {k}) outside knot vector of length {m + 1}")
    if k == 0:
        lo, hi = knots[i], knots[i + 1]
        if lo <= t < hi:
            return 1.0
        if lo < hi and t == hi == knots[-1]:
            # only the last non-degenerate span includes the right endpoint
            j = max(j for j in range(m) if knots[j] < knots[j + 1])
            return 1.0 if j == i else 0.0
        return 0.0
    out = 0.0
    d1 = knots[i + k] - knots[i]
    if d1 > 0:
        out += (t - knots[i]) / d1 * bspline_basis(i, k - 1, t, knots)
    d2 = knots[i + k + 1] - knots[i + 1]
    if d2 > 0:
        out += (knots[i + k + 1] - t) / d2 * bspline_basis(i + 1, k - 1, t, knots)
    return out


def clamped_uniform_knots(n_ctrl, degree):
    """Knots on [0, 1] with both ends repeated degree + 1 times."""
    if n_ctrl < degree + 1:
        raise DomainError("need at least degree + 1 control points")
    n_inner = n_ctrl - degree - 1
    inner = np.linspace(0.0, 1.0, n_inner + 2)[1:-1]
    return np.concatenate([np.zeros(degree + 1), inner, np.ones(degree + 1)])


def eval_bspline(ctrl, degree, params, knots=None):
    ctrl = np.asarray(ctrl, dtype=float)
    if knots is None:
        knots = clamped_uniform_knots(len(ctrl), degree)
    basis = _kernels.bspline_basis_matrix(np.asarray(knots, float), degree, len(ctrl),
                                          np.asarray(params, float))
    return basis @ ctrl


def eval_bezier(ctrl, params):
    ctrl = np.asarray(ctrl, dtype=float)
    n = len(ctrl) - 1
    t = np.asarray(params, dtype=float)[:, None]
    i = np.arange(n + 1)[None, :]
    coef = np.array([math.comb(n, j) for j in range(n + 1)], dtype=float)[None, :]
    return (coef * t ** i * (1.0 - t) ** (n - i)) @ ctrl


def control_points(path, stride):
    """Every ``stride``-th cell, always keeping the last one."""
    idx = list(range(0, len(path), stride))
    if idx[-1] != len(path) - 1:
        idx.append(len(path) - 1)
    return idx


def smooth_path(path, cfg=SplineConfig(), resolution=1.0, grid=None, matrix=None, refine_rounds=8):
    """Fit a clamped B-spline through strided path cells; returns (n, 2) metres.

    With ``grid`` and ``matrix`` given, every sample's nearest cell must be
    traversable.  The raw cell nearest each offending sample is added as a
    control point (up to ``refine_rounds`` times); any sample still unsafe
    is replaced by the raw polyline cells it spans.
    """
    if len(path) < 2:
        raise DegenerateInput("path needs at least 2 cells")
    pts = np.asarray(path, dtype=float) * resolution
    idx = control_points(path, cfg.sample_stride)
    curve, spans = _fit(pts, idx, cfg)
    if grid is None or matrix is None:
        return curve
    for _ in range(refine_rounds):
        ok = _safe(curve, grid, matrix, resolution)
        if ok.all():
            return curve
        # pin the curve to the raw cell nearest each offending sample
        extra = {_nearest_raw(pts, p) for p in curve[~ok]}
        new_idx = sorted(set(idx) | extra)
        if new_idx == idx:
            break
        idx = new_idx
        curve, _ = _fit(pts, idx, cfg)
    return _revalidate(curve, pts, path, grid, matrix, resolution)


def _fit(pts, idx, cfg):
    """Evaluate the spline and report each sample's control-polygon span."""
    ctrl = pts[idx]
    degree = min(cfg.degree, len(ctrl) - 1)
    n_out = cfg.output_samples or 10 * len(ctrl)
    params = np.linspace(0.0, 1.0, n_out)
    curve = eval_bspline(ctrl, degree, params)
    curve[0], curve[-1] = pts[0], pts[-1]
    knots = clamped_uniform_knots(len(ctrl), degree)
    spans = np.clip(np.searchsorted(knots, params, side="right") - 1, degree, len(ctrl) - 1) - degree
    return curve, spans


def _safe(curve, grid, matrix, resolution):
    cells = np.rint(curve / resolution).astype(int)
    return np.array([grid.in_bounds((c, r)) and traversable(grid, matrix, (c, r)) for c, r in cells])


def _nearest_raw(pts, p):
    return int(np.argmin(((pts - p) ** 2).sum(axis=1)))


def _revalidate(curve, pts, path, grid, matrix, resolution):
    ok = _safe(curve, grid, matrix, resolution)
    if ok.all():
        return curve
    out = []
    i = 0
    n = len(curve)
    while i < n:
        if ok[i]:
            out.append(curve[i])
            i += 1
            continue
        j = i
        while j < n and not ok[j]:
            j += 1
        a = _nearest_raw(pts, curve[i - 1]) if i > 0 else 0
        b = _nearest_raw(pts, curve[j]) if j < n else len(pts) - 1
        if b < a:
            a, b = b, a
        out.extend(pts[a:b + 1])
        i = j
    return np.asarray(out)
