"""Convex polygon helpers and the halfspace obstacle representation."""

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError


@dataclass(frozen=True, eq=False)
class ObstaclePolytope:
    """Convex set {y : A y <= b} with unit-norm rows, plus its CCW vertices."""
    A: np.ndarray
    b: np.ndarray
    vertices: np.ndarray

    def contains(self, pts, tol=0.0):
        pts = np.atleast_2d(pts)
        return np.all(pts @ self.A.T <= self.b + tol, axis=1)

    @property
    def centroid(self):
        return polygon_centroid(self.vertices)


def polygon_area(poly):
    x, y = np.asarray(poly, dtype=float).T
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_centroid(poly):
    p = np.asarray(poly, dtype=float)
    x, y = p.T
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def polytope_from_vertices(vertices, tol=1e-12):
    """Halfspace form of a convex CCW polygon, one unit normal per edge."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise GeometryError("need at least 3 planar vertices")
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    if np.any(lengths <= tol):
        raise GeometryError("repeated vertex")
    cross = edges[:, 0] * np.roll(edges[:, 1], -1) - edges[:, 1] * np.roll(edges[:, 0], -1)
    if np.any(cross <= tol * lengths * np.roll(lengths, -1)):
        raise GeometryError("vertices must be strictly convex, non-collinear and counter-clockwise")
    # outward normal of a CCW edge (dx, dy) is (dy, -dx)
    A = np.stack([edges[:, 1], -edges[:, 0]], axis=1) / lengths[:, None]
    b = np.einsum("ij,ij->i", A, v)
    return ObstaclePolytope(A, b, v)


def box(xmin, ymin, xmax, ymax):
    return np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]], dtype=float)


def _axes(poly):
    e = np.roll(poly, -1, axis=0) - poly
    return np.stack([e[:, 1], -e[:, 0]], axis=1)


def polygons_intersect(p, q, tol=0.0):
    """Separating-axis test for two convex polygons (touching counts as contact)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    for axes in (_axes(p), _axes(q)):
        pp = p @ axes.T
        qq = q @ axes.T
        if np.any((pp.max(axis=0) < qq.min(axis=0) - tol) | (qq.max(axis=0) < pp.min(axis=0) - tol)):
            return False
    return True


def support(poly, n):
    """max over the polygon of n . y."""
    return float((np.asarray(poly) @ np.asarray(n)).max())


def separation_along(p, q, n):
    """Gap between p and q along unit direction n (positive when separated)."""
    return float((np.asarray(q) @ n).min() - (np.asarray(p) @ n).max())


def _seg_point_dist(a, b, p):
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.hypot(*(a + t * ab - p)))


def polygon_distance(p, q):
    """Euclidean distance between convex polygons (0 when they touch or overlap)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if polygons_intersect(p, q):
        return 0.0
    best = np.inf
    for P, Q in ((p, q), (q, p)):
        for i in range(len(P)):
            a, b = P[i], P[(i + 1) % len(P)]
            for pt in Q:
                best = min(best, _seg_point_dist(a, b, pt))
    return best
