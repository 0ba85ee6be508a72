import numpy as np
import pytest
from hypothesis import given, strategies as st

from parkplan.errors import GeometryError
from parkplan.geometry import (box, polygon_area, polygon_distance, polygons_intersect,
                               polytope_from_vertices)

import oracles

coord = st.floats(-5, 5)


def test_unit_square():
    ob = polytope_from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])
    rows = {(tuple(np.round(a, 12)), round(b, 12)) for a, b in zip(ob.A, ob.b)}
    assert rows == {((0.0, -1.0), 0.0), ((1.0, 0.0), 1.0), ((0.0, 1.0), 1.0), ((-1.0, 0.0), 0.0)}


def test_triangle_centroid_interior():
    ob = polytope_from_vertices([(0, 0), (4, 0), (1, 3)])
    assert len(ob.A) == 3
    assert np.all(ob.A @ ob.centroid < ob.b)
    assert np.allclose(np.linalg.norm(ob.A, axis=1), 1.0)


@pytest.mark.parametrize("verts", [[(0, 0), (1, 0)], [(0, 0), (1, 0), (2, 0)],
                                   [(0, 0), (0, 1), (1, 1), (1, 0)],
                                   [(0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)],
                                   [(0, 0), (1, 0), (1, 0), (0, 1)]])
def test_bad_polygons(verts):
    with pytest.raises(GeometryError):
        polytope_from_vertices(verts)


def test_random_hulls_match_ray_casting(rng):
    for _ in range(10):
        hull = oracles.convex_hull(rng.normal(size=(10, 2)))
        ob = polytope_from_vertices(hull)
        assert np.all(ob.A @ np.asarray(hull).T <= ob.b[:, None] + 1e-9)
        pts = rng.uniform(-3, 3, size=(1000, 2))
        inside = ob.contains(pts)
        want = np.array([oracles.point_in_polygon(p, hull) for p in pts])
        assert np.array_equal(inside, want)


@given(coord, coord, st.floats(0.1, 3), st.floats(0.1, 3), coord, coord, st.floats(0.1, 3),
       st.floats(0.1, 3), st.floats(-3.2, 3.2))
def test_intersection_matches_oracle(x0, y0, w0, h0, x1, y1, w1, h1, th):
    a = box(x0, y0, x0 + w0, y0 + h0)
    c, s = np.cos(th), np.sin(th)
    b = box(0, 0, w1, h1) @ np.array([[c, s], [-s, c]]) + (x1, y1)
    assert polygons_intersect(a, b) == oracles.polygons_collide(a, b)


@given(coord, coord, coord, coord)
def test_axis_aligned_distance(x0, y0, x1, y1):
    a = (x0, y0, x0 + 1.5, y0 + 0.7)
    b = (x1, y1, x1 + 0.4, y1 + 2.0)
    assert polygon_distance(box(*a), box(*b)) == pytest.approx(oracles.rect_gap(a, b), abs=1e-9)


def test_area_sign():
    assert polygon_area(box(0, 0, 2, 3)) == 6
    assert polygon_area(box(0, 0, 2, 3)[::-1]) == -6
