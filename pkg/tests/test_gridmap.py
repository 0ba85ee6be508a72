import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from parkplan.errors import BoundsError, ParseError, IoError
from parkplan.gridmap import (ALLOWED, PROHIBITED, OccupancyGrid, TraversabilityMatrix,
                              bounding_radius_cells, inflate_eager, load_pgm, read_pgm, to_pgm,
                              traversable)
from parkplan.maps import bundled_map_path, load_bundled_map
from parkplan.vehicle import VehicleParams

import oracles

grids = arrays(np.bool_, st.tuples(st.integers(1, 12), st.integers(1, 12)),
               elements=st.booleans())


def test_p2_example():
    g = load_pgm(b"P2\n2 2\n255\n0 255\n255 0\n", 128)
    assert (g.width, g.height) == (2, 2)
    assert g.occupied((0, 0)) and g.occupied((1, 1))
    assert not g.occupied((1, 0)) and not g.occupied((0, 1))


def test_p5_and_comments_and_maxval():
    g = load_pgm(b"P5\n# made by hand\n3 1\n255\n" + bytes([0, 127, 128]))
    assert g.cells.tolist() == [[True, True, False]]
    g = load_pgm(b"P2 2 1 15 7 8", 128)     # rescaled: 7 -> 119, 8 -> 136
    assert g.cells.tolist() == [[True, False]]


@pytest.mark.parametrize("data", [b"P3\n1 1\n255\n0", b"P2\n2\n", b"P2\n0 2\n255\n",
                                  b"P5\n2 2\n255\n\x00", b"P2\n2 1\n255\n0 x", b"P2\n1 1\n10\n11"])
def test_parse_errors(data):
    with pytest.raises(ParseError):
        load_pgm(data)


def test_read_pgm_missing_file(tmp_path):
    with pytest.raises(IoError):
        read_pgm(tmp_path / "nope.pgm")


@given(grids, st.booleans())
def test_pgm_round_trip(occ, binary):
    g = OccupancyGrid.from_array(occ)
    assert np.array_equal(load_pgm(to_pgm(g, binary)).cells, occ)


def test_bundled_map():
    g = load_bundled_map()
    assert (g.width, g.height) == (200, 200)
    assert g.occupancy >= 0.40
    assert np.array_equal(read_pgm(bundled_map_path()).cells, g.cells)


def test_grid_invariants():
    with pytest.raises(ValueError):
        OccupancyGrid(0, 1, 1.0, np.zeros(0, bool))
    with pytest.raises(ValueError):
        OccupancyGrid(2, 2, 0.0, np.zeros(4, bool))
    with pytest.raises(ValueError):
        OccupancyGrid(2, 2, 1.0, np.zeros(3, bool))


def test_bounding_radius_examples():
    point = SimpleNamespace(length=0.0, width=0.0)
    assert bounding_radius_cells(point, 1.0, margin=0.0) == 0
    car = SimpleNamespace(length=4.0, width=2.0)
    assert bounding_radius_cells(car, 1.0, margin=0.0) == math.ceil(math.sqrt(5))
    assert bounding_radius_cells(car, 1.0, margin=0.26) == 3
    assert bounding_radius_cells(VehicleParams(), 1.0) == 3


def test_traversable_examples():
    g = OccupancyGrid.from_array(np.zeros((5, 5), bool))
    m = TraversabilityMatrix.for_grid(g, 1)
    assert traversable(g, m, (2, 2)) and m.states[2, 2] == ALLOWED
    occ = np.zeros((3, 3), bool)
    occ[1, 1] = True
    # pad so the off-map rule does not decide these cells
    big = np.zeros((7, 7), bool)
    big[2:5, 2:5] = occ
    g = OccupancyGrid.from_array(big)
    m = TraversabilityMatrix.for_grid(g, 1)
    assert not traversable(g, m, (3, 2))      # (1, 0) of the 3 x 3: distance 1
    assert traversable(g, m, (2, 2))          # (0, 0): distance sqrt 2
    with pytest.raises(BoundsError):
        traversable(g, m, (7, 0))


def test_off_map_counts_as_occupied():
    g = OccupancyGrid.from_array(np.zeros((5, 5), bool))
    m = TraversabilityMatrix.for_grid(g, 1)
    assert not traversable(g, m, (0, 2))
    assert traversable(g, m, (1, 1))


def test_memoisation_counts_scans():
    g = OccupancyGrid.from_array(np.zeros((6, 6), bool))
    m = TraversabilityMatrix.for_grid(g, 1)
    first = traversable(g, m, (3, 3))
    assert m.scans == 1
    assert traversable(g, m, (3, 3)) == first
    assert m.scans == 1


def test_eager_examples():
    g = OccupancyGrid.from_array(np.zeros((6, 6), bool))
    assert (inflate_eager(g, 0).states == ALLOWED).all()
    g = OccupancyGrid.from_array(np.ones((4, 4), bool))
    assert (inflate_eager(g, 0).states == PROHIBITED).all()


@given(grids, st.integers(0, 3))
def test_lazy_equals_eager(occ, radius):
    g = OccupancyGrid.from_array(occ)
    m = TraversabilityMatrix.for_grid(g, radius)
    seen = []
    for r in range(g.height):
        for c in range(g.width):
            traversable(g, m, (c, r))
            seen.append(m.states.copy())
    want = oracles.eager_matrix(occ, radius)
    assert np.array_equal(m.states, want)
    for method in ("batch", "scan"):
        assert np.array_equal(inflate_eager(g, radius, method).states, want)
    # entries only move away from unknown, never between -1 and 1
    for a, b in zip(seen, seen[1:]):
        assert np.all((a == b) | (a == 0))


@given(grids, st.integers(0, 2), st.integers(0, 2))
def test_radius_monotone(occ, r, extra):
    g = OccupancyGrid.from_array(occ)
    small = inflate_eager(g, r).states == PROHIBITED
    large = inflate_eager(g, r + extra).states == PROHIBITED
    assert np.all(~small | large)


@given(grids)
def test_radius_zero_is_raw(occ):
    g = OccupancyGrid.from_array(occ)
    assert np.array_equal(inflate_eager(g, 0).states == PROHIBITED, occ)
