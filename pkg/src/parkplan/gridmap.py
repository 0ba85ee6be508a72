"""Occupancy grids from PGM files and ego-inflated traversability.

Cells are addressed as ``(col, row)``; ``cells[row, col]`` is True where the
map is occupied.  A cell's centre sits at ``(col * resolution, row *
resolution)`` in metres.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BoundsError, IoError, ParseError

PROHIBITED, UNKNOWN, ALLOWED = -1, 0, 1


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    width: int
    height: int
    resolution: float
    cells: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        cells = np.ascontiguousarray(self.cells, dtype=np.bool_)
        if cells.size != self.width * self.height:
            raise ValueError("cells length must equal width * height")
        cells = cells.reshape(self.height, self.width)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_array(cls, occupied, resolution=1.0):
        occupied = np.asarray(occupied, dtype=bool)
        return cls(occupied.shape[1], occupied.shape[0], float(resolution), occupied)

    def in_bounds(self, cell):
        c, r = cell
        return 0 <= c < self.width and 0 <= r < self.height

    def occupied(self, cell):
        c, r = cell
        return bool(self.cells[r, c])

    @property
    def occupancy(self):
        return float(self.cells.mean())

    def to_meters(self, cell):
        return (cell[0] * self.resolution, cell[1] * self.resolution)

    def nearest_cell(self, xy):
        return (int(round(xy[0] / self.resolution)), int(round(xy[1] / self.resolution)))


_HEADER = re.compile(rb"\s*(#[^\n]*\n\s*)*")


def _tokens(data, count, pos):
    out = []
    while len(out) < count:
        m = _HEADER.match(data, pos)
        pos = m.end()
        m = re.compile(rb"\S+").match(data, pos)
        if m is None:
            raise ParseError("truncated PGM header")
        out.append(m.group())
        pos = m.end()
    return out, pos


def load_pgm(data, occupied_threshold=128, resolution=1.0):
    """Parse ASCII (P2) or binary (P5) PGM bytes into an OccupancyGrid.

    A pixel is occupied when its gray level, rescaled to 0..255, is below
    ``occupied_threshold``.
    """
    if isinstance(data, str):
        data = data.encode("ascii")
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"unsupported PGM magic {magic!r}")
    try:
        (w, h, maxval), pos = _tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise ParseError("malformed PGM header") from exc
    if w <= 0 or h <= 0:
        raise ParseError("zero image dimension")
    if not 0 < maxval < 65536:
        raise ParseError("maxval out of range")
    n = w * h
    if magic == b"P2":
        vals = data[pos:].split()
        if len(vals) < n:
            raise ParseError("truncated pixel data")
        try:
            pixels = np.array([int(v) for v in vals[:n]], dtype=np.int64)
        except ValueError as exc:
            raise ParseError("non-integer pixel value") from exc
    else:
        # exactly one whitespace byte separates header and raster
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        raw = data[pos:pos + n * dtype.itemsize]
        if len(raw) < n * dtype.itemsize:
            raise ParseError("truncated pixel data")
        pixels = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    if pixels.max(initial=0) > maxval:
        raise ParseError("pixel exceeds maxval")
    gray = pixels * 255.0 / maxval if maxval != 255 else pixels
    return OccupancyGrid(w, h, float(resolution), (gray < occupied_threshold).reshape(h, w))


def read_pgm(path, occupied_threshold=128, resolution=1.0):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return load_pgm(data, occupied_threshold, resolution)


def to_pgm(grid, binary=True):
    """Serialise a grid as PGM bytes (occupied -> 0, free -> 255)."""
    pix = np.where(grid.cells, 0, 255).astype(np.uint8)
    if binary:
        return b"P5\n%d %d\n255\n" % (grid.width, grid.height) + pix.tobytes()
    rows = "\n".join(" ".join(str(v) for v in row) for row in pix)
    return (f"P2\n{grid.width} {grid.height}\n255\n" + rows + "\n").encode("ascii")


def bounding_radius_cells(vehicle, resolution, margin=0.25):
    """Cells covering the half-diagonal of the body plus a safety margin."""
    half_diag = math.hypot(vehicle.length / 2.0, vehicle.width / 2.0)
    return int(math.ceil((half_diag + margin) / resolution - 1e-12))


class TraversabilityMatrix:
    """Lazily filled tri-state passability table (-1 prohibited, 0 unknown, 1 allowed).

    ``scans`` counts disc scans so memoisation can be checked.  One matrix
    belongs to one search at a time.
    """

    def __init__(self, width, height, radius_cells):
        if radius_cells < 0:
            raise ValueError("radius_cells must be >= 0")
        self.width = int(width)
        self.height = int(height)
        self.radius_cells = int(radius_cells)
        self.states = np.zeros((self.height, self.width), dtype=np.int8)
        self.offsets = _kernels.disc_offsets(self.radius_cells)
        self.scans = 0

    @classmethod
    def for_grid(cls, grid, radius_cells):
        return cls(grid.width, grid.height, radius_cells)

    def blocked_set(self):
        return {(int(c), int(r)) for r, c in zip(*np.nonzero(self.states == PROHIBITED))}

    def __repr__(self):
        known = int(np.count_nonzero(self.states))
        return (f"TraversabilityMatrix({self.width}x{self.height}, r={self.radius_cells}, "
                f"known={known}, scans={self.scans})")


def traversable(grid, matrix, cell):
    """Whether the ego disc centred on ``cell`` is obstacle-free.

    Unknown entries are resolved with one disc scan and memoised; cells
    outside the map count as occupied.
    """
    c, r = cell
    if not (0 <= c < grid.width and 0 <= r < grid.height):
        raise BoundsError(f"cell {cell} outside {grid.width}x{grid.height} grid")
    s = matrix.states[r, c]
    if s:
        return s > 0
    matrix.scans += 1
    blocked = _kernels.disc_blocked(grid.cells, c, r, matrix.offsets)
    matrix.states[r, c] = PROHIBITED if blocked else ALLOWED
    return not blocked


def inflate_eager(grid, radius_cells, method="batch"):
    """Fill the whole matrix up front, one disc scan per cell.

    ``method="batch"`` runs the whole-map kernel; ``"scan"`` visits cells one
    at a time through the same per-cell primitive the lazy matrix uses, which
    is the like-for-like cost model for benchmarking.
    """
    m = TraversabilityMatrix.for_grid(grid, radius_cells)
    if method == "batch":
        m.states[:] = _kernels.inflate(grid.cells, m.offsets)
    elif method == "scan":
        occ, offs, states = grid.cells, m.offsets, m.states
        blocked = _kernels.disc_blocked
        for r in range(grid.height):
            for c in range(grid.width):
                states[r, c] = PROHIBITED if blocked(occ, c, r, offs) else ALLOWED
    else:
        raise ValueError(f"unknown inflation method {method!r}")
    m.scans = grid.width * grid.height
    return m
