"""Procedural parking-lot map bundled with the package."""

from importlib import resources

import numpy as np

from .gridmap import OccupancyGrid, load_pgm

LOT_SIZE = 200
# free driving lanes as (col0, col1, row0, row1), inclusive
LOT_LANES = (
    (91, 100, 10, 189),    # main north-south aisle
    (10, 189, 60, 70),     # lower east-west aisle
    (137, 147, 60, 170),   # east north-south aisle
    (91, 113, 140, 148),   # short upper cross aisle
    (106, 113, 130, 148),  # dead-end stub hanging off the cross aisle
)
# one-cell openings in the thin block between the main aisle and the stub
LOT_DOORS = ((101, 132), (105, 132))


CHAMFER = 6


def _corner_quadrants(v, h):
    """Corners of a vertical/horizontal lane crossing where both lanes continue."""
    vc0, vc1, vr0, vr1 = v
    hc0, hc1, hr0, hr1 = h
    if not (vc0 >= hc0 and vc1 <= hc1 and hr0 >= vr0 and hr1 <= vr1):
        return []
    out = []
    for sc, edge_c, lane_c in ((1, vc1, hc1 > vc1), (-1, vc0, hc0 < vc0)):
        for sr, edge_r, lane_r in ((1, hr1, vr1 > hr1), (-1, hr0, vr0 < hr0)):
            if lane_c and lane_r:
                out.append((sc, edge_c, sr, edge_r))
    return out


def parking_lot_array(size=LOT_SIZE, lanes=LOT_LANES, doors=LOT_DOORS, chamfer=CHAMFER):
    """Parked cars (2 x 5 cells) on a 3 x 6 pitch with single-cell gaps, cut by lanes.

    Each block of cars is closed off from the lanes by a one-cell curb, and
    lane crossings are chamfered so a vehicle can cut the corner.  A few
    single-cell doors let a point robot slip into the gaps between cars,
    which no full-size vehicle can use.
    """
    cols = np.arange(size)[None, :]
    rows = np.arange(size)[:, None]
    occ = (cols % 3 != 0) & (rows % 6 != 0)
    for c0, c1, r0, r1 in lanes:
        occ[max(r0 - 1, 0):r1 + 2, max(c0 - 1, 0):c1 + 2] = True
    for c0, c1, r0, r1 in lanes:
        occ[r0:r1 + 1, c0:c1 + 1] = False
    vert = [ln for ln in lanes if ln[3] - ln[2] > ln[1] - ln[0]]
    horiz = [ln for ln in lanes if ln not in vert]
    for v in vert:
        for h in horiz:
            for sc, ec, sr, er in _corner_quadrants(v, h):
                d = (cols - ec) * sc + (rows - er) * sr
                quad = ((cols - ec) * sc > 0) & ((rows - er) * sr > 0)
                occ[quad & (d <= chamfer)] = False
                occ[quad & (d == chamfer + 1)] = True
    for c, r in doors:
        occ[r, c] = False
    return occ


def parking_lot_map(resolution=1.0):
    return OccupancyGrid.from_array(parking_lot_array(), resolution)


def bundled_map_path(name="lot200.pgm"):
    return resources.files("parkplan") / "data" / "maps" / name


def load_bundled_map(name="lot200.pgm", occupied_threshold=128, resolution=1.0):
    return load_pgm(bundled_map_path(name).read_bytes(), occupied_threshold, resolution)
