"""Regenerate the bundled 200 x 200 parking-lot PGM."""

import argparse
from pathlib import Path

from parkplan.gridmap import to_pgm
from parkplan.maps import parking_lot_map

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "parkplan" / "data" / "maps" / "lot200.pgm"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    grid = parking_lot_map()
    args.out.write_bytes(to_pgm(grid))
    print(f"wrote {args.out} ({grid.width}x{grid.height}, occupancy {grid.occupancy:.1%})")


if __name__ == "__main__":
    main()
