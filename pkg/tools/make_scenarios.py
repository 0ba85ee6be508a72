"""Regenerate the bundled scenario JSON fixtures.

Danger analogs share one layout: a lane along +x above a row of spots at
y < 0.  Vertical spots are entered in reverse ending nose-up (psi = pi/2);
parallel spots are entered in reverse ending along +x.  Obstacles are
axis-aligned boxes given as CCW vertex lists in metres.
"""

import argparse
import json
import math
from pathlib import Path

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "parkplan" / "data" / "scenarios"

VEHICLE = {"wheelbase": 2.85, "length": 4.5, "width": 2.0, "a_max": 2.0,
           "delta_max": 0.6, "v_max": 3.0, "rear_offset": 1.125}
WEIGHTS = {"w1": 1.0, "w2": 0.1, "w3": 0.1, "w4": 0.5, "kappa": 1000.0}
HORIZON = {"N": 40, "t_s": 0.25}
GUESS = {"radius": 5.0, "gear": "reverse"}

VERTICAL_SPOT = [0.0, -4.2, math.pi / 2]
PARALLEL_SPOT = [0.0, -1.5, 0.0]


def box(xmin, ymin, xmax, ymax):
    return [[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]]


def far_side(y):
    """Kerb / parked row across the lane."""
    return box(-15.0, y, 15.0, y + 2.0)


def kerb():
    return box(-10.0, -3.6, 12.0, -2.8)


DANGER = {
    "A": ("traffic-side vertical spot, neighbours well clear",
          VERTICAL_SPOT, [5.5, 2.5, 0.0],
          [box(-5.5, -5.5, -1.75, -0.5), box(3.2, -5.5, 6.5, -0.5), far_side(7.0)]),
    "B": ("ideal parallel spot, long gap between parked cars",
          PARALLEL_SPOT, [9.0, 1.8, 0.0],
          [box(-6.5, -2.6, -3.5, -0.5), box(6.85, -2.6, 9.5, -0.5), kerb(), far_side(6.5)]),
    "C": ("vertical spot with the entry-side neighbour parked close",
          VERTICAL_SPOT, [5.5, 2.5, 0.0],
          [box(-5.5, -5.5, -2.75, -0.5), box(1.3, -5.5, 5.0, -0.5), far_side(7.0)]),
    "D": ("corner spot barely wider than the car, tight on both sides",
          VERTICAL_SPOT, [5.5, 2.5, 0.0],
          [box(-5.0, -5.5, -1.3, -0.5), box(1.3, -5.5, 5.0, -0.5), far_side(7.0)]),
    "E": ("narrow lane with flanking parked cars",
          VERTICAL_SPOT, [5.5, 2.0, 0.0],
          [box(-5.5, -5.5, -1.6, -0.5), box(1.6, -5.5, 5.5, -0.5), far_side(4.6)]),
    "F": ("short parallel spot with traffic parked front and rear",
          PARALLEL_SPOT, [9.0, 1.8, 0.0],
          [box(-5.5, -2.6, -2.0, -0.5), box(5.4, -2.6, 9.5, -0.5), kerb(), far_side(6.5)]),
}

MAP_SCENARIOS = {
    "vertical": ("vertical-parking approach through the lot", [95, 85], [109, 133]),
    "parallel": ("parallel-parking approach along the east aisle", [110, 65], [142, 110]),
    "unreachable": ("goal cell inside a parked car", [95, 85], [109, 117]),
}


def danger_scenarios():
    out = {}
    for key, (desc, spot, start, obstacles) in DANGER.items():
        out[f"danger_{key}"] = {
            "id": f"danger_{key}", "kind": "danger", "description": desc,
            "vehicle": VEHICLE, "start_pose": start, "spot_pose": spot,
            "obstacles": obstacles, "weights": WEIGHTS, "horizon": HORIZON, "guess": GUESS,
        }
    return out


def map_scenarios():
    out = {}
    for key, (desc, start, goal) in MAP_SCENARIOS.items():
        out[key] = {
            "id": key, "kind": key, "description": desc, "map": "lot200.pgm",
            "resolution": 1.0, "occupied_threshold": 128, "start": start, "goal": goal,
            "vehicle": VEHICLE,
        }
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, doc in {**map_scenarios(), **danger_scenarios()}.items():
        path = args.out / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
