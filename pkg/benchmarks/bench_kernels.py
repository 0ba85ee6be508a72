"""Time the numba and numpy kernel backends on representative inputs."""

import argparse
import timeit

import numpy as np

from parkplan import _kernels as K
from parkplan.maps import parking_lot_array


def cases(rng):
    occ = parking_lot_array()
    offs = K.disc_offsets(3)
    cells = rng.integers(0, 200, size=(2000, 2))
    knots = np.concatenate([np.zeros(3), np.linspace(0, 1, 38), np.ones(3)])
    ts = np.linspace(0, 1, 400)
    state = np.array([0.0, 0.0, 1.0, 0.2])
    cand = rng.uniform(-0.5, 0.5, size=(35, 2))
    ref = rng.normal(size=(8, 4))
    w = np.ones(9)
    goal = np.array([5.0, 0.0, 0.0, 1.0])
    return {
        "disc_blocked x2000": lambda f: [f(occ, int(c), int(r), offs) for c, r in cells],
        "inflate 200x200": lambda f: f(occ, offs),
        "bspline_basis_matrix": lambda f: f(knots, 3, 40, ts),
        "rollout_costs": lambda f: f(state, np.zeros(2), cand, ref, goal, 0.15, 2.85, 3.0, w),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=3)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba not installed; nothing to compare")
    K.warmup()
    names = {"disc_blocked x2000": "disc_blocked", "inflate 200x200": "inflate",
             "bspline_basis_matrix": "bspline_basis_matrix", "rollout_costs": "rollout_costs"}
    print(f"{'kernel':<24}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for label, call in cases(np.random.default_rng(0)).items():
        base = names[label]
        times = {}
        for backend in ("numpy", "numba"):
            f = getattr(K, f"{base}_{backend}")
            call(f)
            t = min(timeit.repeat(lambda: call(f), repeat=args.repeat, number=args.number))
            times[backend] = t / args.number * 1e3
        print(f"{label:<24}{times['numpy']:>12.3f}{times['numba']:>12.3f}"
              f"{times['numpy'] / times['numba']:>9.1f}x")


if __name__ == "__main__":
    main()
