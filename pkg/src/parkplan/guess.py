"""Arc-line-arc parking paths: the optimizer's warm start and the geometric baseline."""

import math

import numpy as np

from .errors import GeometryError
from .geometry import polygons_intersect
from .vehicle import Trajectory, VehicleParams, footprint, wrap_angle

TWO_PI = 2.0 * math.pi
# a single parking manoeuvre never needs more than a half turn on one arc
MAX_ARC = math.pi + 1e-9


def _mod2pi(a):
    a = math.fmod(a, TWO_PI)
    if a < 0:
        a += TWO_PI
    if a > TWO_PI - 1e-9:
        a = 0.0
    return a


def _centers(x, y, th, R):
    s, c = math.sin(th), math.cos(th)
    return (x - R * s, y + R * c), (x + R * s, y - R * c)


def _csc_words(start, goal, R):
    """All feasible CSC words as (word, (arc1_angle, straight_len, arc2_angle))."""
    x0, y0, t0 = start
    x1, y1, t1 = goal
    l0, r0 = _centers(x0, y0, t0, R)
    l1, r1 = _centers(x1, y1, t1, R)
    out = []

    dx, dy = l1[0] - l0[0], l1[1] - l0[1]
    phi = math.atan2(dy, dx) if math.hypot(dx, dy) > 1e-12 else t0
    out.append(("LSL", (_mod2pi(phi - t0), math.hypot(dx, dy), _mod2pi(t1 - phi))))

    dx, dy = r1[0] - r0[0], r1[1] - r0[1]
    phi = math.atan2(dy, dx) if math.hypot(dx, dy) > 1e-12 else t0
    out.append(("RSR", (_mod2pi(t0 - phi), math.hypot(dx, dy), _mod2pi(phi - t1))))

    dx, dy = r1[0] - l0[0], r1[1] - l0[1]
    d2 = dx * dx + dy * dy - 4 * R * R
    if d2 >= -1e-12:
        s = math.sqrt(max(d2, 0.0))
        phi = math.atan2(dy, dx) + math.atan2(2 * R, s)
        out.append(("LSR", (_mod2pi(phi - t0), s, _mod2pi(phi - t1))))

    dx, dy = l1[0] - r0[0], l1[1] - r0[1]
    d2 = dx * dx + dy * dy - 4 * R * R
    if d2 >= -1e-12:
        s = math.sqrt(max(d2, 0.0))
        phi = math.atan2(dy, dx) - math.atan2(2 * R, s)
        out.append(("RSL", (_mod2pi(t0 - phi), s, _mod2pi(t1 - phi))))
    return out


def _segments(word, lens, R):
    """(curvature of tangent heading per metre, length) for each piece."""
    a1, s, a2 = lens
    kap = {"L": 1.0 / R, "R": -1.0 / R, "S": 0.0}
    return [(kap[word[0]], a1 * R), (0.0, s), (kap[word[2]], a2 * R)]


def best_csc(start_pose, goal_pose, R, gear="auto"):
    """Shortest admissible CSC connection; returns (segments, gear, length)."""
    gears = {"auto": (1, -1), "forward": (1,), "reverse": (-1,)}[gear]
    best = None
    for g in gears:
        off = 0.0 if g > 0 else math.pi
        s = (start_pose[0], start_pose[1], start_pose[2] + off)
        e = (goal_pose[0], goal_pose[1], goal_pose[2] + off)
        for word, lens in _csc_words(s, e, R):
            if lens[0] > MAX_ARC or lens[2] > MAX_ARC:
                continue
            total = R * (lens[0] + lens[2]) + lens[1]
            if best is None or total < best[2] - 1e-12:
                best = (_segments(word, lens, R), g, total)
    if best is None:
        raise GeometryError(f"no arc-line-arc connection with radius {R:.3f} m")
    return best


def _pose_along(start, segments, s):
    """Tangent pose after travelling arc length ``s`` from ``start``."""
    x, y, th = start
    for kap, length in segments:
        if length <= 0.0:
            continue
        d = min(s, length)
        if abs(kap) < 1e-15:
            x += d * math.cos(th)
            y += d * math.sin(th)
        else:
            nth = th + kap * d
            x += (math.sin(nth) - math.sin(th)) / kap
            y -= (math.cos(nth) - math.cos(th)) / kap
            th = nth
        s -= d
        if s <= 0.0:
            break
    return x, y, th


def _curvature_at(segments, s):
    acc = 0.0
    for kap, length in segments:
        if length <= 0.0:
            continue
        if s < acc + length:
            return kap
        acc += length
    return 0.0


def arc_line_guess(start_pose, goal_pose, R, N, t_s, params=None, gear="auto"):
    """Arc-(line)-arc path resampled to N + 1 states uniformly in arc length.

    Speeds are arc length per knot over ``t_s`` (negative in reverse, the
    last state at rest); steering is atan(L / +-R) on arcs and 0 on lines.
    Poses are (x, y, psi) of the rear axle.
    """
    params = params or VehicleParams()
    if N < 2:
        raise ValueError("N must be >= 2")
    if R <= 0:
        raise GeometryError("radius must be positive")
    start_pose = tuple(float(q) for q in start_pose)
    goal_pose = tuple(float(q) for q in goal_pose)
    same = (math.hypot(goal_pose[0] - start_pose[0], goal_pose[1] - start_pose[1]) < 1e-12
            and abs(wrap_angle(goal_pose[2] - start_pose[2])) < 1e-12)
    if same:
        states = np.tile([start_pose[0], start_pose[1], 0.0, start_pose[2]], (N + 1, 1))
        return Trajectory(states, np.zeros((N, 2)), t_s,
                          meta={"length": 0.0, "gear": 1, "radius": R, "segments": []})
    segs, g, total = best_csc(start_pose, goal_pose, R, gear)
    off = 0.0 if g > 0 else math.pi
    tangent_start = (start_pose[0], start_pose[1], start_pose[2] + off)
    ds = total / N
    states = np.zeros((N + 1, 4))
    for k in range(N + 1):
        x, y, th = _pose_along(tangent_start, segs, k * ds)
        states[k] = (x, y, g * ds / t_s, th - off)
    states[-1, :2] = goal_pose[:2]
    # keep yaw continuous but land exactly on the requested goal heading
    states[-1, 3] = goal_pose[2] + TWO_PI * round((states[-1, 3] - goal_pose[2]) / TWO_PI)
    states[-1, 2] = 0.0
    controls = np.zeros((N, 2))
    for k in range(N):
        kap = _curvature_at(segs, (k + 0.5) * ds)
        controls[k, 1] = g * math.atan(params.wheelbase * kap)
        controls[k, 0] = (states[k + 1, 2] - states[k, 2]) / t_s
    return Trajectory(states, controls, t_s,
                      meta={"length": total, "gear": g, "radius": R, "segments": segs})


def arc_line_guess_retry(start_pose, goal_pose, R, N, t_s, params, gear="auto", shrink=0.9):
    """Retry with shrinking radius down to the Ackermann minimum."""
    from .vehicle import min_turn_radius
    r_min = min_turn_radius(params)
    r = max(R, r_min)
    while True:
        try:
            return arc_line_guess(start_pose, goal_pose, r, N, t_s, params, gear)
        except GeometryError:
            if r <= r_min * (1 + 1e-12):
                raise
            r = max(r * shrink, r_min)


def sample_poses(traj, substeps=4):
    """Knot poses plus ``substeps`` linear interpolants per interval; (pose, knot index)."""
    st = traj.states
    out = []
    for k in range(len(st) - 1):
        a, b = st[k], st[k + 1]
        for j in range(substeps + 1):
            f = j / (substeps + 1)
            out.append(((1 - f) * a + f * b, k))
    out.append((st[-1], len(st) - 1))
    return out


def validate_guess(traj, obstacles, params, substeps=4):
    """Footprint-vs-polygon collision scan over knots and interpolants."""
    for pose, k in sample_poses(traj, substeps):
        fp = footprint(pose, params)
        for ob in obstacles:
            if polygons_intersect(fp, ob.vertices):
                return {"collision_free": False, "first_violation": k}
    return {"collision_free": True, "first_violation": None}


def seed_pose(path_xy, n_tail=10):
    """Pose at the head of the last ``n_tail`` path points, heading along the path."""
    p = np.asarray(path_xy, dtype=float)
    i = max(0, len(p) - n_tail)
    j = min(i + 1, len(p) - 1)
    if j == i:
        return float(p[i, 0]), float(p[i, 1]), 0.0
    d = p[j] - p[i]
    return float(p[i, 0]), float(p[i, 1]), math.atan2(d[1], d[0])
