"""Hot numeric kernels.

Each kernel has a numba ``@njit`` loop version and a vectorised numpy
version.  The module-level names (``disc_blocked``, ``inflate``, ...) are
bound to the numba variant unless numba is missing or the environment
variable ``PARKPLAN_NO_NUMBA`` is set to a truthy value, in which case the
numpy variants are used.  Both variants are importable under explicit
``*_numba`` / ``*_numpy`` names so tests and benchmarks can compare them.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("PARKPLAN_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
HAVE_NUMBA = numba is not None
BACKEND = "numba" if (HAVE_NUMBA and not _DISABLED) else "numpy"


def disc_offsets(radius):
    """(dc, dr) integer offsets with dc**2 + dr**2 <= radius**2."""
    r = int(radius)
    if r < 0:
        raise ValueError("radius must be >= 0")
    d = np.arange(-r, r + 1)
    dc, dr = np.meshgrid(d, d, indexing="xy")
    mask = dc * dc + dr * dr <= r * r
    return np.ascontiguousarray(np.stack([dc[mask], dr[mask]], axis=1).astype(np.int64))


# --------------------------------------------------------------------------
# disc scan / eager inflation
# --------------------------------------------------------------------------

def disc_blocked_numpy(occ, col, row, offsets):
    h, w = occ.shape
    cs = col + offsets[:, 0]
    rs = row + offsets[:, 1]
    inside = (cs >= 0) & (cs < w) & (rs >= 0) & (rs < h)
    if not inside.all():
        return True
    return bool(occ[rs, cs].any())


def inflate_numpy(occ, offsets):
    h, w = occ.shape
    r = int(np.abs(offsets).max()) if len(offsets) else 0
    padded = np.ones((h + 2 * r, w + 2 * r), dtype=bool)
    padded[r:r + h, r:r + w] = occ
    blocked = np.zeros((h, w), dtype=bool)
    for dc, dr in offsets:
        blocked |= padded[r + dr:r + dr + h, r + dc:r + dc + w]
    return np.where(blocked, np.int8(-1), np.int8(1)).astype(np.int8)


def _disc_blocked_loop(occ, col, row, offsets):
    h, w = occ.shape
    for j in range(offsets.shape[0]):
        c = col + offsets[j, 0]
        r = row + offsets[j, 1]
        if c < 0 or c >= w or r < 0 or r >= h:
            return True
        if occ[r, c]:
            return True
    return False


def _inflate_loop(occ, offsets):
    # The per-cell disc scan done for every cell up front.
    h, w = occ.shape
    out = np.empty((h, w), dtype=np.int8)
    for r in range(h):
        for c in range(w):
            out[r, c] = 1
            for j in range(offsets.shape[0]):
                cc = c + offsets[j, 0]
                rr = r + offsets[j, 1]
                if cc < 0 or cc >= w or rr < 0 or rr >= h or occ[rr, cc]:
                    out[r, c] = -1
                    break
    return out


# --------------------------------------------------------------------------
# B-spline basis matrix (Cox-de Boor)
# --------------------------------------------------------------------------

def bspline_basis_matrix_numpy(knots, degree, n_ctrl, params):
    knots = np.asarray(knots, dtype=float)
    t = np.asarray(params, dtype=float)[:, None]
    n_spans = len(knots) - 1
    lo = knots[:-1][None, :]
    hi = knots[1:][None, :]
    basis = ((t >= lo) & (t < hi)).astype(float)
    # close the last non-degenerate span so t == knots[-1] is covered
    last = np.nonzero(knots[:-1] < knots[1:])[0]
    if len(last):
        j = last[-1]
        basis[:, j] = np.where(t[:, 0] == knots[j + 1], 1.0, basis[:, j])
    for k in range(1, degree + 1):
        m = n_spans - k
        left_den = knots[k:k + m] - knots[:m]
        right_den = knots[k + 1:k + 1 + m] - knots[1:1 + m]
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.where(left_den > 0, (t - knots[:m]) / left_den, 0.0)
            right = np.where(right_den > 0, (knots[k + 1:k + 1 + m] - t) / right_den, 0.0)
        basis = left * basis[:, :m] + right * basis[:, 1:m + 1]
    return basis[:, :n_ctrl]


def _bspline_basis_matrix_loop(knots, degree, n_ctrl, params):
    n_spans = knots.shape[0] - 1
    last = -1
    for j in range(n_spans):
        if knots[j] < knots[j + 1]:
            last = j
    out = np.zeros((params.shape[0], n_ctrl))
    basis = np.zeros(n_spans)
    for p in range(params.shape[0]):
        t = params[p]
        for j in range(n_spans):
            basis[j] = 1.0 if (knots[j] <= t < knots[j + 1]) else 0.0
        if last >= 0 and t == knots[last + 1]:
            basis[last] = 1.0
        for k in range(1, degree + 1):
            for i in range(n_spans - k):
                ld = knots[i + k] - knots[i]
                rd = knots[i + k + 1] - knots[i + 1]
                val = 0.0
                if ld > 0:
                    val += (t - knots[i]) / ld * basis[i]
                if rd > 0:
                    val += (knots[i + k + 1] - t) / rd * basis[i + 1]
                basis[i] = val
        for i in range(n_ctrl):
            out[p, i] = basis[i]
    return out


# --------------------------------------------------------------------------
# constant-control rollout costs for the tracking controller
# --------------------------------------------------------------------------

def rollout_costs_numpy(state, prev_u, cand, ref, goal, dt, wheelbase, v_max, weights):
    """Cost of holding each candidate control for ``len(ref)`` steps.

    ``cand`` is (C, 2) [a, delta]; ``ref`` is (H, 4) [x, y, v, psi] per
    horizon step; ``goal`` is [x, y, psi, active]; ``weights`` is
    [w_accel, w_steer, w_rate_a, w_rate_d, w_pos, w_speed, w_psi, w_goal_pos, w_goal_psi].
    """
    n = cand.shape[0]
    x = np.full(n, state[0])
    y = np.full(n, state[1])
    v = np.full(n, state[2])
    psi = np.full(n, state[3])
    a = cand[:, 0]
    d = cand[:, 1]
    tan_d = np.tan(d) / wheelbase
    cost = np.zeros(n)
    for j in range(ref.shape[0]):
        x = x + v * np.cos(psi) * dt
        y = y + v * np.sin(psi) * dt
        psi = psi + v * tan_d * dt
        v = np.clip(v + a * dt, -v_max, v_max)
        dpsi = np.arctan2(np.sin(psi - ref[j, 3]), np.cos(psi - ref[j, 3]))
        cost += weights[4] * ((x - ref[j, 0]) ** 2 + (y - ref[j, 1]) ** 2)
        cost += weights[5] * (v - ref[j, 2]) ** 2 + weights[6] * dpsi * dpsi
    cost += ref.shape[0] * (weights[0] * a * a + weights[1] * d * d)
    cost += weights[2] * (a - prev_u[0]) ** 2 + weights[3] * (d - prev_u[1]) ** 2
    if goal[3] > 0:
        dpsi = np.arctan2(np.sin(psi - goal[2]), np.cos(psi - goal[2]))
        cost += goal[3] * (weights[7] * ((x - goal[0]) ** 2 + (y - goal[1]) ** 2)
                           + weights[8] * dpsi * dpsi)
    return cost


def _rollout_costs_loop(state, prev_u, cand, ref, goal, dt, wheelbase, v_max, weights):
    n = cand.shape[0]
    out = np.zeros(n)
    for c in range(n):
        x = state[0]
        y = state[1]
        v = state[2]
        psi = state[3]
        a = cand[c, 0]
        d = cand[c, 1]
        tan_d = np.tan(d) / wheelbase
        cost = 0.0
        for j in range(ref.shape[0]):
            nx = x + v * np.cos(psi) * dt
            ny = y + v * np.sin(psi) * dt
            psi = psi + v * tan_d * dt
            v = min(max(v + a * dt, -v_max), v_max)
            x = nx
            y = ny
            dpsi = np.arctan2(np.sin(psi - ref[j, 3]), np.cos(psi - ref[j, 3]))
            cost += weights[4] * ((x - ref[j, 0]) ** 2 + (y - ref[j, 1]) ** 2)
            cost += weights[5] * (v - ref[j, 2]) ** 2 + weights[6] * dpsi * dpsi
        cost += ref.shape[0] * (weights[0] * a * a + weights[1] * d * d)
        cost += weights[2] * (a - prev_u[0]) ** 2 + weights[3] * (d - prev_u[1]) ** 2
        if goal[3] > 0:
            dpsi = np.arctan2(np.sin(psi - goal[2]), np.cos(psi - goal[2]))
            cost += goal[3] * (weights[7] * ((x - goal[0]) ** 2 + (y - goal[1]) ** 2)
                               + weights[8] * dpsi * dpsi)
        out[c] = cost
    return out


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    disc_blocked_numba = _jit(_disc_blocked_loop)
    inflate_numba = _jit(_inflate_loop)
    bspline_basis_matrix_numba = numba.njit(cache=True)(_bspline_basis_matrix_loop)
    rollout_costs_numba = numba.njit(cache=True)(_rollout_costs_loop)
else:  # pragma: no cover
    disc_blocked_numba = inflate_numba = None
    bspline_basis_matrix_numba = rollout_costs_numba = None


if BACKEND == "numba":
    def disc_blocked(occ, col, row, offsets):
        return bool(disc_blocked_numba(occ, col, row, offsets))

    inflate = inflate_numba

    def bspline_basis_matrix(knots, degree, n_ctrl, params):
        return bspline_basis_matrix_numba(np.asarray(knots, dtype=float), int(degree), int(n_ctrl),
                                          np.asarray(params, dtype=float))

    def rollout_costs(state, prev_u, cand, ref, goal, dt, wheelbase, v_max, weights):
        return rollout_costs_numba(state, prev_u, cand, ref, goal, float(dt), float(wheelbase),
                                   float(v_max), weights)
else:
    disc_blocked = disc_blocked_numpy
    inflate = inflate_numpy
    bspline_basis_matrix = bspline_basis_matrix_numpy
    rollout_costs = rollout_costs_numpy


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    offs = disc_offsets(1)
    for writeable in (True, False):
        # grids hand out read-only views, which numba types separately
        occ = np.zeros((3, 3), dtype=np.bool_)
        occ.setflags(write=writeable)
        disc_blocked(occ, 1, 1, offs)
        inflate(occ, offs)
    bspline_basis_matrix(np.array([0.0, 0, 1, 1]), 1, 2, np.array([0.0, 0.5, 1.0]))
    rollout_costs(np.zeros(4), np.zeros(2), np.zeros((2, 2)), np.zeros((2, 4)),
                  np.zeros(4), 0.1, 2.0, 3.0, np.ones(9))
