"""Parking trajectory optimisation with dualised polytope collision constraints.

Decision variables are the free states x_1..x_N (x_0 and x_{N+1} are the
fixed start and terminal states), the controls u_0..u_N and, for every free
knot k and obstacle m, the dual multipliers lambda_k^m >= 0 (one per
obstacle edge), mu_k^m >= 0 (one per body edge) and a slack s_k^m >= 0.

Constraints:

* dynamics       x_{k+1} = f(x_k, u_k)                       (explicit Euler)
* separation     -g.mu + (A t(x_k) - b).lambda + s >= d_min
* stationarity   G^T mu + R(psi_k)^T A^T lambda = 0
* unit normal    |A^T lambda|_2^2 = 1
* boxes          |v| <= v_max, |a| <= a_max, |delta| <= delta_max

The objective sums the four-part stage cost and kappa * s.  Equalities and
the separation inequality go into an augmented Lagrangian; the boxes and
sign constraints are handled as simple bounds by the inner solver.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import DomainError, Infeasible
from .geometry import ObstaclePolytope, polygons_intersect, polytope_from_vertices  # noqa: F401
from .guess import sample_poses
from .vehicle import VehicleParams, footprint, step, wrap_angle


@dataclass(frozen=True)
class ObjectiveWeights:
    w1: float = 1.0    # state tracking
    w2: float = 0.1    # control magnitude
    w3: float = 0.1    # control rate
    w4: float = 0.5    # first control vs u_start
    kappa: float = 1000.0

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3, self.w4) < 0 or not self.kappa > 0:
            raise ValueError("weights must be >= 0 and kappa > 0")

    def scaled(self, c):
        return ObjectiveWeights(self.w1 * c, self.w2 * c, self.w3 * c, self.w4 * c, self.kappa * c)


@dataclass(frozen=True)
class SolverConfig:
    eps_con: float = 1e-3
    eps_opt: float = 1e-3
    max_outer: int = 50
    max_inner: int = 500
    rho0: float = 10.0
    rho_growth: float = 5.0
    rho_max: float = 1e7
    d_min: float = 0.05
    inner: str = "lbfgsb"   # or "pg" for projected gradient with backtracking


def body_polytope(params):
    """(G, g) of the body rectangle in the rear-axle frame."""
    G = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    hw = params.width / 2.0
    g = np.array([params.length - params.axle_offset, hw, params.axle_offset, hw])
    return G, g


@dataclass
class ParkingProblem:
    x_start: np.ndarray
    x_final: np.ndarray
    N: int
    t_s: float
    obstacles: list
    params: VehicleParams = field(default_factory=VehicleParams)
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    u_start: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.x_start = np.asarray(self.x_start, dtype=float).reshape(4)
        self.x_final = np.asarray(self.x_final, dtype=float).reshape(4)
        self.u_start = np.asarray(self.u_start, dtype=float).reshape(2)
        if self.N < 2:
            raise DomainError("N must be >= 2")
        if not self.t_s > 0:
            raise DomainError("t_s must be positive")
        if abs(self.x_final[2]) > 1e-12:
            raise DomainError("terminal speed must be zero")
        self.obstacles = [o if isinstance(o, ObstaclePolytope) else polytope_from_vertices(o)
                          for o in self.obstacles]

    @property
    def footprint_polytope(self):
        return body_polytope(self.params)


@dataclass
class DualVariables:
    lam: list          # per obstacle, (N, h_m)
    mu: np.ndarray     # (N, M, 4)
    s: np.ndarray      # (N, M)


@dataclass
class OptimizedTrajectory:
    states: np.ndarray     # (N+2, 4), yaw wrapped to (-pi, pi]
    controls: np.ndarray   # (N+1, 2)
    duals: DualVariables
    report: dict
    t_s: float

    @property
    def times(self):
        return np.arange(len(self.states)) * self.t_s


# --------------------------------------------------------------------------
# cost, dynamics and collision expressions (single-knot reference versions)
# --------------------------------------------------------------------------

def stage_cost(x_k, x_ref_k, u_k, u_prev, u_start, k, t_s, weights):
    dx = np.asarray(x_k, float) - np.asarray(x_ref_k, float)
    u = np.asarray(u_k, float)
    du = (u - np.asarray(u_prev, float)) / t_s
    c = weights.w1 * dx @ dx + weights.w2 * u @ u + weights.w3 * du @ du
    if k == 0:
        d0 = u - np.asarray(u_start, float)
        c += weights.w4 * d0 @ d0
    return float(c)


def stage_cost_grad(x_k, x_ref_k, u_k, u_prev, u_start, k, t_s, weights):
    """Gradients of stage_cost w.r.t. (x_k, u_k, u_prev)."""
    dx = np.asarray(x_k, float) - np.asarray(x_ref_k, float)
    u = np.asarray(u_k, float)
    du = (u - np.asarray(u_prev, float)) / t_s
    gx = 2 * weights.w1 * dx
    gu = 2 * weights.w2 * u + 2 * weights.w3 * du / t_s
    gp = -2 * weights.w3 * du / t_s
    if k == 0:
        gu = gu + 2 * weights.w4 * (u - np.asarray(u_start, float))
    return gx, gu, gp


def dynamics(x, u, t_s, wheelbase):
    """Explicit Euler step without yaw wrapping or speed clamping."""
    px, py, v, psi = x
    a, d = u
    return np.array([px + v * math.cos(psi) * t_s, py + v * math.sin(psi) * t_s,
                     v + a * t_s, psi + v * math.tan(d) / wheelbase * t_s])


def collision_expressions(x_k, obstacle, fp, lam, mu, s):
    """Raw constraint values [margin + s, stationarity_x, stationarity_y, |n|^2 - 1]
    and their Jacobian w.r.t. (x, y, psi, lam..., mu..., s)."""
    G, g = fp
    A, b = obstacle.A, obstacle.b
    lam = np.asarray(lam, float)
    mu = np.asarray(mu, float)
    t = np.asarray(x_k[:2], float)
    psi = float(x_k[3])
    c, sn = math.cos(psi), math.sin(psi)
    Rt = np.array([[c, sn], [-sn, c]])
    dRt = np.array([[-sn, c], [-c, -sn]])
    n = A.T @ lam
    vals = np.empty(4)
    vals[0] = -g @ mu + (A @ t - b) @ lam + s
    vals[1:3] = G.T @ mu + Rt @ n
    vals[3] = n @ n - 1.0
    h = len(lam)
    J = np.zeros((4, 3 + h + 4 + 1))
    J[0, 0:2] = n
    J[0, 3:3 + h] = A @ t - b
    J[0, 3 + h:7 + h] = -g
    J[0, -1] = 1.0
    J[1:3, 2] = dRt @ n
    J[1:3, 3:3 + h] = Rt @ A.T
    J[1:3, 3 + h:7 + h] = G.T
    J[3, 3:3 + h] = 2 * A @ n
    return vals, J


def collision_residuals(x_k, obstacle, fp, lam, mu, s, d_min=0.0):
    """Violations of the three dual collision conditions (0 when satisfied)."""
    vals, _ = collision_expressions(x_k, obstacle, fp, lam, mu, s)
    n = obstacle.A.T @ np.asarray(lam, float)
    return {
        "margin": float(vals[0] - s),
        "margin_residual": float(max(0.0, d_min - vals[0])),
        "stationarity_residual": vals[1:3].copy(),
        "normal_norm_residual": float(abs(np.linalg.norm(n) - 1.0)),
    }


# --------------------------------------------------------------------------
# dual initialisation from the separating axis
# --------------------------------------------------------------------------

def _margin_along(fp_world, obstacle, normals):
    # min over body of n.e  -  max over obstacle of n.o
    return (fp_world @ normals.T).min(axis=0) - (obstacle.vertices @ normals.T).max(axis=0)


def duals_for_normal(n, obstacle, psi):
    """lambda >= 0 with A^T lambda = n (support-point pair) and mu >= 0 with
    G^T mu = -R(psi)^T n for the axis-aligned body rectangle."""
    A = obstacle.A
    V = obstacle.vertices
    h = len(A)
    i = int(np.argmax(V @ n))
    # vertex i is shared by edge i-1 and edge i
    pair = np.stack([A[i - 1], A[i]], axis=1)
    coef = np.linalg.lstsq(pair, n, rcond=None)[0]
    lam = np.zeros(h)
    lam[(i - 1) % h] += max(coef[0], 0.0)
    lam[i] += max(coef[1], 0.0)
    c, s = math.cos(psi), math.sin(psi)
    m = np.array([c * n[0] + s * n[1], -s * n[0] + c * n[1]])
    mu = np.array([max(-m[0], 0.0), max(-m[1], 0.0), max(m[0], 0.0), max(m[1], 0.0)])
    return lam, mu


def best_separating_normal(fp_world, obstacle, samples=360, refine=True):
    """Unit normal maximising the separation margin, and that margin."""
    th = np.linspace(-math.pi, math.pi, samples, endpoint=False)
    normals = np.stack([np.cos(th), np.sin(th)], axis=1)
    marg = _margin_along(fp_world, obstacle, normals)
    j = int(np.argmax(marg))
    best_th, best = th[j], marg[j]
    if refine:
        step_th = 2 * math.pi / samples

        def neg(t):
            return -float(_margin_along(fp_world, obstacle, np.array([[math.cos(t), math.sin(t)]]))[0])
        r = minimize_scalar(neg, bounds=(best_th - step_th, best_th + step_th), method="bounded",
                            options={"xatol": 1e-10})
        if -r.fun >= best:
            best_th, best = float(r.x), -float(r.fun)
    return np.array([math.cos(best_th), math.sin(best_th)]), float(best)


def optimal_duals(state, obstacle, params):
    """Duals at one pose maximising the dual margin (equals the true gap when separated)."""
    fp_world = footprint(state, params)
    n, marg = best_separating_normal(fp_world, obstacle)
    lam, mu = duals_for_normal(n, obstacle, float(state[3]))
    return lam, mu, marg


# --------------------------------------------------------------------------
# vectorised augmented Lagrangian
# --------------------------------------------------------------------------

class _Layout:
    def __init__(self, problem):
        self.N = problem.N
        self.M = len(problem.obstacles)
        self.h = [len(o.A) for o in problem.obstacles]
        N, M = self.N, self.M
        sizes = [("X", N * 4), ("U", (N + 1) * 2)]
        for m in range(M):
            sizes.append((f"L{m}", N * self.h[m]))
        sizes += [("MU", N * M * 4), ("S", N * M)]
        self.slices = {}
        off = 0
        for name, n in sizes:
            self.slices[name] = slice(off, off + n)
            off += n
        self.size = off

    def unpack(self, z):
        N, M = self.N, self.M
        X = z[self.slices["X"]].reshape(N, 4)
        U = z[self.slices["U"]].reshape(N + 1, 2)
        L = [z[self.slices[f"L{m}"]].reshape(N, self.h[m]) for m in range(M)]
        MU = z[self.slices["MU"]].reshape(N, M, 4)
        S = z[self.slices["S"]].reshape(N, M)
        return X, U, L, MU, S

    def pack(self, X, U, L, MU, S):
        z = np.empty(self.size)
        z[self.slices["X"]] = np.ravel(X)
        z[self.slices["U"]] = np.ravel(U)
        for m in range(self.M):
            z[self.slices[f"L{m}"]] = np.ravel(L[m])
        z[self.slices["MU"]] = np.ravel(MU)
        z[self.slices["S"]] = np.ravel(S)
        return z


class _Model:
    """Objective and constraint evaluation with analytic gradients."""

    def __init__(self, problem, x_ref, d_min):
        self.p = problem
        self.lay = _Layout(problem)
        self.x_ref = np.asarray(x_ref, float)      # (N+1, 4) for k = 0..N
        self.d_min = d_min
        self.G, self.g = problem.footprint_polytope
        self.L = problem.params.wheelbase
        N, M = self.lay.N, self.lay.M
        self.n_dyn = (N + 1) * 4
        self.n_st = N * M * 2
        self.n_nrm = N * M
        self.n_eq = self.n_dyn + self.n_st + self.n_nrm
        self.n_in = N * M

    def full_states(self, X):
        return np.vstack([self.p.x_start, X, self.p.x_final])

    # objective ------------------------------------------------------------
    def objective(self, z, grad=True):
        p, w = self.p, self.p.weights
        X, U, _, _, S = self.lay.unpack(z)
        N = self.lay.N
        dX = X - self.x_ref[1:]
        d0 = p.x_start - self.x_ref[0]
        Uprev = np.vstack([p.u_start, U[:-1]])
        dU = (U - Uprev) / p.t_s
        e0 = U[0] - p.u_start
        J = (w.w1 * (np.sum(dX * dX) + d0 @ d0) + w.w2 * np.sum(U * U) + w.w3 * np.sum(dU * dU)
             + w.w4 * e0 @ e0 + w.kappa * np.sum(S))
        if not grad:
            return J, None
        gz = np.zeros(self.lay.size)
        gz[self.lay.slices["X"]] = (2 * w.w1 * dX).ravel()
        gU = 2 * w.w2 * U + 2 * w.w3 * dU / p.t_s
        gU[:-1] -= 2 * w.w3 * dU[1:] / p.t_s
        gU[0] += 2 * w.w4 * e0
        gz[self.lay.slices["U"]] = gU.ravel()
        gz[self.lay.slices["S"]] = w.kappa
        del N
        return J, gz

    # constraints -----------------------------------------------------------
    def constraints(self, z):
        """Equality residuals, inequality values (>= 0 wanted) and a closure
        mapping weights on them to a gradient in z."""
        p = self.p
        lay = self.lay
        N, M = lay.N, lay.M
        X, U, Ls, MU, S = lay.unpack(z)
        XF = self.full_states(X)
        xk = XF[:-1]
        ts, L = p.t_s, self.L
        v, psi = xk[:, 2], xk[:, 3]
        a, d = U[:, 0], U[:, 1]
        cps, sps = np.cos(psi), np.sin(psi)
        tand = np.tan(d)
        f = np.stack([xk[:, 0] + v * cps * ts, xk[:, 1] + v * sps * ts, v + a * ts,
                      psi + v * tand / L * ts], axis=1)
        dyn = XF[1:] - f                                  # (N+1, 4)

        Xk = X                                             # free knots 1..N
        t = Xk[:, :2]
        cp, sp = np.cos(Xk[:, 3]), np.sin(Xk[:, 3])
        st = np.empty((N, M, 2))
        nrm = np.empty((N, M))
        marg = np.empty((N, M))
        ns = []
        for m, ob in enumerate(p.obstacles):
            lam = Ls[m]                                    # (N, h)
            n = lam @ ob.A                                 # (N, 2)
            ns.append(n)
            GTmu = MU[:, m, :] @ self.G                    # (N, 2)
            # R^T n = [c n0 + s n1, -s n0 + c n1]
            st[:, m, 0] = GTmu[:, 0] + cp * n[:, 0] + sp * n[:, 1]
            st[:, m, 1] = GTmu[:, 1] - sp * n[:, 0] + cp * n[:, 1]
            nrm[:, m] = np.sum(n * n, axis=1) - 1.0
            marg[:, m] = (-MU[:, m, :] @ self.g + np.sum(n * t, axis=1) - lam @ ob.b
                          + S[:, m] - self.d_min)
        eq = np.concatenate([dyn.ravel(), st.ravel(), nrm.ravel()])
        ineq = marg.ravel()

        def back(w_eq, w_in):
            gz = np.zeros(lay.size)
            wd = w_eq[:self.n_dyn].reshape(N + 1, 4)
            ws = w_eq[self.n_dyn:self.n_dyn + self.n_st].reshape(N, M, 2)
            wn = w_eq[self.n_dyn + self.n_st:].reshape(N, M)
            wi = w_in.reshape(N, M)
            gXF = np.zeros((N + 2, 4))
            gXF[1:] += wd
            # -d f / d x_k
            gXF[:-1, 0] -= wd[:, 0]
            gXF[:-1, 1] -= wd[:, 1]
            gXF[:-1, 2] -= wd[:, 0] * cps * ts + wd[:, 1] * sps * ts + wd[:, 2] + wd[:, 3] * tand / L * ts
            gXF[:-1, 3] -= -wd[:, 0] * v * sps * ts + wd[:, 1] * v * cps * ts + wd[:, 3]
            gU = np.zeros((N + 1, 2))
            gU[:, 0] = -wd[:, 2] * ts
            gU[:, 1] = -wd[:, 3] * v * ts / (L * np.cos(d) ** 2)
            gX = gXF[1:-1]
            gMU = np.zeros((N, M, 4))
            gS = np.zeros((N, M))
            for m, ob in enumerate(p.obstacles):
                n = ns[m]
                w0, w1 = ws[:, m, 0], ws[:, m, 1]
                # stationarity
                gMU[:, m, :] += np.outer(w0, self.G[:, 0]) + np.outer(w1, self.G[:, 1])
                gn = np.stack([w0 * cp - w1 * sp, w0 * sp + w1 * cp], axis=1)
                gX[:, 3] += w0 * (-sp * n[:, 0] + cp * n[:, 1]) + w1 * (-cp * n[:, 0] - sp * n[:, 1])
                # unit normal
                gn += 2 * wn[:, m, None] * n
                # separation
                wim = wi[:, m]
                gX[:, 0] += wim * n[:, 0]
                gX[:, 1] += wim * n[:, 1]
                gn += wim[:, None] * t
                gMU[:, m, :] -= np.outer(wim, self.g)
                gS[:, m] += wim
                glam = gn @ ob.A.T - np.outer(wim, ob.b)
                gz[lay.slices[f"L{m}"]] = glam.ravel()
            gz[lay.slices["X"]] = gX.ravel()
            gz[lay.slices["U"]] = gU.ravel()
            gz[lay.slices["MU"]] = gMU.ravel()
            gz[lay.slices["S"]] = gS.ravel()
            return gz

        return eq, ineq, back

    def augmented(self, z, nu_eq, nu_in, rho):
        J, gJ = self.objective(z)
        eq, ineq, back = self.constraints(z)
        val = J + nu_eq @ eq + 0.5 * rho * eq @ eq
        # PHR term for ineq >= 0
        sh = np.maximum(0.0, nu_in - rho * ineq)
        val += (sh @ sh - nu_in @ nu_in) / (2 * rho)
        g = gJ + back(nu_eq + rho * eq, -sh)
        return val, g

    def violation(self, z):
        eq, ineq, _ = self.constraints(z)
        # report the unit-normal residual as | |n| - 1 |
        n_nrm = eq[self.n_dyn + self.n_st:]
        nrm = np.abs(np.sqrt(np.maximum(n_nrm + 1.0, 0.0)) - 1.0)
        parts = {
            "dynamics": float(np.abs(eq[:self.n_dyn]).max(initial=0.0)),
            "stationarity": float(np.abs(eq[self.n_dyn:self.n_dyn + self.n_st]).max(initial=0.0)),
            "normal_norm": float(nrm.max(initial=0.0)),
            "separation": float(np.maximum(0.0, -ineq).max(initial=0.0)),
        }
        return max(parts.values()), parts


def _bounds(problem, lay):
    pr = problem.params
    lo = np.full(lay.size, -np.inf)
    hi = np.full(lay.size, np.inf)
    N = lay.N
    Xl = np.full((N, 4), -np.inf)
    Xh = np.full((N, 4), np.inf)
    Xl[:, 2], Xh[:, 2] = -pr.v_max, pr.v_max
    lo[lay.slices["X"]], hi[lay.slices["X"]] = Xl.ravel(), Xh.ravel()
    Ul = np.tile([-pr.a_max, -pr.delta_max], (N + 1, 1))
    lo[lay.slices["U"]], hi[lay.slices["U"]] = Ul.ravel(), (-Ul).ravel()
    for name in list(lay.slices)[2:]:
        lo[lay.slices[name]] = 0.0
    return lo, hi


def _project(z, lo, hi):
    return np.minimum(np.maximum(z, lo), hi)


def _inner_pg(fun, z, lo, hi, max_iter, tol):
    """Projected gradient with Barzilai-Borwein steps and Armijo backtracking."""
    f, g = fun(z)
    alpha = 1e-3
    for _ in range(max_iter):
        pg = _project(z - g, lo, hi) - z
        if np.abs(pg).max() <= tol:
            break
        while True:
            zn = _project(z - alpha * g, lo, hi)
            fn, gn = fun(zn)
            if fn <= f + 1e-4 * g @ (zn - z) or alpha < 1e-14:
                break
            alpha *= 0.5
        s, y = zn - z, gn - g
        sy = s @ y
        alpha = float(np.clip((s @ s) / sy, 1e-10, 1e3)) if sy > 0 else 1e-3
        z, f, g = zn, fn, gn
    return z


def initial_iterate(problem, guess_states, guess_controls):
    """Warm start: guess states/controls and separating-axis duals per knot."""
    N, M = problem.N, len(problem.obstacles)
    X = np.array(guess_states[1:N + 1], dtype=float)
    pr = problem.params
    X[:, 2] = np.clip(X[:, 2], -pr.v_max, pr.v_max)
    U = np.array(guess_controls, dtype=float)
    U[:, 0] = np.clip(U[:, 0], -pr.a_max, pr.a_max)
    U[:, 1] = np.clip(U[:, 1], -pr.delta_max, pr.delta_max)
    Ls = [np.zeros((N, len(o.A))) for o in problem.obstacles]
    MU = np.zeros((N, M, 4))
    S = np.zeros((N, M))
    for k in range(N):
        fp = footprint(X[k], pr)
        for m, ob in enumerate(problem.obstacles):
            n, marg = best_separating_normal(fp, ob, samples=180, refine=False)
            lam, mu = duals_for_normal(n, ob, float(X[k, 3]))
            Ls[m][k], MU[k, m] = lam, mu
            S[k, m] = max(0.0, 0.05 - marg)
    return X, U, Ls, MU, S


def solve_parking(problem, initial_guess, config=SolverConfig()):
    """Optimise a parking trajectory from a warm start with N + 2 states.

    Raises Infeasible (carrying the best iterate) when the outer iteration cap
    is reached with constraint violation above ``eps_con``.
    """
    N = problem.N
    gs, gu = initial_guess.states, initial_guess.controls
    if gs.shape != (N + 2, 4) or gu.shape != (N + 1, 2):
        raise DomainError(f"guess must have {N + 2} states and {N + 1} controls, "
                          f"got {gs.shape[0]} and {gu.shape[0]}")
    if abs(initial_guess.t_s - problem.t_s) > 1e-12:
        raise DomainError("guess t_s differs from problem t_s")
    # unwrap the guess yaw onto the branches of the fixed endpoints
    x_ref = gs[:N + 1].copy()
    x_ref[:, 3] = np.unwrap(x_ref[:, 3])
    x_ref[:, 3] += problem.x_start[3] - x_ref[0, 3] + 2 * math.pi * round((x_ref[0, 3] - problem.x_start[3]) / (2 * math.pi))
    xf = problem.x_final.copy()
    end_psi = np.unwrap(np.concatenate([x_ref[:, 3], [xf[3]]]))[-1]
    xf[3] = end_psi
    prob = replace(problem, x_final=xf)
    model = _Model(prob, x_ref, config.d_min)
    lay = model.lay
    z = lay.pack(*initial_iterate(prob, np.vstack([x_ref, xf]), gu))
    lo, hi = _bounds(prob, lay)
    z = _project(z, lo, hi)

    nu_eq = np.zeros(model.n_eq)
    nu_in = np.zeros(model.n_in)
    rho = config.rho0
    viol, parts = model.violation(z)
    history = []
    best = (np.inf, z, parts)
    opt_res = np.inf
    it = 0
    converged = False
    for it in range(1, config.max_outer + 1):
        def fun(zz):
            return model.augmented(zz, nu_eq, nu_in, rho)
        if config.inner == "pg":
            z = _inner_pg(fun, z, lo, hi, config.max_inner, config.eps_opt)
        else:
            r = minimize(fun, z, jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)),
                         options={"maxiter": config.max_inner, "maxcor": 20,
                                  "ftol": 1e-15, "gtol": config.eps_opt * 1e-2})
            z = r.x
        eq, ineq, _ = model.constraints(z)
        viol_new, parts = model.violation(z)
        # first-order residual of the Lagrangian with the updated multipliers
        nu_eq_new = nu_eq + rho * eq
        nu_in_new = np.maximum(0.0, nu_in - rho * ineq)
        _, gJ = model.objective(z)
        gL = gJ + model.constraints(z)[2](nu_eq_new, -nu_in_new)
        opt_res = float(np.abs(_project(z - gL, lo, hi) - z).max())
        J, _ = model.objective(z, grad=False)
        history.append({"iter": it, "objective": float(J), "violation": viol_new, "rho": rho,
                        "opt_residual": opt_res})
        if viol_new < best[0]:
            best = (viol_new, z.copy(), parts)
        nu_eq, nu_in = nu_eq_new, nu_in_new
        if viol_new <= config.eps_con and opt_res <= config.eps_opt:
            converged = True
            viol = viol_new
            break
        if viol_new > 0.25 * viol:
            rho = min(rho * config.rho_growth, config.rho_max)
        viol = viol_new

    if not converged:
        viol, z, parts = best
    out = _assemble(model, z, it, viol, parts, opt_res, history, converged)
    if viol > config.eps_con:
        raise Infeasible(f"constraint violation {viol:.3g} after {it} outer iterations", best=out,
                         violation=viol)
    return out


def _assemble(model, z, iters, viol, parts, opt_res, history, converged):
    X, U, Ls, MU, S = model.lay.unpack(z)
    states = model.full_states(X).copy()
    states[:, 3] = wrap_angle(states[:, 3])
    J, _ = model.objective(z, grad=False)
    report = {"iterations": iters, "violation": float(viol), "violation_parts": parts,
              "objective": float(J), "opt_residual": float(opt_res), "converged": converged,
              "max_slack": float(S.max(initial=0.0)), "history": history}
    return OptimizedTrajectory(states, U.copy(), DualVariables([l.copy() for l in Ls], MU.copy(), S.copy()),
                               report, model.p.t_s)


def objective_value(problem, states, controls, x_ref):
    """Objective (slacks excluded) of a state/control sequence against x_ref."""
    w = problem.weights
    total = 0.0
    for k in range(problem.N + 1):
        u_prev = problem.u_start if k == 0 else controls[k - 1]
        total += stage_cost(states[k], x_ref[k], controls[k], u_prev, problem.u_start, k,
                            problem.t_s, w)
    return total


# --------------------------------------------------------------------------
# independent verification
# --------------------------------------------------------------------------

def verify_trajectory(traj, problem, substeps=4, pos_tol=0.15, psi_tol_deg=3.0, defect_tol=1e-3):
    """Check an optimised trajectory without trusting its duals.

    Collision uses polygon intersection at knots plus interpolants; dynamics
    defects come from vehicle.step; the terminal error is that of an
    open-loop replay of the controls.
    """
    pr = problem.params
    states = np.asarray(traj.states, float)
    controls = np.asarray(traj.controls, float)
    t_s = traj.t_s
    defects = np.zeros((len(controls), 4))
    for k in range(len(controls)):
        nxt = step(states[k], controls[k], t_s, pr)
        d = states[k + 1] - nxt.as_array()
        d[3] = wrap_angle(d[3])
        defects[k] = d
    max_defect = float(np.abs(defects).max(initial=0.0))
    worst = int(np.abs(defects).max(axis=1).argmax()) if len(defects) else None

    from .vehicle import Trajectory
    tr = Trajectory(np.column_stack([states[:, :2], states[:, 2], np.unwrap(states[:, 3])]), controls, t_s)
    collision_at = None
    for pose, k in sample_poses(tr, substeps):
        fp = footprint(pose, pr)
        if any(polygons_intersect(fp, ob.vertices) for ob in problem.obstacles):
            collision_at = k
            break

    x = states[0].copy()
    for k in range(len(controls)):
        x = step(x, controls[k], t_s, pr).as_array()
    pos_err = float(math.hypot(x[0] - problem.x_final[0], x[1] - problem.x_final[1]))
    psi_err = float(abs(wrap_angle(x[3] - problem.x_final[3])))
    end_state_err = float(math.hypot(*(states[-1, :2] - problem.x_final[:2])))

    bounds_ok = bool(np.all(np.abs(states[:, 2]) <= pr.v_max + 1e-6)
                     and np.all(np.abs(controls[:, 0]) <= pr.a_max + 1e-6)
                     and np.all(np.abs(controls[:, 1]) <= pr.delta_max + 1e-6))
    terminal_ok = pos_err <= pos_tol and math.degrees(psi_err) <= psi_tol_deg and end_state_err <= pos_tol
    return {
        "collision_free": collision_at is None,
        "first_collision": collision_at,
        "max_dynamics_defect": max_defect,
        "worst_defect_knot": worst,
        "dynamics_ok": max_defect <= defect_tol,
        "terminal_error": pos_err,
        "terminal_heading_error_deg": math.degrees(psi_err),
        "terminal_ok": terminal_ok,
        "bounds_ok": bounds_ok,
    }


def dual_margins(traj, problem):
    """(N, M) dual separation margins -g.mu + (A t - b).lambda at the free knots, slack excluded."""
    fp = problem.footprint_polytope
    d = traj.duals
    N, M = d.s.shape
    out = np.zeros((N, M))
    for k in range(N):
        for m, ob in enumerate(problem.obstacles):
            r = collision_residuals(traj.states[k + 1], ob, fp, d.lam[m][k], d.mu[k, m], d.s[k, m])
            out[k, m] = r["margin"]
    return out


def dual_norm_residual(traj, problem):
    """max_k,m | |A^T lambda| - 1 | over the free knots."""
    d = traj.duals
    worst = 0.0
    for m, ob in enumerate(problem.obstacles):
        n = d.lam[m] @ ob.A
        worst = max(worst, float(np.abs(np.linalg.norm(n, axis=1) - 1.0).max(initial=0.0)))
    return worst
