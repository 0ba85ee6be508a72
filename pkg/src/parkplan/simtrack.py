"""Closed-loop tracking with an enumerative short-horizon penalty controller.

Every control period the controller scores a small grid of (a, delta)
candidates, each held for the whole prediction horizon, against penalties on
acceleration, steering, control rate, position error to the time-indexed
reference and, near the end, terminal pose error.  The cheapest candidate's
first step is applied through ``vehicle.step``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateInput, TrackingFailure
from .vehicle import Trajectory, VehicleParams, VehicleState, step


@dataclass(frozen=True)
class ControllerConfig:
    dt: float = 0.05             # simulation / control period
    horizon: int = 8             # prediction steps
    pred_dt: float = 0.15        # prediction step length
    n_accel: int = 5
    n_steer: int = 7
    # "absolute": a and delta span their full ranges; "incremental": steps around the last control
    grid: str = "incremental"
    accel_step: float = 0.1      # incremental grid: max change of a per period (m/s^2)
    steer_step: float = 0.03     # incremental grid: max change of delta per period (rad)
    w_accel: float = 0.2
    w_steer: float = 0.05
    w_rate_a: float = 0.5
    w_rate_d: float = 2.0
    w_pos: float = 2.0
    # optional speed / heading tracking terms, off by default
    w_speed: float = 0.0
    w_psi: float = 0.0
    w_goal_pos: float = 10.0
    w_goal_psi: float = 5.0
    v_cruise: float = 2.0
    a_lat: float | None = 0.6    # lateral acceleration bounding the speed profile; None -> no bound
    a_lon: float = 0.8           # longitudinal acceleration used by the speed profile
    goal_tol: float = 0.2
    stop_speed: float = 0.05
    goal_window: float = 2.0     # seconds before the reference ends when the goal penalty engages
    time_extra: float = 5.0      # allowed overrun past the reference end
    max_cte: float = 5.0

    def weights(self):
        return np.array([self.w_accel, self.w_steer, self.w_rate_a, self.w_rate_d, self.w_pos,
                         self.w_speed, self.w_psi, self.w_goal_pos, self.w_goal_psi], dtype=float)


@dataclass
class DriveLog:
    """Rows (t_i, state_i, u_i) with state_{i+1} = step(state_i, u_i)."""
    t: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    final_state: np.ndarray
    dt: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def all_states(self):
        return np.vstack([self.states, self.final_state])


@dataclass(frozen=True)
class ComfortMetrics:
    avg_abs_accel: float
    avg_abs_steer_deg: float
    duration: float
    path_length: float


@dataclass
class Reference:
    """Time-parameterised reference; ``psi`` is unwrapped."""
    t: np.ndarray
    xy: np.ndarray
    v: np.ndarray
    psi: np.ndarray

    def sample(self, times):
        times = np.clip(times, self.t[0], self.t[-1])
        return np.column_stack([np.interp(times, self.t, self.xy[:, 0]),
                                np.interp(times, self.t, self.xy[:, 1]),
                                np.interp(times, self.t, self.v),
                                np.interp(times, self.t, self.psi)])

    @property
    def end_time(self):
        return float(self.t[-1])


def _menger_curvature(p):
    k = np.zeros(len(p))
    if len(p) < 3:
        return k
    a = np.linalg.norm(p[1:-1] - p[:-2], axis=1)
    b = np.linalg.norm(p[2:] - p[1:-1], axis=1)
    c = np.linalg.norm(p[2:] - p[:-2], axis=1)
    cross = np.abs((p[1:-1, 0] - p[:-2, 0]) * (p[2:, 1] - p[:-2, 1])
                   - (p[1:-1, 1] - p[:-2, 1]) * (p[2:, 0] - p[:-2, 0]))
    den = a * b * c
    k[1:-1] = np.where(den > 1e-12, 2.0 * cross / np.maximum(den, 1e-12), 0.0)
    return k


def speed_profile(xy, cfg):
    """Curvature-limited speeds with accel-limited forward/backward passes, rest at both ends."""
    ds = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    vlim = np.full(len(xy), cfg.v_cruise)
    if cfg.a_lat is not None:
        kap = _menger_curvature(xy)
        vlim = np.minimum(vlim, np.sqrt(cfg.a_lat / np.maximum(kap, 1e-9)))
    v = vlim.copy()
    v[0] = 0.0
    for i in range(len(v) - 1):
        v[i + 1] = min(v[i + 1], math.sqrt(v[i] ** 2 + 2 * cfg.a_lon * ds[i]))
    v[-1] = 0.0
    for i in range(len(v) - 2, -1, -1):
        v[i] = min(v[i], math.sqrt(v[i + 1] ** 2 + 2 * cfg.a_lon * ds[i]))
    return v


def _tail_heading(xy, length=2.0):
    """Heading of the chord over roughly the last ``length`` metres."""
    seg = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    acc = np.cumsum(seg[::-1])
    j = min(int(np.searchsorted(acc, length)), len(seg) - 1)
    d = xy[-1] - xy[-2 - j]
    return math.atan2(d[1], d[0])


def path_reference(xy, cfg):
    xy = np.asarray(xy, dtype=float)
    keep = np.concatenate([[True], np.linalg.norm(np.diff(xy, axis=0), axis=1) > 1e-9])
    xy = xy[keep]
    if len(xy) < 2:
        raise DegenerateInput("reference needs two distinct points")
    v = speed_profile(xy, cfg)
    d = np.diff(xy, axis=0)
    ds = np.linalg.norm(d, axis=1)
    dt = 2.0 * ds / np.maximum(v[1:] + v[:-1], 1e-6)
    t = np.concatenate([[0.0], np.cumsum(dt)])
    seg_psi = np.arctan2(d[:, 1], d[:, 0])
    psi = np.unwrap(np.concatenate([seg_psi, [_tail_heading(xy)]]))
    return Reference(t, xy, v, psi)


def trajectory_reference(states, t_s):
    st = np.asarray(states, dtype=float)
    t = np.arange(len(st)) * t_s
    return Reference(t, st[:, :2].copy(), st[:, 2].copy(), np.unwrap(st[:, 3]))


def as_reference(reference, cfg):
    if isinstance(reference, Reference):
        return reference
    if hasattr(reference, "states") and hasattr(reference, "t_s"):
        return trajectory_reference(reference.states, reference.t_s)
    arr = np.asarray(reference, dtype=float)
    if arr.ndim != 2 or len(arr) == 0:
        raise DegenerateInput("empty reference")
    return path_reference(arr[:, :2], cfg)


def cross_track_error(xy, point):
    if len(xy) < 2:
        return float(np.hypot(*(xy[0] - point)))
    a, b = xy[:-1], xy[1:]
    ab = b - a
    den = np.maximum((ab * ab).sum(axis=1), 1e-12)
    t = np.clip(((point - a) * ab).sum(axis=1) / den, 0.0, 1.0)
    d = a + t[:, None] * ab - point
    return float(np.sqrt((d * d).sum(axis=1)).min())


def control_grid(prev, cfg, params):
    """(n_accel * n_steer, 2) candidate controls."""
    if cfg.grid == "absolute":
        a = np.linspace(-params.a_max, params.a_max, cfg.n_accel)
        d = np.linspace(-params.delta_max, params.delta_max, cfg.n_steer)
    elif cfg.grid == "incremental":
        da = np.linspace(-cfg.accel_step, cfg.accel_step, cfg.n_accel)
        dd = np.linspace(-cfg.steer_step, cfg.steer_step, cfg.n_steer)
        a = np.clip(prev[0] + da, -params.a_max, params.a_max)
        d = np.clip(prev[1] + dd, -params.delta_max, params.delta_max)
    else:
        raise ValueError(f"unknown control grid {cfg.grid!r}")
    A, D = np.meshgrid(a, d, indexing="ij")
    return np.column_stack([A.ravel(), D.ravel()])


def track(reference, params=None, cfg=ControllerConfig(), initial_state=None):
    """Drive the vehicle along ``reference`` (path polyline, Trajectory or
    OptimizedTrajectory) and return the DriveLog."""
    params = params or VehicleParams()
    ref = as_reference(reference, cfg)
    if initial_state is None:
        initial_state = VehicleState(ref.xy[0, 0], ref.xy[0, 1], float(ref.v[0]), float(ref.psi[0]))
    x = np.asarray(initial_state.as_array() if hasattr(initial_state, "as_array") else initial_state,
                   dtype=float)
    goal = np.array([ref.xy[-1, 0], ref.xy[-1, 1], ref.psi[-1], 0.0])
    weights = cfg.weights()
    prev = np.zeros(2)
    n_max = int(math.ceil((ref.end_time + cfg.time_extra) / cfg.dt))
    ts, xs, us = [], [], []
    offs = np.arange(1, cfg.horizon + 1) * cfg.pred_dt
    reason = "time_cap"
    for i in range(n_max):
        t = i * cfg.dt
        dist_goal = math.hypot(x[0] - goal[0], x[1] - goal[1])
        if t >= ref.end_time and dist_goal <= cfg.goal_tol and abs(x[2]) <= cfg.stop_speed:
            reason = "goal"
            break
        cte = cross_track_error(ref.xy, x[:2])
        if cte > cfg.max_cte:
            log = _make_log(ts, xs, us, x, cfg.dt, {"reason": "diverged", "cte": cte})
            raise TrackingFailure(f"cross-track error {cte:.2f} m at t={t:.2f} s", log=log)
        horizon_ref = ref.sample(t + offs)
        goal[3] = 1.0 if t + cfg.goal_window >= ref.end_time else 0.0
        cand = control_grid(prev, cfg, params)
        costs = _kernels.rollout_costs(x, prev, cand, horizon_ref, goal, cfg.pred_dt,
                                       params.wheelbase, params.v_max, weights)
        u = cand[int(np.argmin(costs))]
        ts.append(t)
        xs.append(x)
        us.append(u)
        x = step(x, u, cfg.dt, params).as_array()
        prev = u
    err = math.hypot(x[0] - goal[0], x[1] - goal[1])
    return _make_log(ts, xs, us, x, cfg.dt, {"reason": reason, "terminal_error": err})


def _make_log(ts, xs, us, final, dt, meta):
    return DriveLog(np.asarray(ts, dtype=float), np.asarray(xs, dtype=float).reshape(-1, 4),
                    np.asarray(us, dtype=float).reshape(-1, 2), np.asarray(final, dtype=float), dt, meta)


def comfort_metrics(log):
    if len(log) == 0:
        raise DegenerateInput("empty drive log")
    a = np.abs(log.controls[:, 0])
    d = np.abs(log.controls[:, 1])
    pts = log.all_states()[:, :2]
    length = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
    return ComfortMetrics(float(a.mean()), float(np.degrees(d).mean()),
                          float(len(log) * log.dt), length)


def replay(log, params):
    """States obtained by re-applying the logged controls from the first state."""
    x = log.states[0]
    out = [x]
    for u in log.controls:
        x = step(x, u, log.dt, params).as_array()
        out.append(x)
    return np.asarray(out)


def log_to_trajectory(log):
    return Trajectory(log.all_states(), log.controls, log.dt)
