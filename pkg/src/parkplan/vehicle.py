"""Kinematic bicycle model, footprint geometry and the trajectory container."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


def wrap_angle(psi):
    """Map an angle (scalar or array) into (-pi, pi]."""
    # in-range angles pass through untouched so they stay bit-exact
    if np.ndim(psi):
        psi = np.asarray(psi, dtype=float)
        inside = (psi > -math.pi) & (psi <= math.pi)
        return np.where(inside, psi, math.pi - np.mod(math.pi - psi, 2.0 * math.pi))
    psi = float(psi)
    if -math.pi < psi <= math.pi:
        return psi
    return math.pi - (math.pi - psi) % (2.0 * math.pi)


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 2.85
    length: float = 4.5
    width: float = 2.0
    a_max: float = 2.0
    delta_max: float = 0.6
    v_max: float = 3.0
    # distance from the rear edge of the body to the rear axle; None -> length / 4
    rear_offset: float | None = None

    def __post_init__(self):
        for name in ("wheelbase", "length", "width", "a_max", "delta_max", "v_max"):
            if not getattr(self, name) > 0:
                raise DomainError(f"vehicle {name} must be positive")
        if not self.delta_max < math.pi / 2:
            raise DomainError("delta_max must be below pi/2")

    @property
    def axle_offset(self):
        return self.length / 4.0 if self.rear_offset is None else self.rear_offset

    @classmethod
    def from_dict(cls, d):
        keys = {"wheelbase", "length", "width", "a_max", "delta_max", "v_max", "rear_offset"}
        return cls(**{k: float(v) for k, v in d.items() if k in keys and v is not None})

    def to_dict(self):
        return {"wheelbase": self.wheelbase, "length": self.length, "width": self.width,
                "a_max": self.a_max, "delta_max": self.delta_max, "v_max": self.v_max,
                "rear_offset": self.axle_offset}


@dataclass(frozen=True)
class VehicleState:
    """Rear-axle pose, speed and yaw."""
    x: float
    y: float
    v: float
    psi: float

    def as_array(self):
        return np.array([self.x, self.y, self.v, self.psi])

    @classmethod
    def from_array(cls, arr):
        return cls(float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))


@dataclass(frozen=True)
class ControlCommand:
    a: float
    delta: float

    def as_array(self):
        return np.array([self.a, self.delta])


def step(state, u, dt, params):
    """One explicit-Euler step of the bicycle model.

    Speed is clamped to +-v_max after the update and yaw is wrapped to
    (-pi, pi].  The yaw rate uses the speed from before the update.
    """
    x, y, v, psi = (state.x, state.y, state.v, state.psi) if isinstance(state, VehicleState) else state
    a, delta = (u.a, u.delta) if isinstance(u, ControlCommand) else u
    vals = (x, y, v, psi, a, delta, dt)
    if not all(math.isfinite(float(q)) for q in vals):
        raise DomainError("non-finite input to step()")
    if dt <= 0:
        raise DomainError("dt must be positive")
    nx = x + v * math.cos(psi) * dt
    ny = y + v * math.sin(psi) * dt
    npsi = wrap_angle(psi + v * math.tan(delta) / params.wheelbase * dt)
    nv = min(max(v + a * dt, -params.v_max), params.v_max)
    return VehicleState(nx, ny, nv, npsi)


def min_turn_radius(params, delta_max=None):
    """Ackermann radius L / tan(delta_max) of the tightest turn."""
    d = params.delta_max if delta_max is None else delta_max
    if not 0 < d < math.pi / 2:
        raise DomainError("delta_max must lie in (0, pi/2)")
    return params.wheelbase / math.tan(d)


def body_vertices(params):
    """Body rectangle in the rear-axle frame, counter-clockwise from rear-right."""
    rear = -params.axle_offset
    front = params.length - params.axle_offset
    hw = params.width / 2.0
    return np.array([[rear, -hw], [front, -hw], [front, hw], [rear, hw]])


def rotation(psi):
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s], [s, c]])


def footprint(state, params):
    """World-frame body rectangle R(psi) B + t as a (4, 2) CCW vertex array."""
    if isinstance(state, VehicleState):
        x, y, psi = state.x, state.y, state.psi
    else:
        x, y, psi = state[0], state[1], state[-1] if len(state) == 3 else state[3]
    if not all(math.isfinite(float(q)) for q in (x, y, psi)):
        raise DomainError("non-finite state")
    return body_vertices(params) @ rotation(psi).T + np.array([x, y])


@dataclass
class Trajectory:
    """Timed states (n+1, 4) [x, y, v, psi] with controls (n, 2) [a, delta]."""
    states: np.ndarray
    controls: np.ndarray
    t_s: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.controls = np.asarray(self.controls, dtype=float).reshape(-1, 2)
        if self.states.ndim != 2 or self.states.shape[1] != 4:
            raise DomainError("states must be (n+1, 4)")
        if len(self.controls) != len(self.states) - 1:
            raise DomainError("need exactly one control per interval")

    @property
    def n_intervals(self):
        return len(self.controls)

    @property
    def times(self):
        return np.arange(len(self.states)) * self.t_s

    def path_length(self):
        return float(np.hypot(*np.diff(self.states[:, :2], axis=0).T).sum())
