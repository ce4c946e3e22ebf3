"""Trajectory controller: setpoint lookup, PID with feedforward, gradient synthesis.

The PID terms follow the textbook-unusual sign convention used throughout
this package: every term is the *negative* of a gain times the velocity
error, and the integral accumulates ``-error * delta * ki``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMoment, InvalidPath, InvalidValue
from .magnetics import GradientCommand, clamp_gradient

CONTROLLER_MODES = ("paper", "dimensional")
ZERO3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ControllerGains:
    kp: float = 2.0
    ki: float = 1.0
    kd: float = 0.01
    kr: float = 0.7
    delta: float = 0.100

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise InvalidValue("PID gains must be >= 0")
        if not 0.0 <= self.kr <= 1.0:
            raise InvalidValue(f"kr must lie in [0, 1], got {self.kr}")
        if not self.delta > 0:
            raise InvalidValue(f"delta must be > 0, got {self.delta}")


@dataclass(frozen=True)
class ControllerState:
    PI: tuple[float, float, float] = ZERO3
    error_p: tuple[float, float, float] = ZERO3
    initialized: bool = False


@dataclass(frozen=True)
class Setpoint:
    position: np.ndarray
    velocity: np.ndarray
    index: int


def nearest_index(positions: np.ndarray, P_c, last_index: int, window: int = 200) -> int:
    """Index of the closest sample in ``[last_index, last_index + window]``.

    Ties go to the lower index.
    """
    n = len(positions)
    if n == 0:
        raise InvalidPath("path has no samples")
    if not 0 <= last_index < n:
        raise InvalidValue(f"last_index {last_index} outside [0, {n})")
    stop = min(n, last_index + window + 1)
    seg = positions[last_index:stop]
    diff = seg - P_c
    d2 = np.einsum("ij,ij->i", diff, diff)
    return last_index + int(np.argmin(d2))


class NearestSearch:
    """Windowed nearest-sample search bound to one path, for the inner loop.

    Expands |x - p|^2 as |x|^2 - 2 x.p (the |p|^2 term is common to the
    window) with the sample norms precomputed around the path centroid.  The
    result agrees with :func:`nearest_index` except where two samples are
    equidistant to within rounding.
    """

    def __init__(self, positions: np.ndarray, window: int = 200):
        positions = np.asarray(positions, dtype=float)
        if len(positions) == 0:
            raise InvalidPath("path has no samples")
        self.origin = positions.mean(axis=0)
        self.rel = np.ascontiguousarray(positions - self.origin)
        self.norm2 = np.einsum("ij,ij->i", self.rel, self.rel)
        self.window = int(window)
        self.n = len(positions)

    def __call__(self, px: float, py: float, pz: float, last_index: int) -> int:
        o = self.origin
        p2 = np.array((2.0 * (px - o[0]), 2.0 * (py - o[1]), 2.0 * (pz - o[2])))
        stop = last_index + self.window + 1
        d = self.norm2[last_index:stop] - self.rel[last_index:stop] @ p2
        return last_index + int(d.argmin())


def nearest_setpoint(samples, P_c, last_index: int, speeds, window: int = 200) -> Setpoint:
    """Closest centerline sample ahead of ``last_index`` and its velocity target.

    ``speeds`` holds the target speed of every sample; the velocity points
    along the unit tangent there.
    """
    if len(samples) == 0:
        raise InvalidPath("path has no samples")
    i = nearest_index(samples.position, np.asarray(P_c, dtype=float), last_index, window)
    d1 = samples.first_deriv[i]
    tangent = d1 / np.linalg.norm(d1)
    return Setpoint(samples.position[i].copy(), float(speeds[i]) * tangent, i)


def velocity_error(V_c, V_s, P_c, P_s, kr: float) -> np.ndarray:
    return (np.asarray(V_c, dtype=float) - np.asarray(V_s, dtype=float)
            + kr * (np.asarray(P_c, dtype=float) - np.asarray(P_s, dtype=float)))


def pid_step(state: ControllerState, error_v, gains: ControllerGains):
    """One controller update.  Returns ``(PF, PI, PD, new_state)``."""
    e = np.asarray(error_v, dtype=float)
    PF = -gains.kp * e
    PI = np.asarray(state.PI, dtype=float) - e * gains.delta * gains.ki
    error_dt = (e - np.asarray(state.error_p, dtype=float)) / gains.delta
    PD = -gains.kd * error_dt
    new_state = ControllerState(tuple(PI.tolist()), tuple(e.tolist()), True)
    return PF, PI, PD, new_state


def feedforward(C_d: float, density: float, reference_area: float, V,
                mode: str = "paper-linear") -> np.ndarray:
    if not (C_d > 0 and density > 0 and reference_area > 0):
        raise InvalidValue("drag coefficient, density and reference area must be > 0")
    V = np.asarray(V, dtype=float)
    coef = 0.5 * C_d * density * reference_area
    if mode == "quadratic":
        return coef * np.linalg.norm(V) * V
    return coef * V


def gradient_command(moment: float, PF, PI, PD, FF, timestamp: float = 0.0) -> GradientCommand:
    if not (math.isfinite(moment) and moment > 0):
        raise InvalidMoment(f"magnetic moment must be > 0, got {moment}")
    total = (np.asarray(PF, dtype=float) + np.asarray(PI, dtype=float)
             + np.asarray(PD, dtype=float) + np.asarray(FF, dtype=float))
    G = total / moment
    return GradientCommand(timestamp, tuple(G.tolist()))


@dataclass
class TrajectoryController:
    """Stateful wrapper chaining the controller operations for one run.

    In ``paper`` mode the PID terms enter the gradient equation directly as
    forces.  In ``dimensional`` mode they are read as acceleration demands
    and multiplied by the sphere mass, and the feedforward cancels the drag
    predicted at the velocity setpoint instead of echoing the blood speed.
    """

    gains: ControllerGains
    moment: float
    mass: float
    drag_coefficient: float
    density: float
    reference_area: float
    mode: str = "paper"
    drag_mode: str = "paper-linear"
    anti_windup: bool = True
    state: ControllerState = field(default_factory=ControllerState)

    def __post_init__(self):
        if self.mode not in CONTROLLER_MODES:
            raise InvalidValue(f"unknown controller mode {self.mode!r}")

    def update(self, V_c, V_s, P_c, P_s, v_blood, limits, timestamp: float):
        err = velocity_error(V_c, V_s, P_c, P_s, self.gains.kr)
        PF, PI, PD, new_state = pid_step(self.state, err, self.gains)
        if self.mode == "paper":
            ff_velocity = v_blood
            scale = 1.0
        else:
            ff_velocity = np.asarray(V_s, dtype=float) - np.asarray(v_blood, dtype=float)
            scale = self.mass
        FF = feedforward(self.drag_coefficient, self.density, self.reference_area,
                         ff_velocity, self.drag_mode)
        raw = gradient_command(self.moment, scale * PF, scale * PI, scale * PD, FF, timestamp)
        cmd = clamp_gradient(raw, limits)
        if self.anti_windup and any(cmd.clipped):
            held = tuple(old if clip else new for old, new, clip
                         in zip(self.state.PI, new_state.PI, cmd.clipped))
            new_state = ControllerState(held, new_state.error_p, True)
        self.state = new_state
        return raw, cmd, err
