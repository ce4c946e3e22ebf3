"""Sphere properties, gradient propulsion force and gradient saturation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidValue

PERMENDUR_DENSITY = 8120.0
GRAVITY = 9.80665


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise InvalidValue(f"{name} must be finite and > 0, got {value}")


def sphere_volume(R_s: float) -> float:
    _positive("sphere radius", R_s)
    return 4.0 / 3.0 * math.pi * R_s ** 3


def magnetic_moment(M: float, volume: float) -> float:
    _positive("magnetization", M)
    _positive("volume", volume)
    return M * volume


def magnetic_force(M: float, G, volume: float) -> np.ndarray:
    """Per-axis force (N) on a saturated core of ``volume`` m^3 in gradient ``G`` T/m."""
    G = np.asarray(G, dtype=float)
    if not (math.isfinite(M) and math.isfinite(volume) and np.all(np.isfinite(G))):
        raise InvalidValue("magnetic force inputs must be finite")
    return M * G * volume


@dataclass(frozen=True)
class SphereSpec:
    radius: float = 3e-4
    magnetization: float = 1.9496e6
    material_density: float = PERMENDUR_DENSITY
    drag_coefficient: float = 0.47

    def __post_init__(self):
        _positive("sphere radius", self.radius)
        _positive("magnetization", self.magnetization)
        _positive("material density", self.material_density)
        _positive("drag coefficient", self.drag_coefficient)

    @property
    def volume(self) -> float:
        return sphere_volume(self.radius)

    @property
    def reference_area(self) -> float:
        return math.pi * self.radius ** 2

    @property
    def moment(self) -> float:
        return magnetic_moment(self.magnetization, self.volume)

    @property
    def mass(self) -> float:
        return self.material_density * self.volume


@dataclass(frozen=True)
class GradientLimits:
    max_amplitude: float = 0.040
    refresh_interval: float = 0.100

    def __post_init__(self):
        _positive("gradient amplitude limit", self.max_amplitude)
        _positive("refresh interval", self.refresh_interval)


@dataclass(frozen=True)
class GradientCommand:
    timestamp: float
    G: tuple[float, float, float]
    clipped: tuple[bool, bool, bool] = (False, False, False)


def clamp_gradient(cmd: GradientCommand, limits: GradientLimits) -> GradientCommand:
    lim = limits.max_amplitude
    G = []
    flags = []
    for g, was in zip(cmd.G, cmd.clipped):
        if g > lim:
            G.append(lim)
            flags.append(True)
        elif g < -lim:
            G.append(-lim)
            flags.append(True)
        else:
            G.append(float(g))
            flags.append(bool(was))
    return GradientCommand(cmd.timestamp, tuple(G), tuple(flags))
