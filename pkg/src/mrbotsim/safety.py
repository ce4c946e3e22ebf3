"""Gradient slew-rate (dB/dt) checks and virtual-fixture wall clearance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .controller import nearest_index
from .errors import (
    ImpossibleGeometry,
    InsufficientData,
    InvalidRiseTime,
    InvalidSeries,
    InvalidValue,
)
from .magnetics import GradientCommand

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class SlewParams:
    isocenter_distance: float = 0.50
    rise_time: float = 0.100
    dbdt_limit: float = 20.0

    def __post_init__(self):
        if not self.isocenter_distance > 0:
            raise InvalidValue("isocenter distance must be > 0")
        if not self.rise_time > 0:
            raise InvalidRiseTime(f"rise time must be > 0, got {self.rise_time}")
        if not self.dbdt_limit > 0:
            raise InvalidValue("dB/dt limit must be > 0")


@dataclass(frozen=True, eq=False)
class SlewReport:
    dbdt: np.ndarray                 # (n, 3); row 0 is zero, row i spans i-1 -> i
    max_abs: tuple[float, float, float]
    limit: float
    axis_pass: tuple[bool, bool, bool]
    violations: tuple[int, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return all(self.axis_pass)

    def as_lines(self) -> list[str]:
        lines = [f"dbdt_limit_t_per_s: {self.limit:.9g}"]
        for ax, m, ok in zip(AXES, self.max_abs, self.axis_pass):
            lines.append(f"dbdt_max_{ax}_t_per_s: {m:.9g}")
            lines.append(f"slew_pass_{ax}: {str(ok).lower()}")
        lines.append(f"slew_violations: {len(self.violations)}")
        if self.violations:
            lines.append("slew_violation_indices: " + " ".join(map(str, self.violations[:50])))
        lines.append(f"slew_pass: {str(self.passed).lower()}")
        return lines


def slew_rate(G_prev: float, G_next: float, rise_time: float, r: float) -> float:
    """Signed dB/dt (T/s) at distance ``r`` for a gradient change over ``rise_time``."""
    if not rise_time > 0:
        raise InvalidRiseTime(f"rise time must be > 0, got {rise_time}")
    if not r > 0:
        raise InvalidValue(f"isocenter distance must be > 0, got {r}")
    return (G_next - G_prev) / rise_time * r


def slew_series(times, gradients, params: SlewParams) -> SlewReport:
    """Vectorised slew check over a gradient time series of shape (n, 3)."""
    times = np.asarray(times, dtype=float)
    G = np.asarray(gradients, dtype=float).reshape(-1, 3)
    if len(G) < 2:
        raise InsufficientData(f"need at least 2 gradient commands, got {len(G)}")
    if len(times) != len(G):
        raise InvalidSeries("times and gradients differ in length")
    if np.any(np.diff(times) <= 0):
        raise InvalidSeries("command timestamps must be strictly increasing")
    dbdt = np.zeros_like(G)
    dbdt[1:] = np.diff(G, axis=0) / params.rise_time * params.isocenter_distance
    absd = np.abs(dbdt)
    max_abs = tuple(float(v) for v in absd.max(axis=0))
    bad = absd > params.dbdt_limit
    axis_pass = tuple(bool(v) for v in ~bad.any(axis=0))
    violations = tuple(int(i) for i in np.flatnonzero(bad.any(axis=1)))
    return SlewReport(dbdt, max_abs, params.dbdt_limit, axis_pass, violations)


def check_slew_series(commands: Sequence[GradientCommand], params: SlewParams) -> SlewReport:
    if len(commands) < 2:
        raise InsufficientData(f"need at least 2 gradient commands, got {len(commands)}")
    times = [c.timestamp for c in commands]
    G = [c.G for c in commands]
    return slew_series(times, G, params)


@dataclass(frozen=True)
class FixtureViolation:
    timestamp: float
    position: tuple[float, float, float]
    distance: float
    allowed: float


def allowed_clearance(vessel_radius: float, sphere_radius: float) -> float:
    if not vessel_radius > sphere_radius:
        raise ImpossibleGeometry(
            f"vessel radius {vessel_radius} must exceed sphere radius {sphere_radius}"
        )
    return vessel_radius - sphere_radius


def check_virtual_fixture(P_c, samples, vessel_radius: float, sphere_radius: float,
                          last_index: int = 0, window: int = 200, timestamp: float = math.nan):
    """``None`` if the sphere keeps clear of the wall, else a :class:`FixtureViolation`."""
    allowed = allowed_clearance(vessel_radius, sphere_radius)
    P_c = np.asarray(P_c, dtype=float)
    i = nearest_index(samples.position, P_c, last_index, window)
    dist = float(np.linalg.norm(P_c - samples.position[i]))
    if dist <= allowed:
        return None
    return FixtureViolation(timestamp, tuple(P_c.tolist()), dist, allowed)


def fixture_distances(positions, sample_positions, indices) -> np.ndarray:
    """Distance from each position to its (already located) nearest sample."""
    return np.linalg.norm(np.asarray(positions) - sample_positions[np.asarray(indices)], axis=1)
