"""Blood flow, drag and the curvature-aware velocity setpoint.

Flow is a zero-dimensional waveform: the cross-section mean speed of a rigid
cylindrical vessel, modulated in time by a truncated Fourier series (or a
tabulated one-period profile).  The sphere sees it along the local centerline
tangent.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidValue, InvalidVessel, ImpossibleGeometry

DEFAULT_HARMONICS = (
    (0.6, 0.0),
    (0.3, math.pi / 4),
    (0.15, math.pi / 2),
    (0.05, 3 * math.pi / 4),
)
DEFAULT_HEART_RATE = {"steady": 0.0, "normal": 60.0, "fast": 120.0}
BLOOD_DENSITY_PAPER = 1.025
BLOOD_DENSITY_PHYSIOLOGICAL = 1025.0
DRAG_MODES = ("paper-linear", "quadratic")


@dataclass(frozen=True)
class FlowWaveform:
    """Time-dependent blood speed for one of the three pulsatile regimes.

    ``mean_flow`` is the volumetric rate in m^3/s.  Harmonic amplitudes are
    fractions of the mean.  A ``profile`` of ``(time_fraction,
    velocity_fraction)`` samples, when given, replaces the harmonic series.
    """

    regime: str = "steady"
    mean_flow: float = 1e-6
    heart_rate: float | None = None
    harmonics: tuple[tuple[float, float], ...] = DEFAULT_HARMONICS
    profile: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    clamp_negative: bool = True

    def __post_init__(self):
        if self.regime not in DEFAULT_HEART_RATE:
            raise InvalidValue(f"unknown flow regime {self.regime!r}")
        if self.heart_rate is None:
            object.__setattr__(self, "heart_rate", DEFAULT_HEART_RATE[self.regime])
        if not (math.isfinite(self.mean_flow) and self.mean_flow >= 0):
            raise InvalidValue(f"mean flow must be finite and >= 0, got {self.mean_flow}")
        if self.regime != "steady" and not self.heart_rate > 0:
            raise InvalidValue(f"heart rate must be > 0 for the {self.regime} regime")

    @property
    def period(self) -> float:
        if self.regime == "steady":
            return math.inf
        return 60.0 / self.heart_rate

    def modulation(self, t: float) -> float:
        """Instantaneous speed as a fraction of the mean speed."""
        if self.regime == "steady":
            return 1.0
        phase = (t % self.period) / self.period
        if self.profile is not None:
            tf, vf = self.profile
            f = float(np.interp(phase, tf, vf, period=1.0))
        else:
            w = 2.0 * math.pi * phase
            f = 1.0
            for k, (amp, ph) in enumerate(self.harmonics, start=1):
                f += amp * math.cos(k * w + ph)
        if self.clamp_negative and f < 0.0:
            return 0.0
        return f


def mean_speed(mean_flow: float, vessel_radius: float) -> float:
    if not vessel_radius > 0:
        raise InvalidVessel(f"vessel radius must be > 0, got {vessel_radius}")
    return mean_flow / (math.pi * vessel_radius * vessel_radius)


def flow_velocity(waveform: FlowWaveform, vessel_radius: float, t: float) -> float:
    """Blood speed (m/s) along the local tangent at time ``t``."""
    if t < 0:
        raise InvalidValue(f"time must be >= 0, got {t}")
    return mean_speed(waveform.mean_flow, vessel_radius) * waveform.modulation(t)


def load_waveform_profile(path) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Read a ``time_fraction,velocity_fraction`` CSV covering one period.

    The returned profile is normalised so that its period average (linear
    interpolation, wrapping around) is exactly one.
    """
    path = Path(path)
    tf, vf = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["time_fraction", "velocity_fraction"]:
            raise InvalidValue(f"{path}: expected header 'time_fraction,velocity_fraction'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                a, b = (float(c) for c in row)
            except ValueError:
                raise InvalidValue(f"{path}:{lineno}: malformed row {row!r}") from None
            tf.append(a)
            vf.append(b)
    return normalise_profile(tf, vf)


def normalise_profile(tf, vf):
    tf = np.asarray(tf, dtype=float)
    vf = np.asarray(vf, dtype=float)
    if len(tf) < 2:
        raise InvalidValue("waveform profile needs at least 2 samples")
    if tf[0] < 0 or tf[-1] >= 1 or np.any(np.diff(tf) <= 0):
        raise InvalidValue("time fractions must increase within [0, 1)")
    if not np.all(np.isfinite(vf)):
        raise InvalidValue("velocity fractions must be finite")
    # trapezoid over the closed loop, including the wrap segment
    t_closed = np.append(tf, tf[0] + 1.0)
    v_closed = np.append(vf, vf[0])
    avg = float(np.sum(0.5 * (v_closed[1:] + v_closed[:-1]) * np.diff(t_closed)))
    if not avg > 0:
        raise InvalidValue("waveform profile must have a positive mean")
    return tuple(tf.tolist()), tuple((vf / avg).tolist())


@dataclass(frozen=True)
class VesselSegment:
    """Rigid vessel; ``radius`` is a scalar or one value per centerline sample."""

    radius: float | tuple[float, ...] = 3e-3

    def radius_at(self, index: int) -> float:
        if isinstance(self.radius, tuple):
            return self.radius[index]
        return self.radius

    def validate(self, sphere_radius: float, n_samples: int | None = None) -> None:
        r = np.atleast_1d(np.asarray(self.radius, dtype=float))
        if n_samples is not None and r.size not in (1, n_samples):
            raise InvalidVessel(f"radius profile has {r.size} entries, path has {n_samples} samples")
        if np.any(r <= 0) or not np.all(np.isfinite(r)):
            raise InvalidVessel("vessel radius must be finite and > 0")
        if np.any(r <= sphere_radius):
            raise ImpossibleGeometry(
                f"vessel radius {r.min():.4g} m does not exceed sphere radius {sphere_radius:.4g} m"
            )


def drag_force(C_d, density, reference_area, v_blood, v_s, mode: str = "paper-linear"):
    """Drag on the sphere from the blood, pointing along ``v_blood - v_s``.

    ``paper-linear`` scales with the relative speed, ``quadratic`` with its
    square.
    """
    rel = np.asarray(v_blood, dtype=float) - np.asarray(v_s, dtype=float)
    if not (np.all(np.isfinite(rel)) and math.isfinite(C_d) and math.isfinite(density)
            and math.isfinite(reference_area)):
        raise InvalidValue("drag inputs must be finite")
    if not (C_d > 0 and density > 0 and reference_area > 0):
        raise InvalidValue("drag coefficient, density and reference area must be > 0")
    coef = 0.5 * C_d * density * reference_area
    if mode == "paper-linear":
        return coef * rel
    if mode == "quadratic":
        return coef * np.linalg.norm(rel) * rel
    raise InvalidValue(f"unknown drag mode {mode!r}")


@dataclass(frozen=True)
class VelocityProfileParams:
    v0: float = 0.015
    k0: float = 20.0
    r0: float = 1.0
    r_gc: float = 3e-4
    v_min: float = 1e-4

    def __post_init__(self):
        for name in ("v0", "k0", "r0"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise InvalidValue(f"{name} must be finite and > 0, got {val}")
        if not self.v_min >= 0:
            raise InvalidValue("v_min must be >= 0")


def velocity_setpoint(params: VelocityProfileParams, K, R_s: float):
    """Target speed (m/s): slower on tighter bends, never below ``v_min``.

    Accepts a scalar curvature or an array of them.
    """
    K = np.asarray(K, dtype=float)
    if np.any(K < 0):
        raise InvalidValue("curvature must be >= 0")
    v = params.v0 / (1.0 + K / params.k0) + (R_s - params.r_gc) / params.r0
    v = np.maximum(v, params.v_min)
    return float(v) if v.ndim == 0 else v
