"""Vessel centerline geometry.

Waypoints are interpolated per axis with shape-preserving piecewise cubic
Hermite polynomials (PCHIP).  The resulting parametric curve exposes exact
first and second derivatives, the space-curve curvature and a uniformly
discretised sample table used by the controller and safety checks.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateTangent,
    InsufficientData,
    InvalidKnots,
    InvalidStep,
    InvalidValue,
    OutOfDomain,
)

EPS_TANGENT = 1e-9


@dataclass(frozen=True)
class Waypoint:
    t: float
    x: float
    y: float
    z: float


def _hermite(u, h, y0, y1, d0, d1, nu: int):
    # Hermite basis form in u = (t - t0)/h; reproduces y and d exactly at u = 0, 1
    m = (y1 - y0) / h
    if nu == 0:
        v = 1.0 - u
        return y0 + (y1 - y0) * u * u * (3.0 - 2.0 * u) + h * u * v * (d0 * v - d1 * u)
    if nu == 1:
        return 6.0 * u * (1.0 - u) * m + d0 * (1.0 - u) * (1.0 - 3.0 * u) + d1 * u * (3.0 * u - 2.0)
    if nu == 2:
        return ((6.0 - 12.0 * u) * m + d0 * (6.0 * u - 4.0) + d1 * (6.0 * u - 2.0)) / h
    raise ValueError("nu must be 0, 1 or 2")


@dataclass(frozen=True)
class CubicHermitePiece:
    """One cubic on ``[t0, t1]`` fixed by its end values and slopes."""

    t0: float
    t1: float
    y0: float
    y1: float
    d0: float
    d1: float

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        """Power-form coefficients in ``s = t - t0``."""
        h = self.t1 - self.t0
        m = (self.y1 - self.y0) / h
        c2 = (3.0 * m - 2.0 * self.d0 - self.d1) / h
        c3 = (self.d0 + self.d1 - 2.0 * m) / (h * h)
        return self.y0, self.d0, c2, c3

    def __call__(self, t: float, nu: int = 0) -> float:
        h = self.t1 - self.t0
        return _hermite((t - self.t0) / h, h, self.y0, self.y1, self.d0, self.d1, nu)


def _pchip_slopes(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Fritsch-Carlson monotone derivatives with the Fritsch-Butland weighted
    # harmonic mean in the interior and the three-point one-sided rule at ends.
    h = np.diff(t)
    m = np.diff(y) / h
    n = len(t)
    d = np.zeros(n)
    if n == 2:
        d[:] = m[0]
        return d

    w1 = 2.0 * h[1:] + h[:-1]
    w2 = h[1:] + 2.0 * h[:-1]
    same_sign = (np.sign(m[:-1]) * np.sign(m[1:])) > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        hm = (w1 + w2) / (w1 / m[:-1] + w2 / m[1:])
    d[1:-1] = np.where(same_sign, hm, 0.0)

    d[0] = _edge_slope(h[0], h[1], m[0], m[1])
    d[-1] = _edge_slope(h[-1], h[-2], m[-1], m[-2])
    return d


def _edge_slope(h0, h1, m0, m1):
    d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
    if np.sign(d) != np.sign(m0):
        return 0.0
    if np.sign(m0) != np.sign(m1) and abs(d) > abs(3.0 * m0):
        return 3.0 * m0
    return d


class PchipInterpolant:
    """Scalar PCHIP interpolant over strictly increasing knots.

    Evaluation inside ``[t_min, t_max]`` only.  At an interior knot the left
    piece is used, so the (discontinuous) second derivative is the left
    limit there.
    """

    def __init__(self, t: Sequence[float], y: Sequence[float]):
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        if t.ndim != 1 or t.shape != y.shape:
            raise InvalidValue("knots and values must be 1-D arrays of equal length")
        if len(t) < 2:
            raise InsufficientData(f"need at least 2 nodes, got {len(t)}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise InvalidValue("nodes must be finite")
        if np.any(np.diff(t) <= 0):
            raise InvalidKnots("knot parameters must be strictly increasing")

        self.t = t
        self.y = y
        self.d = _pchip_slopes(t, y)

        self.h = np.diff(t)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    @property
    def pieces(self) -> list[CubicHermitePiece]:
        return [
            CubicHermitePiece(self.t[i], self.t[i + 1], self.y[i], self.y[i + 1],
                              self.d[i], self.d[i + 1])
            for i in range(len(self.t) - 1)
        ]

    def _locate(self, tt: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.t, tt, side="left") - 1
        return np.clip(idx, 0, len(self.t) - 2)

    def __call__(self, tt, nu: int = 0):
        scalar = np.ndim(tt) == 0
        tt = np.atleast_1d(np.asarray(tt, dtype=float))
        lo, hi = self.domain
        if np.any(tt < lo) or np.any(tt > hi) or not np.all(np.isfinite(tt)):
            raise OutOfDomain(f"parameter outside [{lo}, {hi}]")
        if nu not in (0, 1, 2):
            raise ValueError("nu must be 0, 1 or 2")
        i = self._locate(tt)
        h = self.h[i]
        u = (tt - self.t[i]) / h
        out = _hermite(u, h, self.y[i], self.y[i + 1], self.d[i], self.d[i + 1], nu)
        return float(out[0]) if scalar else out


def build_pchip(nodes: Iterable[tuple[float, float]]) -> PchipInterpolant:
    nodes = list(nodes)
    if len(nodes) < 2:
        raise InsufficientData(f"need at least 2 nodes, got {len(nodes)}")
    t, y = zip(*nodes)
    return PchipInterpolant(t, y)


def curvature(first_deriv, second_deriv, eps: float = EPS_TANGENT) -> float:
    """Curvature of a space curve from its parametric derivatives (1/m)."""
    x1, y1, z1 = (float(v) for v in first_deriv)
    x2, y2, z2 = (float(v) for v in second_deriv)
    speed2 = x1 * x1 + y1 * y1 + z1 * z1
    if math.sqrt(speed2) <= eps:
        raise DegenerateTangent(f"tangent magnitude {math.sqrt(speed2):.3g} <= {eps:g}")
    num = math.sqrt((z2 * y1 - y2 * z1) ** 2 + (x2 * z1 - z2 * x1) ** 2
                    + (y2 * x1 - x2 * y1) ** 2)
    return num / speed2 ** 1.5


def curvature_array(d1: np.ndarray, d2: np.ndarray, eps: float = EPS_TANGENT) -> np.ndarray:
    """Vectorised :func:`curvature`; NaN where the tangent is degenerate."""
    x1, y1, z1 = d1.T
    x2, y2, z2 = d2.T
    speed2 = x1 * x1 + y1 * y1 + z1 * z1
    num = np.sqrt((z2 * y1 - y2 * z1) ** 2 + (x2 * z1 - z2 * x1) ** 2
                  + (y2 * x1 - x2 * y1) ** 2)
    ok = np.sqrt(speed2) > eps
    out = np.full(len(speed2), np.nan)
    out[ok] = num[ok] / speed2[ok] ** 1.5
    return out


@dataclass(frozen=True)
class PathSample:
    t: float
    position: np.ndarray
    first_deriv: np.ndarray
    second_deriv: np.ndarray
    curvature: float
    arc_length: float


@dataclass(frozen=True, eq=False)
class PathSamples:
    """Column-oriented table of uniformly spaced centerline samples."""

    t: np.ndarray
    position: np.ndarray
    first_deriv: np.ndarray
    second_deriv: np.ndarray
    curvature: np.ndarray
    arc_length: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> PathSample:
        return PathSample(
            float(self.t[i]), self.position[i], self.first_deriv[i],
            self.second_deriv[i], float(self.curvature[i]), float(self.arc_length[i]),
        )

    @property
    def unit_tangent(self) -> np.ndarray:
        norm = np.linalg.norm(self.first_deriv, axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(norm > EPS_TANGENT, self.first_deriv / norm, 0.0)

    @property
    def length(self) -> float:
        return float(self.arc_length[-1])


@dataclass(eq=False)
class CenterlinePath:
    """Interpolated 3-D centerline; immutable once built."""

    X: PchipInterpolant
    Y: PchipInterpolant
    Z: PchipInterpolant
    step: float = 1e-4
    _samples: PathSamples | None = field(default=None, repr=False)

    @classmethod
    def from_waypoints(cls, waypoints: Sequence[Waypoint], step: float = 1e-4) -> "CenterlinePath":
        if len(waypoints) < 2:
            raise InsufficientData(f"need at least 2 waypoints, got {len(waypoints)}")
        t = [w.t for w in waypoints]
        return cls(
            PchipInterpolant(t, [w.x for w in waypoints]),
            PchipInterpolant(t, [w.y for w in waypoints]),
            PchipInterpolant(t, [w.z for w in waypoints]),
            step,
        )

    @classmethod
    def from_arrays(cls, t, xyz, step: float = 1e-4) -> "CenterlinePath":
        xyz = np.asarray(xyz, dtype=float)
        return cls.from_waypoints([Waypoint(ti, *p) for ti, p in zip(t, xyz)], step)

    @property
    def domain(self) -> tuple[float, float]:
        return self.X.domain

    def evaluate(self, t):
        """Position, first derivative and second derivative at ``t``."""
        pos = np.stack([self.X(t), self.Y(t), self.Z(t)], axis=-1)
        d1 = np.stack([self.X(t, 1), self.Y(t, 1), self.Z(t, 1)], axis=-1)
        d2 = np.stack([self.X(t, 2), self.Y(t, 2), self.Z(t, 2)], axis=-1)
        return pos, d1, d2

    @property
    def samples(self) -> PathSamples:
        if self._samples is None:
            self._samples = discretize(self, self.step)
        return self._samples


def evaluate_path(path: CenterlinePath, t):
    return path.evaluate(t)


def sample_count(t_min: float, t_max: float, step: float) -> int:
    """Grid points ``t_min + k*step`` that fit in the span, endpoint included."""
    ratio = (t_max - t_min) / step
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
        return int(nearest) + 1
    return int(math.floor(ratio)) + 1


def discretize(path: CenterlinePath, step: float) -> PathSamples:
    lo, hi = path.domain
    if not step > 0 or not math.isfinite(step):
        raise InvalidStep(f"step must be positive, got {step}")
    if step > hi - lo:
        raise InvalidStep(f"step {step} exceeds parameter span {hi - lo}")
    n = sample_count(lo, hi, step)
    t = lo + step * np.arange(n)
    if abs(hi - t[-1]) <= 1e-9 * step:
        t[-1] = hi
    else:
        # span not a whole number of steps: close with a short final interval
        t = np.append(t, hi)
    pos, d1, d2 = path.evaluate(t)
    speed = np.linalg.norm(d1, axis=1)
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(t))])
    return PathSamples(t, pos, d1, d2, curvature_array(d1, d2), arc)


def read_waypoints(path) -> list[Waypoint]:
    """Read a ``t,x,y,z`` waypoint CSV (UTF-8, LF or CRLF)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["t", "x", "y", "z"]:
            raise InvalidValue(f"{path}: expected header 't,x,y,z', got {','.join(header)!r}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise InvalidValue(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise InvalidValue(f"{path}:{lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in vals):
                raise InvalidValue(f"{path}:{lineno}: non-finite coordinate")
            out.append(Waypoint(*vals))
    if len(out) < 2:
        raise InsufficientData(f"{path}: need at least 2 waypoints, got {len(out)}")
    return out


def write_waypoints(waypoints: Sequence[Waypoint], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("t,x,y,z\n")
        for w in waypoints:
            fh.write(",".join(repr(float(v)) for v in (w.t, w.x, w.y, w.z)) + "\n")
