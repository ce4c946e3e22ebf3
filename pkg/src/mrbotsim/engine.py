"""Closed-loop scenario execution.

Three clocks drive a run, all integer multiples of the physics step ``dt``:

* every ``dt`` the blood speed, drag and magnetic force are re-evaluated and
  the sphere is advanced with semi-implicit Euler;
* every ``tp`` the tracker captures the sphere position and velocity;
* every controller refresh the most recent capture is turned into a new
  gradient command, which is then held until the next refresh.
"""
from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .controller import (
    CONTROLLER_MODES,
    ControllerGains,
    ControllerState,
    NearestSearch,
    TrajectoryController,
    nearest_index,
)
from .errors import BatchError, ConfigError, InvalidValue, NumericalDivergence
from .hemodynamics import (
    BLOOD_DENSITY_PAPER,
    DRAG_MODES,
    FlowWaveform,
    VelocityProfileParams,
    VesselSegment,
    velocity_setpoint,
)
from .magnetics import GRAVITY, GradientLimits, SphereSpec
from .path_geometry import CenterlinePath, Waypoint, read_waypoints
from .safety import SlewParams, SlewReport, allowed_clearance, slew_series
from .telemetry import COLUMNS, Telemetry

_ON_GRID_TOL = 1e-9


@dataclass(frozen=True)
class ScenarioConfig:
    waypoints: Path | tuple[Waypoint, ...]
    duration: float = 60.0
    path_step: float = 1e-4
    flow: FlowWaveform = field(default_factory=FlowWaveform)
    blood_density: float = BLOOD_DENSITY_PAPER
    vessel: VesselSegment = field(default_factory=VesselSegment)
    sphere: SphereSpec = field(default_factory=SphereSpec)
    gains: ControllerGains = field(default_factory=ControllerGains)
    controller_mode: str = "paper"
    drag_mode: str = "paper-linear"
    anti_windup: bool = True
    window: int = 200
    profile: VelocityProfileParams = field(default_factory=VelocityProfileParams)
    limits: GradientLimits = field(default_factory=GradientLimits)
    slew: SlewParams = field(default_factory=SlewParams)
    tp: float = 0.100
    dt: float = 0.001
    initial_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    capture_radius: float | None = None
    include_gravity: bool = False

    def validate(self) -> None:
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ConfigError(f"duration must be >= 0, got {self.duration}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if not self.tp > 0:
            raise ConfigError(f"tp must be > 0, got {self.tp}")
        refresh = self.limits.refresh_interval
        if self.dt > self.tp * (1 + _ON_GRID_TOL):
            raise ConfigError(f"dt ({self.dt} s) exceeds tp ({self.tp} s)")
        if self.dt > refresh * (1 + _ON_GRID_TOL):
            raise ConfigError(f"dt ({self.dt} s) exceeds controller refresh ({refresh} s)")
        for name, val in (("tp", self.tp), ("controller refresh", refresh)):
            ratio = val / self.dt
            if abs(ratio - round(ratio)) > _ON_GRID_TOL * max(1.0, ratio):
                raise ConfigError(f"{name} ({val} s) is not an integer multiple of dt ({self.dt} s)")
        if self.controller_mode not in CONTROLLER_MODES:
            raise ConfigError(f"controller_mode must be one of {CONTROLLER_MODES}")
        if self.drag_mode not in DRAG_MODES:
            raise ConfigError(f"drag_mode must be one of {DRAG_MODES}")
        if not self.blood_density > 0:
            raise ConfigError("blood density must be > 0")
        if self.window < 1:
            raise ConfigError("setpoint window must be >= 1")
        if self.capture_radius is not None and not self.capture_radius > 0:
            raise ConfigError("capture radius must be > 0")
        if len(self.initial_offset) != 3 or not all(map(math.isfinite, self.initial_offset)):
            raise ConfigError("initial offset must be three finite numbers")

    def load_path(self) -> CenterlinePath:
        wps = self.waypoints
        if isinstance(wps, (str, Path)):
            wps = read_waypoints(wps)
        return CenterlinePath.from_waypoints(list(wps), self.path_step)


@dataclass(frozen=True)
class SimState:
    time: float
    position: np.ndarray
    velocity: np.ndarray
    command: tuple[float, float, float] = (0.0, 0.0, 0.0)
    controller: ControllerState = field(default_factory=ControllerState)
    index: int = 0


def step_dynamics(state: SimState, F_mag, F_drag, mass: float, dt: float) -> SimState:
    """Semi-implicit Euler: velocity first, then position with the new velocity."""
    if not (mass > 0 and dt > 0):
        raise InvalidValue("mass and dt must be > 0")
    F = np.asarray(F_mag, dtype=float) + np.asarray(F_drag, dtype=float)
    if not np.all(np.isfinite(F)):
        raise NumericalDivergence(f"non-finite force {F} at t={state.time:.6g} s")
    v = state.velocity + dt * F / mass
    p = state.position + dt * v
    return replace(state, time=state.time + dt, position=p, velocity=v)


@dataclass(eq=False)
class ScenarioResult:
    telemetry: Telemetry
    slew: SlewReport | None
    fixture_violations: int
    max_wall_distance: float
    allowed_clearance: float
    terminated: str                     # "captured", "duration" or "empty"
    path_length: float
    path: CenterlinePath = field(repr=False)

    @property
    def final_position(self) -> np.ndarray:
        return self.telemetry.position[-1]

    @property
    def passed(self) -> bool:
        slew_ok = self.slew is None or self.slew.passed
        return slew_ok and self.fixture_violations == 0

    def report_lines(self) -> list[str]:
        lines = [
            f"terminated: {self.terminated}",
            f"records: {len(self.telemetry)}",
            f"path_length_m: {self.path_length:.9g}",
            f"allowed_clearance_m: {self.allowed_clearance:.9g}",
            f"max_wall_distance_m: {self.max_wall_distance:.9g}",
            f"fixture_violations: {self.fixture_violations}",
            f"fixture_pass: {str(self.fixture_violations == 0).lower()}",
        ]
        if self.slew is not None:
            lines += self.slew.as_lines()
        lines.append(f"overall_pass: {str(self.passed).lower()}")
        return lines


def _steps(interval: float, dt: float) -> int:
    return max(1, int(round(interval / dt)))


def run_scenario(config: ScenarioConfig, path: CenterlinePath | None = None) -> ScenarioResult:
    config.validate()
    if path is None:
        path = config.load_path()
    samples = path.samples
    n_samples = len(samples)
    if np.any(~np.isfinite(samples.curvature)):
        raise ConfigError("path has a degenerate tangent (zero speed) at some sample")

    sphere = config.sphere
    config.vessel.validate(sphere.radius, n_samples)
    radius = np.broadcast_to(np.asarray(config.vessel.radius, dtype=float), (n_samples,))
    clearance = allowed_clearance(float(radius.min()), sphere.radius)

    positions = samples.position
    tangents = samples.unit_tangent
    K = samples.curvature
    speeds = velocity_setpoint(config.profile, K, sphere.radius)
    speeds = np.broadcast_to(np.asarray(speeds, dtype=float), (n_samples,))
    blood_mean = config.flow.mean_flow / (math.pi * radius * radius)

    dt = config.dt
    n_steps = int(round(config.duration / dt))
    tp_every = _steps(config.tp, dt)
    refresh_every = _steps(config.limits.refresh_interval, dt)
    window = config.window

    mass = sphere.mass
    moment = sphere.moment
    inv_mass = 1.0 / mass
    drag_coef = 0.5 * sphere.drag_coefficient * config.blood_density * sphere.reference_area
    quadratic = config.drag_mode == "quadratic"
    gz = 0.0
    if config.include_gravity:
        gz = -(sphere.material_density - config.blood_density) * sphere.volume * GRAVITY
    capture = config.capture_radius if config.capture_radius is not None else 2.0 * sphere.radius
    capture2 = capture * capture
    end = positions[-1]
    ex, ey, ez = float(end[0]), float(end[1]), float(end[2])

    ctrl = TrajectoryController(
        config.gains, moment, mass, sphere.drag_coefficient, config.blood_density,
        sphere.reference_area, config.controller_mode, config.drag_mode, config.anti_windup,
    )
    flow = config.flow
    steady = flow.regime == "steady"
    modulation = flow.modulation

    start = positions[0] + np.asarray(config.initial_offset, dtype=float)
    px, py, pz = (float(v) for v in start)
    vx = vy = vz = 0.0
    search = NearestSearch(positions, window)
    idx = nearest_index(positions, start, 0, window)
    ctrl_idx = idx
    obs = (px, py, pz, vx, vy, vz)
    g_raw = g = (0.0, 0.0, 0.0)
    err = (0.0, 0.0, 0.0)
    fmx = fmy = fmz = 0.0

    data = np.empty((n_steps, len(COLUMNS)))
    near = np.empty(n_steps, dtype=np.int64)
    terminated = "duration" if n_steps else "empty"
    count = 0

    # plain-float tables: indexing numpy arrays per step is several times slower
    pos_l = positions.tolist()
    tan_l = tangents.tolist()
    speed_l = speeds.tolist()
    K_l = K.tolist()
    blood_l = np.broadcast_to(blood_mean, (n_samples,)).tolist()

    for k in range(n_steps):
        t = k * dt
        if k % tp_every == 0:
            obs = (px, py, pz, vx, vy, vz)
        if k % refresh_every == 0:
            P_obs = np.array(obs[:3])
            ctrl_idx = search(obs[0], obs[1], obs[2], ctrl_idx)
            V_s = speeds[ctrl_idx] * tangents[ctrl_idx]
            vb_ctrl = blood_mean[ctrl_idx] * modulation(t) * tangents[ctrl_idx]
            raw_cmd, cmd, e = ctrl.update(obs[3:], V_s, P_obs, positions[ctrl_idx],
                                          vb_ctrl, config.limits, t)
            g_raw, g = raw_cmd.G, cmd.G
            err = tuple(e.tolist())
            fmx, fmy, fmz = moment * g[0], moment * g[1], moment * g[2]

        idx = search(px, py, pz, idx)
        tx, ty, tz = tan_l[idx]
        vb = blood_l[idx] if steady else blood_l[idx] * modulation(t)
        rx, ry, rz = vb * tx - vx, vb * ty - vy, vb * tz - vz
        c = drag_coef
        if quadratic:
            c *= math.sqrt(rx * rx + ry * ry + rz * rz)
        spx, spy, spz = pos_l[idx]
        s_speed = speed_l[idx]
        data[k] = (
            t, px, py, pz, vx, vy, vz, spx, spy, spz,
            s_speed * tx, s_speed * ty, s_speed * tz, err[0], err[1], err[2],
            g_raw[0], g_raw[1], g_raw[2], g[0], g[1], g[2], K_l[idx], vb,
            0.0, 0.0, 0.0, 1.0,
        )
        near[k] = idx
        count = k + 1
        dx, dy, dz = px - ex, py - ey, pz - ez
        if dx * dx + dy * dy + dz * dz <= capture2:
            terminated = "captured"
            break

        ax = (fmx + c * rx) * inv_mass
        ay = (fmy + c * ry) * inv_mass
        az = (fmz + c * rz + gz) * inv_mass
        vx += dt * ax
        vy += dt * ay
        vz += dt * az
        px += dt * vx
        py += dt * vy
        pz += dt * vz
        if not (math.isfinite(px) and math.isfinite(py) and math.isfinite(pz)
                and math.isfinite(vx) and math.isfinite(vy) and math.isfinite(vz)):
            partial = Telemetry(data[:count].copy())
            raise NumericalDivergence(
                f"non-finite state after step {k} (t={t:.6g} s): "
                f"P=({px}, {py}, {pz}) V=({vx}, {vy}, {vz})",
                telemetry=partial, step=k,
            )

    data = data[:count]
    near = near[:count]
    tel = Telemetry(data)
    slew = None
    violations = 0
    max_dist = 0.0
    if count >= 2:
        slew = slew_series(tel.time, tel.gradient, config.slew)
        data[:, COLUMNS.index("dbdt_x"):COLUMNS.index("dbdt_z") + 1] = slew.dbdt
    if count:
        dist = np.linalg.norm(tel.position - positions[near], axis=1)
        allowed = radius[near] - sphere.radius
        ok = dist <= allowed
        data[:, COLUMNS.index("fixture_ok")] = ok
        violations = int(np.count_nonzero(~ok))
        max_dist = float(dist.max())
    return ScenarioResult(tel, slew, violations, max_dist, clearance, terminated,
                          samples.length, path)


@dataclass(frozen=True)
class BatchStats:
    per_run_ms: tuple[float, ...]
    identical: bool

    @property
    def min(self) -> float:
        return min(self.per_run_ms)

    @property
    def max(self) -> float:
        return max(self.per_run_ms)

    @property
    def mean(self) -> float:
        return sum(self.per_run_ms) / len(self.per_run_ms)

    def summary(self) -> str:
        return (f"runs={len(self.per_run_ms)} min/mean/max ms: "
                f"{self.min:.3f}/{self.mean:.3f}/{self.max:.3f}")


def batch_run(config: ScenarioConfig, n: int) -> BatchStats:
    """Time ``n`` independent runs of ``config``.

    Path construction is shared (it is immutable); each run gets a fresh
    controller and integrator.  ``identical`` reports whether every run
    produced the same telemetry bytes.
    """
    if n < 1:
        raise InvalidValue(f"n must be >= 1, got {n}")
    path = config.load_path()
    path.samples
    times: list[float] = []
    digests = set()
    for i in range(n):
        t0 = time.perf_counter()
        try:
            result = run_scenario(config, path)
        except Exception as exc:
            partial = BatchStats(tuple(times), len(digests) <= 1) if times else None
            raise BatchError(f"run {i} failed: {exc}", partial) from exc
        times.append((time.perf_counter() - t0) * 1e3)
        digests.add(hashlib.sha256(result.telemetry.data.tobytes()).hexdigest())
    return BatchStats(tuple(times), len(digests) == 1)
