"""Scenario config files.

A config is a YAML mapping whose keys carry their units (``tp_ms``,
``vessel_radius_mm`` ...).  Unknown keys are rejected so that typos never fall
back silently to defaults.  Relative file references resolve against the
config file's directory.
"""
from __future__ import annotations

import logging
import math
import re
from pathlib import Path
from typing import Any

import yaml

from .controller import ControllerGains
from .engine import ScenarioConfig
from .errors import ConfigError, MRBotError
from .hemodynamics import (
    DEFAULT_HARMONICS,
    FlowWaveform,
    VelocityProfileParams,
    VesselSegment,
    load_waveform_profile,
)
from .magnetics import GradientLimits, SphereSpec
from .safety import SlewParams

log = logging.getLogger(__name__)

TOP_KEYS = {
    "waypoints", "duration_s", "path_step", "tp_ms", "dt_ms", "initial_offset_mm",
    "capture_radius_mm", "include_gravity",
    "flow", "vessel", "sphere", "controller", "profile", "gradient", "slew",
}
SECTION_KEYS = {
    "flow": {"regime", "mean_flow_ml_per_s", "heart_rate_bpm", "harmonics", "waveform_file",
             "blood_density_kg_per_m3", "clamp_negative"},
    "vessel": {"vessel_radius_mm"},
    "sphere": {"sphere_radius_mm", "magnetization_a_per_m", "material_density_kg_per_m3",
               "drag_coefficient"},
    "controller": {"kp", "ki", "kd", "kr", "delta_s", "drag_mode", "controller_mode",
                   "anti_windup", "window_samples"},
    "profile": {"v0_m_per_s", "k0_per_m", "r0", "r_gc_mm", "v_min_m_per_s"},
    "gradient": {"max_amplitude_mt_per_m", "refresh_ms"},
    "slew": {"isocenter_distance_m", "rise_time_ms", "dbdt_limit_t_per_s"},
}
REQUIRED = ("waypoints", "duration_s")


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 only reads 1.5e+6 as a float; accept 1.5e6 and 2e-3 as well
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*)?(?:\.[0-9_]*)?[eE][-+]?[0-9]+$""", re.X),
    list("-+0123456789."),
)


def _key_lines(node, prefix=()) -> dict[tuple, int]:
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = prefix + (k.value,)
            lines[key] = k.start_mark.line + 1
            lines.update(_key_lines(v, key))
    return lines


class _Reader:
    def __init__(self, raw: dict, lines: dict, source: str):
        self.raw = raw
        self.lines = lines
        self.source = source

    def where(self, *key) -> str:
        line = self.lines.get(tuple(key))
        dotted = ".".join(key)
        return f"{self.source}:{line}: {dotted}" if line else f"{self.source}: {dotted}"

    def fail(self, key: tuple, msg: str):
        raise ConfigError(f"{self.where(*key)}: {msg}")

    def section(self, name) -> dict:
        sec = self.raw.get(name, {})
        if sec is None:
            return {}
        if not isinstance(sec, dict):
            self.fail((name,), "expected a mapping")
        return sec

    def number(self, key: tuple, default=None, positive=False, nonneg=False):
        d = self.raw if len(key) == 1 else self.section(key[0])
        if key[-1] not in d:
            return default
        val = d[key[-1]]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(key, f"expected a number, got {val!r}")
        val = float(val)
        if not math.isfinite(val):
            self.fail(key, "must be finite")
        if positive and not val > 0:
            self.fail(key, f"must be > 0, got {val:g}")
        if nonneg and val < 0:
            self.fail(key, f"must be >= 0, got {val:g}")
        return val

    def flag(self, key: tuple, default: bool) -> bool:
        d = self.raw if len(key) == 1 else self.section(key[0])
        if key[-1] not in d:
            return default
        val = d[key[-1]]
        if isinstance(val, bool):
            return val
        if isinstance(val, str) and val.lower() in ("on", "off"):
            return val.lower() == "on"
        self.fail(key, f"expected true/false or on/off, got {val!r}")

    def choice(self, key: tuple, default: str, options) -> str:
        d = self.raw if len(key) == 1 else self.section(key[0])
        val = d.get(key[-1], default)
        if val not in options:
            self.fail(key, f"expected one of {', '.join(options)}, got {val!r}")
        return val


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, base_dir=path.parent, source=str(path))


def parse_config_text(text: str, base_dir=".", source="<config>") -> ScenarioConfig:
    try:
        raw = yaml.load(text, Loader=_Loader)
        lines = _key_lines(yaml.compose(text, Loader=_Loader)) if raw else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: malformed config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: config must be a mapping of keys to values")
    r = _Reader(raw, lines, source)
    base_dir = Path(base_dir)

    for key in raw:
        if key not in TOP_KEYS:
            r.fail((str(key),), "unknown key")
    for name, allowed in SECTION_KEYS.items():
        for key in r.section(name):
            if key not in allowed:
                r.fail((name, str(key)), "unknown key")
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"{source}: missing required key {key!r}")

    try:
        cfg = _build(r, base_dir)
        cfg.validate()
    except ConfigError:
        raise
    except MRBotError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return cfg


def _build(r: _Reader, base_dir: Path) -> ScenarioConfig:
    wp = r.raw["waypoints"]
    if not isinstance(wp, str):
        r.fail(("waypoints",), "expected a file path")
    wp_path = (base_dir / wp).resolve()
    if not wp_path.is_file():
        r.fail(("waypoints",), f"file not found: {wp_path}")

    flow_sec = r.section("flow")
    regime = r.choice(("flow", "regime"), "steady", ("steady", "normal", "fast"))
    harmonics = DEFAULT_HARMONICS
    if "harmonics" in flow_sec:
        try:
            harmonics = tuple((float(a), float(p)) for a, p in flow_sec["harmonics"])
        except (TypeError, ValueError):
            r.fail(("flow", "harmonics"), "expected a list of [amplitude, phase_rad] pairs")
    profile = None
    if "waveform_file" in flow_sec:
        profile = load_waveform_profile(base_dir / str(flow_sec["waveform_file"]))
    flow = FlowWaveform(
        regime=regime,
        mean_flow=r.number(("flow", "mean_flow_ml_per_s"), 1.0, nonneg=True) * 1e-6,
        heart_rate=r.number(("flow", "heart_rate_bpm"), None, positive=True),
        harmonics=harmonics,
        profile=profile,
        clamp_negative=r.flag(("flow", "clamp_negative"), True),
    )
    density = r.number(("flow", "blood_density_kg_per_m3"), 1.025, positive=True)

    vessel_sec = r.section("vessel")
    vr = vessel_sec.get("vessel_radius_mm", 3.0)
    if isinstance(vr, list):
        try:
            radius = tuple(float(v) * 1e-3 for v in vr)
        except (TypeError, ValueError):
            r.fail(("vessel", "vessel_radius_mm"), "expected numbers")
    else:
        radius = r.number(("vessel", "vessel_radius_mm"), 3.0, positive=True) * 1e-3

    sphere = SphereSpec(
        radius=r.number(("sphere", "sphere_radius_mm"), 0.3, positive=True) * 1e-3,
        magnetization=r.number(("sphere", "magnetization_a_per_m"), 1.9496e6, positive=True),
        material_density=r.number(("sphere", "material_density_kg_per_m3"), 8120.0,
                                  positive=True),
        drag_coefficient=r.number(("sphere", "drag_coefficient"), 0.47, positive=True),
    )
    try:
        VesselSegment(radius).validate(sphere.radius)
    except MRBotError as exc:
        r.fail(("vessel", "vessel_radius_mm"), str(exc))

    refresh = r.number(("gradient", "refresh_ms"), 100.0, positive=True) * 1e-3
    limits = GradientLimits(
        max_amplitude=r.number(("gradient", "max_amplitude_mt_per_m"), 40.0,
                               positive=True) * 1e-3,
        refresh_interval=refresh,
    )

    gains = ControllerGains(
        kp=r.number(("controller", "kp"), 2.0, nonneg=True),
        ki=r.number(("controller", "ki"), 1.0, nonneg=True),
        kd=r.number(("controller", "kd"), 0.01, nonneg=True),
        kr=r.number(("controller", "kr"), 0.7, nonneg=True),
        delta=r.number(("controller", "delta_s"), refresh, positive=True),
    )
    window = r.number(("controller", "window_samples"), 200, positive=True)
    if window != int(window):
        r.fail(("controller", "window_samples"), "must be an integer")

    profile_params = VelocityProfileParams(
        v0=r.number(("profile", "v0_m_per_s"), 0.015, positive=True),
        k0=r.number(("profile", "k0_per_m"), 20.0, positive=True),
        r0=r.number(("profile", "r0"), 1.0, positive=True),
        r_gc=r.number(("profile", "r_gc_mm"), sphere.radius * 1e3) * 1e-3,
        v_min=r.number(("profile", "v_min_m_per_s"), 1e-4, nonneg=True),
    )

    slew = SlewParams(
        isocenter_distance=r.number(("slew", "isocenter_distance_m"), 0.5, positive=True),
        rise_time=r.number(("slew", "rise_time_ms"), refresh * 1e3, positive=True) * 1e-3,
        dbdt_limit=r.number(("slew", "dbdt_limit_t_per_s"), 20.0, positive=True),
    )

    offset = r.raw.get("initial_offset_mm", [0.0, 0.0, 0.0])
    try:
        offset = tuple(float(v) * 1e-3 for v in offset)
    except (TypeError, ValueError):
        r.fail(("initial_offset_mm",), "expected three numbers")
    if len(offset) != 3:
        r.fail(("initial_offset_mm",), "expected three numbers")
    capture = r.number(("capture_radius_mm",), None, positive=True)

    return ScenarioConfig(
        waypoints=wp_path,
        duration=r.number(("duration_s",), positive=True),
        path_step=r.number(("path_step",), 1e-4, positive=True),
        flow=flow,
        blood_density=density,
        vessel=VesselSegment(radius),
        sphere=sphere,
        gains=gains,
        controller_mode=r.choice(("controller", "controller_mode"), "paper",
                                 ("paper", "dimensional")),
        drag_mode=r.choice(("controller", "drag_mode"), "paper-linear",
                           ("paper-linear", "quadratic")),
        anti_windup=r.flag(("controller", "anti_windup"), True),
        window=int(window),
        profile=profile_params,
        limits=limits,
        slew=slew,
        tp=r.number(("tp_ms",), 100.0, positive=True) * 1e-3,
        dt=r.number(("dt_ms",), 1.0, positive=True) * 1e-3,
        initial_offset=offset,
        capture_radius=None if capture is None else capture * 1e-3,
        include_gravity=r.flag(("include_gravity",), False),
    )


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    """Fully resolved config in file form (every default spelled out)."""
    s = cfg.sphere
    radius = cfg.vessel.radius
    flow = {
        "regime": cfg.flow.regime,
        "mean_flow_ml_per_s": cfg.flow.mean_flow * 1e6,
        "blood_density_kg_per_m3": cfg.blood_density,
        "clamp_negative": cfg.flow.clamp_negative,
    }
    if cfg.flow.regime != "steady":
        flow["heart_rate_bpm"] = cfg.flow.heart_rate
        if cfg.flow.profile is None:
            flow["harmonics"] = [list(h) for h in cfg.flow.harmonics]
    return {
        "waypoints": str(cfg.waypoints) if isinstance(cfg.waypoints, (str, Path)) else "<inline>",
        "duration_s": cfg.duration,
        "path_step": cfg.path_step,
        "tp_ms": cfg.tp * 1e3,
        "dt_ms": cfg.dt * 1e3,
        "initial_offset_mm": [v * 1e3 for v in cfg.initial_offset],
        "capture_radius_mm": (cfg.capture_radius if cfg.capture_radius is not None
                              else 2 * s.radius) * 1e3,
        "include_gravity": cfg.include_gravity,
        "flow": flow,
        "vessel": {"vessel_radius_mm": ([v * 1e3 for v in radius] if isinstance(radius, tuple)
                                        else radius * 1e3)},
        "sphere": {
            "sphere_radius_mm": s.radius * 1e3,
            "magnetization_a_per_m": s.magnetization,
            "material_density_kg_per_m3": s.material_density,
            "drag_coefficient": s.drag_coefficient,
        },
        "controller": {
            "kp": cfg.gains.kp, "ki": cfg.gains.ki, "kd": cfg.gains.kd, "kr": cfg.gains.kr,
            "delta_s": cfg.gains.delta,
            "controller_mode": cfg.controller_mode,
            "drag_mode": cfg.drag_mode,
            "anti_windup": cfg.anti_windup,
            "window_samples": cfg.window,
        },
        "profile": {
            "v0_m_per_s": cfg.profile.v0,
            "k0_per_m": cfg.profile.k0,
            "r0": cfg.profile.r0,
            "r_gc_mm": cfg.profile.r_gc * 1e3,
            "v_min_m_per_s": cfg.profile.v_min,
        },
        "gradient": {
            "max_amplitude_mt_per_m": cfg.limits.max_amplitude * 1e3,
            "refresh_ms": cfg.limits.refresh_interval * 1e3,
        },
        "slew": {
            "isocenter_distance_m": cfg.slew.isocenter_distance,
            "rise_time_ms": cfg.slew.rise_time * 1e3,
            "dbdt_limit_t_per_s": cfg.slew.dbdt_limit,
        },
    }


def dump_config(cfg: ScenarioConfig) -> str:
    text = yaml.safe_dump(config_to_dict(cfg), sort_keys=False)
    if cfg.flow.regime != "steady" and cfg.flow.profile is not None:
        tf, vf = cfg.flow.profile
        pairs = ", ".join(f"{a:g}:{b:.6g}" for a, b in zip(tf, vf))
        text += f"# waveform profile (normalised, period fraction:speed fraction): {pairs}\n"
    return text


def log_config(cfg: ScenarioConfig) -> str:
    text = dump_config(cfg)
    for line in text.splitlines():
        log.info("config %s", line)
    return text
