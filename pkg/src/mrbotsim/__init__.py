"""Closed-loop simulation of an MRI-gradient-propelled ferromagnetic sphere."""
from .config import parse_config
from .controller import (
    ControllerGains,
    ControllerState,
    feedforward,
    gradient_command,
    nearest_setpoint,
    pid_step,
    velocity_error,
)
from .engine import ScenarioConfig, SimState, batch_run, run_scenario, step_dynamics
from .hemodynamics import (
    FlowWaveform,
    VelocityProfileParams,
    VesselSegment,
    drag_force,
    flow_velocity,
    velocity_setpoint,
)
from .magnetics import (
    GradientCommand,
    GradientLimits,
    SphereSpec,
    clamp_gradient,
    magnetic_force,
    magnetic_moment,
    sphere_volume,
)
from .path_geometry import (
    CenterlinePath,
    Waypoint,
    build_pchip,
    curvature,
    discretize,
    evaluate_path,
    read_waypoints,
)
from .plotting import PlotSpec, render_plots
from .safety import SlewParams, check_slew_series, check_virtual_fixture, slew_rate
from .telemetry import Telemetry, read_telemetry, write_telemetry

__version__ = "0.1.0"

__all__ = [
    "CenterlinePath",
    "ControllerGains",
    "ControllerState",
    "FlowWaveform",
    "GradientCommand",
    "GradientLimits",
    "PlotSpec",
    "ScenarioConfig",
    "SimState",
    "SlewParams",
    "SphereSpec",
    "Telemetry",
    "VelocityProfileParams",
    "VesselSegment",
    "Waypoint",
    "batch_run",
    "build_pchip",
    "check_slew_series",
    "check_virtual_fixture",
    "clamp_gradient",
    "curvature",
    "discretize",
    "drag_force",
    "evaluate_path",
    "feedforward",
    "flow_velocity",
    "gradient_command",
    "magnetic_force",
    "magnetic_moment",
    "nearest_setpoint",
    "parse_config",
    "pid_step",
    "read_telemetry",
    "read_waypoints",
    "render_plots",
    "run_scenario",
    "slew_rate",
    "sphere_volume",
    "step_dynamics",
    "velocity_error",
    "velocity_setpoint",
    "write_telemetry",
]
