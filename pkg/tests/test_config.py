import pytest
import yaml

from mrbotsim.config import config_to_dict, dump_config, parse_config, parse_config_text
from mrbotsim.errors import ConfigError
from mrbotsim.path_geometry import Waypoint, write_waypoints

from conftest import SCENARIOS


@pytest.fixture
def wp_dir(tmp_path):
    write_waypoints([Waypoint(0, 0, 0, 0), Waypoint(1, 0.05, 0, 0)], tmp_path / "w.csv")
    return tmp_path


def parse(text, base):
    return parse_config_text(text, base_dir=base, source="t.cfg")


def test_minimal_config_defaults(wp_dir):
    cfg = parse("waypoints: w.csv\nduration_s: 5\n", wp_dir)
    assert cfg.tp == pytest.approx(0.1)
    assert cfg.dt == pytest.approx(1e-3)
    assert cfg.sphere.radius == pytest.approx(3e-4)
    assert cfg.sphere.magnetization == 1.9496e6
    assert cfg.gains.kp == 2 and cfg.gains.ki == 1 and cfg.gains.kd == 0.01
    assert cfg.gains.kr == 0.7 and cfg.gains.delta == pytest.approx(0.1)
    assert cfg.limits.max_amplitude == pytest.approx(0.040)
    assert cfg.slew.rise_time == pytest.approx(0.1)
    assert cfg.blood_density == 1.025
    assert cfg.controller_mode == "paper"
    assert cfg.waypoints == (wp_dir / "w.csv").resolve()


def test_tp_ms(wp_dir):
    assert parse("waypoints: w.csv\nduration_s: 5\ntp_ms: 200\n", wp_dir).tp == pytest.approx(0.2)


def test_dt_above_tp_rejected(wp_dir):
    with pytest.raises(ConfigError, match="exceeds tp"):
        parse("waypoints: w.csv\nduration_s: 5\ndt_ms: 300\ntp_ms: 200\n", wp_dir)


@pytest.mark.parametrize("text, needle", [
    ("waypoints: w.csv\nduration_s: 5\ntp_msec: 200\n", "t.cfg:3: tp_msec: unknown key"),
    ("waypoints: w.csv\nduration_s: 5\nflow:\n  regim: normal\n", "t.cfg:4: flow.regim: unknown key"),
    ("waypoints: w.csv\n", "missing required key 'duration_s'"),
    ("duration_s: 5\n", "missing required key 'waypoints'"),
    ("waypoints: w.csv\nduration_s: five\n", "t.cfg:2: duration_s: expected a number"),
    ("waypoints: w.csv\nduration_s: 5\nsphere:\n  sphere_radius_mm: -1\n", "must be > 0"),
    ("waypoints: w.csv\nduration_s: 5\nvessel:\n  vessel_radius_mm: 0.2\n", "sphere radius"),
    ("waypoints: nope.csv\nduration_s: 5\n", "file not found"),
    ("waypoints: w.csv\nduration_s: 5\nflow:\n  regime: sprint\n", "expected one of"),
    ("waypoints: w.csv\nduration_s: 5\ncontroller:\n  anti_windup: maybe\n", "on/off"),
    ("- a\n- b\n", "mapping"),
    ("waypoints: [unclosed\n", "malformed"),
])
def test_config_errors(wp_dir, text, needle):
    with pytest.raises(ConfigError) as info:
        parse(text, wp_dir)
    assert needle in str(info.value)


def test_scientific_notation_without_sign(wp_dir):
    cfg = parse("waypoints: w.csv\nduration_s: 5\nsphere:\n  magnetization_a_per_m: 1.5e6\n", wp_dir)
    assert cfg.sphere.magnetization == 1.5e6


def test_waveform_file(wp_dir):
    (wp_dir / "wave.csv").write_text("time_fraction,velocity_fraction\n0,1\n0.5,3\n")
    cfg = parse("waypoints: w.csv\nduration_s: 5\nflow:\n  regime: normal\n"
                "  waveform_file: wave.csv\n", wp_dir)
    assert cfg.flow.profile is not None
    assert "waveform profile" in dump_config(cfg)


def test_on_off_flag(wp_dir):
    cfg = parse("waypoints: w.csv\nduration_s: 5\ncontroller:\n  anti_windup: off\n", wp_dir)
    assert cfg.anti_windup is False


@pytest.mark.parametrize("name", ["steady.cfg", "normal.cfg", "fast.cfg"])
def test_shipped_scenarios_round_trip(name, tmp_path):
    cfg = parse_config(SCENARIOS / name)
    assert cfg.flow.regime == name.split(".")[0]
    dumped = tmp_path / "again.cfg"
    dumped.write_text(dump_config(cfg))
    again = parse_config(dumped)
    assert config_to_dict(again) == config_to_dict(cfg)
    assert yaml.safe_load(dump_config(cfg))["tp_ms"] == pytest.approx(100.0)
