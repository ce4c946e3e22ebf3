from dataclasses import replace
from pathlib import Path

import pytest

from mrbotsim.config import parse_config
from mrbotsim.engine import run_scenario

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


@pytest.fixture(scope="session")
def nominal_config():
    return parse_config(SCENARIOS / "steady.cfg")


@pytest.fixture(scope="session")
def nominal_path(nominal_config):
    path = nominal_config.load_path()
    path.samples
    return path


@pytest.fixture(scope="session")
def nominal_result(nominal_config, nominal_path):
    return run_scenario(nominal_config, nominal_path)


@pytest.fixture(scope="session")
def nominal_tp200(nominal_config, nominal_path):
    return run_scenario(replace(nominal_config, tp=0.2), nominal_path)


# filled by test_acceptance; echoed after the run so the lines survive -q and capture
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
