import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from mrbotsim.errors import PlotError
from mrbotsim.plotting import DEFAULT_PANELS, SERIES_COLORS, Panel, PlotSpec, render_plots
from mrbotsim.telemetry import Telemetry

NS = "{http://www.w3.org/2000/svg}"


def polylines(svg):
    return ET.fromstring(svg.encode()).iter(f"{NS}polyline")


def test_single_variant(nominal_result):
    svg = render_plots([nominal_result.telemetry], ["Tp = 100 ms"])
    lines = list(polylines(svg))
    assert len(lines) == len(DEFAULT_PANELS)
    assert {pl.get("stroke") for pl in lines} == {SERIES_COLORS[0]}
    assert "Tp = 100 ms" in svg


def test_two_variants_blue_and_red(nominal_result, nominal_tp200):
    svg = render_plots([nominal_result.telemetry, nominal_tp200.telemetry],
                       ["Tp = 100 ms", "Tp = 200 ms"])
    strokes = [pl.get("stroke") for pl in polylines(svg)]
    assert SERIES_COLORS[:2] == ("#1f77b4", "#d62728")
    assert strokes.count("#1f77b4") == strokes.count("#d62728") == len(DEFAULT_PANELS)


def test_byte_identical(nominal_result, tmp_path):
    a = render_plots([nominal_result.telemetry], ["a"], path=tmp_path / "a.svg")
    b = render_plots([nominal_result.telemetry], ["a"], path=tmp_path / "b.svg")
    assert a == b
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_decimation_keeps_spikes():
    data = np.zeros((20_000, 28))
    data[:, 0] = np.arange(20_000) * 1e-3
    data[12_345, 19] = 5.0
    svg = render_plots([Telemetry(data)], ["x"],
                       PlotSpec(panels=(Panel("gx", "gx", "Gx"),), columns=1))
    pts = next(polylines(svg)).get("points").split()
    assert len(pts) <= 1500
    ys = [float(p.split(",")[1]) for p in pts]
    assert len(set(ys)) == 2


def test_constant_series_renders():
    svg = render_plots([Telemetry(np.ones((3, 28)))], ["flat"])
    assert "nan" not in svg.lower()
    assert not re.search(r"inf\b", svg)


def test_errors(nominal_result):
    with pytest.raises(PlotError, match="unknown column"):
        render_plots([nominal_result.telemetry], ["a"], PlotSpec(panels=(Panel("x", "nope", ""),)))
    with pytest.raises(PlotError):
        render_plots([], [])
    with pytest.raises(PlotError):
        render_plots([nominal_result.telemetry], ["a", "b"])
    with pytest.raises(PlotError, match="empty"):
        render_plots([Telemetry(np.empty((0, 28)))], ["a"])
