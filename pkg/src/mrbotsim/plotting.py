"""Deterministic multi-panel SVG line charts of run telemetry.

No plotting library is involved: output must be byte-identical for identical
input, so coordinates are written with fixed precision and nothing
time-dependent ends up in the document.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from html import escape
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import PlotError, WriteError
from .telemetry import COLUMNS, Telemetry

SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
MAX_POINTS = 1500


@dataclass(frozen=True)
class Panel:
    title: str
    y: str
    ylabel: str
    x: str = "time_s"           # a telemetry column, or "index" for the row number
    xlabel: str = "time (s)"
    scale: float = 1.0


@dataclass(frozen=True)
class PlotSpec:
    panels: tuple[Panel, ...] = field(default_factory=lambda: DEFAULT_PANELS)
    columns: int = 4
    panel_width: int = 340
    panel_height: int = 230

    def validate(self) -> None:
        for p in self.panels:
            for col in (p.x, p.y):
                if col != "index" and col not in COLUMNS:
                    raise PlotError(f"panel {p.title!r} references unknown column {col!r}")


DEFAULT_PANELS = (
    Panel("Path curvature", "k", "K (1/m)", x="index", xlabel="record index"),
    Panel("Blood flow", "vblood", "v blood (mm/s)", scale=1e3),
    Panel("Gradient X", "gx", "Gx (mT/m)", scale=1e3),
    Panel("Gradient Y", "gy", "Gy (mT/m)", scale=1e3),
    Panel("Gradient Z", "gz", "Gz (mT/m)", scale=1e3),
    Panel("dB/dt X", "dbdt_x", "dB/dt x (T/s)"),
    Panel("dB/dt Y", "dbdt_y", "dB/dt y (T/s)"),
    Panel("dB/dt Z", "dbdt_z", "dB/dt z (T/s)"),
)


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _tick(v: float) -> str:
    s = f"{v:.3g}"
    return "0" if s in ("-0", "0") else s


def _decimate(x: np.ndarray, y: np.ndarray):
    n = len(x)
    if n <= MAX_POINTS:
        return x, y
    # keep the extreme value of each bucket so spikes survive decimation
    edges = np.linspace(0, n, MAX_POINTS // 2 + 1).astype(int)
    keep = []
    for a, b in zip(edges[:-1], edges[1:]):
        seg = y[a:b]
        i, j = a + int(np.argmin(seg)), a + int(np.argmax(seg))
        keep.extend(sorted({i, j}))
    keep = np.asarray(keep)
    return x[keep], y[keep]


def _series(tel: Telemetry, panel: Panel):
    y = tel.column(panel.y) * panel.scale
    x = np.arange(len(tel), dtype=float) if panel.x == "index" else tel.column(panel.x)
    return _decimate(x, y)


def _range(values: list[np.ndarray]) -> tuple[float, float]:
    lo = min(float(v.min()) for v in values)
    hi = max(float(v.max()) for v in values)
    if hi - lo < 1e-300:
        pad = abs(hi) * 0.1 or 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _panel_svg(panel: Panel, data, labels, ox, oy, w, h) -> list[str]:
    left, right, top, bottom = 62, 12, 26, 40
    pw, ph = w - left - right, h - top - bottom
    xs = [d[0] for d in data]
    ys = [d[1] for d in data]
    x0, x1 = _range(xs)
    y0, y1 = _range(ys)

    def px(v):
        return ox + left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return oy + top + ph - (v - y0) / (y1 - y0) * ph

    out = [
        '<g class="panel">',
        f'<text x="{_fmt(ox + left + pw / 2)}" y="{_fmt(oy + 16)}" text-anchor="middle" '
        f'font-size="13" font-weight="bold">{escape(panel.title)}</text>',
        f'<rect x="{_fmt(ox + left)}" y="{_fmt(oy + top)}" width="{_fmt(pw)}" '
        f'height="{_fmt(ph)}" fill="none" stroke="#444" stroke-width="1"/>',
    ]
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{_fmt(px(xv))}" y="{_fmt(oy + top + ph + 14)}" '
                   f'text-anchor="middle" font-size="9">{_tick(xv)}</text>')
        out.append(f'<text x="{_fmt(ox + left - 4)}" y="{_fmt(py(yv) + 3)}" '
                   f'text-anchor="end" font-size="9">{_tick(yv)}</text>')
    out.append(f'<text x="{_fmt(ox + left + pw / 2)}" y="{_fmt(oy + h - 8)}" '
               f'text-anchor="middle" font-size="10">{escape(panel.xlabel)}</text>')
    cy = oy + top + ph / 2
    cx = ox + 14
    out.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" font-size="10" '
               f'transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">{escape(panel.ylabel)}</text>')
    for k, ((x, y), label) in enumerate(zip(data, labels)):
        color = SERIES_COLORS[k % len(SERIES_COLORS)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" '
                   f'points="{pts}"><title>{escape(label)}</title></polyline>')
    out.append("</g>")
    return out


def render_plots(telemetry_sets: Sequence[Telemetry], labels: Sequence[str],
                 spec: PlotSpec | None = None, path=None) -> str:
    """Render one panel per spec entry with one series per telemetry set."""
    spec = spec or PlotSpec()
    spec.validate()
    if not telemetry_sets:
        raise PlotError("no telemetry to plot")
    if len(labels) != len(telemetry_sets):
        raise PlotError("need one label per telemetry set")
    for tel, label in zip(telemetry_sets, labels):
        if len(tel) == 0:
            raise PlotError(f"telemetry {label!r} is empty")

    ncol = spec.columns
    nrow = -(-len(spec.panels) // ncol)
    w, h = spec.panel_width, spec.panel_height
    legend_h = 28
    width, height = ncol * w, nrow * h + legend_h
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    x = 12
    for k, label in enumerate(labels):
        color = SERIES_COLORS[k % len(SERIES_COLORS)]
        out.append(f'<line x1="{x}" y1="14" x2="{x + 24}" y2="14" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{x + 30}" y="18" font-size="12">{escape(label)}</text>')
        x += 40 + 8 * len(label)
    for i, panel in enumerate(spec.panels):
        r, c = divmod(i, ncol)
        data = [_series(tel, panel) for tel in telemetry_sets]
        out.extend(_panel_svg(panel, data, labels, c * w, legend_h + r * h, w, h))
    out.append("</svg>")
    doc = "\n".join(out) + "\n"
    if path is not None:
        try:
            Path(path).write_text(doc, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise WriteError(f"cannot write plot to {path}: {exc}") from exc
    return doc
