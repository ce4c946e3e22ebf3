"""Per-step telemetry table and its CSV form."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InvalidValue, WriteError

HEADER = (
    "time_s,pcx,pcy,pcz,vcx,vcy,vcz,psx,psy,psz,vsx,vsy,vsz,evx,evy,evz,"
    "gx_raw,gy_raw,gz_raw,gx,gy,gz,k,vblood,dbdt_x,dbdt_y,dbdt_z,fixture_ok"
)
COLUMNS = tuple(HEADER.split(","))


def _col(name):
    return COLUMNS.index(name)


class TelemetryRecord(NamedTuple):
    time: float
    P_c: tuple
    V_c: tuple
    P_s: tuple
    V_s: tuple
    error_v: tuple
    G_raw: tuple
    G: tuple
    K: float
    v_blood: float
    dbdt: tuple
    fixture_ok: bool


@dataclass(eq=False)
class Telemetry:
    """One row per physics step.

    ``P_s``/``V_s`` are the centerline sample nearest the sphere at that step
    and its target velocity; ``error_v`` and the gradients are those of the
    command being held over the step.
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(COLUMNS))

    def __len__(self) -> int:
        return len(self.data)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, _col(name)]
        except ValueError:
            raise KeyError(name) from None

    def _block(self, first: str) -> np.ndarray:
        i = _col(first)
        return self.data[:, i:i + 3]

    @property
    def time(self):
        return self.data[:, 0]

    @property
    def position(self):
        return self._block("pcx")

    @property
    def velocity(self):
        return self._block("vcx")

    @property
    def setpoint_position(self):
        return self._block("psx")

    @property
    def setpoint_velocity(self):
        return self._block("vsx")

    @property
    def error(self):
        return self._block("evx")

    @property
    def gradient_raw(self):
        return self._block("gx_raw")

    @property
    def gradient(self):
        return self._block("gx")

    @property
    def dbdt(self):
        return self._block("dbdt_x")

    @property
    def fixture_ok(self):
        return self.column("fixture_ok") > 0.5

    def tracking_error(self) -> np.ndarray:
        return np.linalg.norm(self.position - self.setpoint_position, axis=1)

    def record(self, i: int) -> TelemetryRecord:
        row = self.data[i]
        tri = lambda name: tuple(row[_col(name):_col(name) + 3].tolist())  # noqa: E731
        return TelemetryRecord(
            float(row[0]), tri("pcx"), tri("vcx"), tri("psx"), tri("vsx"), tri("evx"),
            tri("gx_raw"), tri("gx"), float(row[_col("k")]), float(row[_col("vblood")]),
            tri("dbdt_x"), bool(row[_col("fixture_ok")] > 0.5),
        )

    def __iter__(self):
        return (self.record(i) for i in range(len(self)))


def format_rows(data: np.ndarray) -> str:
    fmt = ",".join(["%.9g"] * (len(COLUMNS) - 1) + ["%d"])
    lines = [HEADER]
    lines.extend(fmt % tuple(row) for row in data.tolist())
    return "\n".join(lines) + "\n"


def write_telemetry(telemetry: Telemetry, path) -> None:
    path = Path(path)
    data = telemetry.data.copy()
    data[:, -1] = data[:, -1] > 0.5
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_rows(data))
    except OSError as exc:
        raise WriteError(f"cannot write telemetry to {path}: {exc}") from exc


def read_telemetry(path) -> Telemetry:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        header = fh.readline().strip()
        if header != HEADER:
            raise InvalidValue(f"{path}: unexpected telemetry header")
        rows = [line for line in fh.read().splitlines() if line.strip()]
    if not rows:
        return Telemetry(np.empty((0, len(COLUMNS))))
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in rows])
    except ValueError as exc:
        raise InvalidValue(f"{path}: {exc}") from None
    if data.shape[1] != len(COLUMNS):
        raise InvalidValue(f"{path}: expected {len(COLUMNS)} columns, got {data.shape[1]}")
    return Telemetry(data)
