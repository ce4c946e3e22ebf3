import numpy as np
import pytest

from mrbotsim.errors import InvalidValue, WriteError
from mrbotsim.telemetry import COLUMNS, HEADER, Telemetry, read_telemetry, write_telemetry

GOLDEN_HEADER = (
    "time_s,pcx,pcy,pcz,vcx,vcy,vcz,psx,psy,psz,vsx,vsy,vsz,evx,evy,evz,"
    "gx_raw,gy_raw,gz_raw,gx,gy,gz,k,vblood,dbdt_x,dbdt_y,dbdt_z,fixture_ok"
)


def test_header_is_frozen():
    assert HEADER == GOLDEN_HEADER
    assert len(COLUMNS) == 28


def test_empty_telemetry_writes_header_only(tmp_path):
    f = tmp_path / "t.csv"
    write_telemetry(Telemetry(np.empty((0, 28))), f)
    assert f.read_bytes() == (GOLDEN_HEADER + "\n").encode()
    assert len(read_telemetry(f)) == 0


def test_round_trip_nine_digits(tmp_path):
    rng = np.random.default_rng(7)
    data = rng.normal(size=(50, 28)) * 10.0 ** rng.integers(-9, 3, size=(50, 28))
    data[:, -1] = rng.integers(0, 2, size=50)
    f = tmp_path / "t.csv"
    write_telemetry(Telemetry(data), f)
    back = read_telemetry(f).data
    assert np.allclose(back, data, rtol=1e-8, atol=0)
    assert np.array_equal(back[:, -1], data[:, -1])
    lines = f.read_text().splitlines()
    assert lines[0] == GOLDEN_HEADER
    assert all(line.endswith((",0", ",1")) for line in lines[1:])
    assert b"\r" not in f.read_bytes()


def test_nominal_row_count(nominal_result, tmp_path):
    f = tmp_path / "t.csv"
    write_telemetry(nominal_result.telemetry, f)
    assert len(f.read_text().splitlines()) == len(nominal_result.telemetry) + 1


def test_accessors(nominal_result):
    tel = nominal_result.telemetry
    assert tel.position.shape == (len(tel), 3)
    rec = tel.record(5)
    assert rec.time == pytest.approx(0.005)
    assert rec.P_c == tuple(tel.position[5])
    assert rec.fixture_ok is True
    with pytest.raises(KeyError):
        tel.column("nope")


def test_write_failure(tmp_path):
    with pytest.raises(WriteError):
        write_telemetry(Telemetry(np.zeros((1, 28))), tmp_path / "missing" / "t.csv")


def test_read_rejects_wrong_header(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("a,b\n1,2\n")
    with pytest.raises(InvalidValue):
        read_telemetry(f)
