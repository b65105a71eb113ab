import struct

import numpy as np
import pytest

from autosync.io import SnapshotError, format_number, read_pgm, read_snapshot, write_csv, write_preview, write_snapshot


def test_snapshot_roundtrip_bitwise(tmp_path, rng):
    f = rng.standard_normal((7, 13))
    f[0, 0] = np.nan
    f[1, 1] = -0.0
    write_snapshot(f, tmp_path / "a.ordf")
    g = read_snapshot(tmp_path / "a.ordf")
    assert g.shape == f.shape and g.tobytes() == f.tobytes()


def test_snapshot_layout(tmp_path):
    f = np.arange(6, dtype=float).reshape(2, 3)
    write_snapshot(f, tmp_path / "s.ordf")
    raw = (tmp_path / "s.ordf").read_bytes()
    assert len(raw) == 5 + 8 + 48
    assert raw[:5] == b"ORDF1" and struct.unpack("<II", raw[5:13]) == (3, 2)
    assert np.array_equal(np.frombuffer(raw[13:], "<f8"), np.arange(6.0))


def test_snapshot_rejections(tmp_path):
    p = tmp_path / "s.ordf"
    write_snapshot(np.ones((2, 2)), p)
    raw = p.read_bytes()
    p.write_bytes(b"XRDF1" + raw[5:])
    with pytest.raises(SnapshotError):
        read_snapshot(p)
    p.write_bytes(raw[:-3])
    with pytest.raises(SnapshotError):
        read_snapshot(p)
    p.write_bytes(b"ORDF1" + struct.pack("<II", 2**31, 2**31))
    with pytest.raises(SnapshotError):
        read_snapshot(p)


def test_preview_mapping(tmp_path, rng):
    f = rng.random((5, 8))
    write_preview(f, tmp_path / "p.pgm")
    head = (tmp_path / "p.pgm").read_bytes()[:20].split(b"\n")
    assert head[0] == b"P5" and head[1] == b"8 5" and head[2] == b"65535"
    img = read_pgm(tmp_path / "p.pgm")
    assert img.shape == (5, 8)
    assert img.flat[f.argmin()] == 0 and img.flat[f.argmax()] == 65535


def test_preview_constant_and_hidden(tmp_path):
    write_preview(np.full((3, 4), 7.0), tmp_path / "c.pgm")
    img = read_pgm(tmp_path / "c.pgm")
    assert len(np.unique(img)) == 1
    f = np.array([[0.0, 1.0], [9999.0, 2.0]])
    write_preview(f, tmp_path / "s.pgm", sentinel=9999.0)
    img = read_pgm(tmp_path / "s.pgm")
    assert img[1, 0] == 0 and img[1, 1] == 65535 and img[0, 0] == 0
    mask = np.array([[False, True], [False, False]])
    write_preview(np.array([[0.0, 1.0], [0.5, 2.0]]), tmp_path / "m.pgm", mask=mask)
    assert read_pgm(tmp_path / "m.pgm")[0, 1] == 0


def test_csv_precision(tmp_path):
    v = 0.1 + 0.2
    write_csv(tmp_path / "t.csv", [{"a": v, "b": "x"}], ["a", "b"])
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "a,b" and float(lines[1].split(",")[0]) == v
    assert format_number(3) == "3"
