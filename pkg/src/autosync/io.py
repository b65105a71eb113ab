"""Snapshot, PGM preview and CSV formats."""
import csv
import os
import struct

import numpy as np

__all__ = [
    "SnapshotError",
    "MAGIC",
    "write_snapshot",
    "read_snapshot",
    "write_preview",
    "read_pgm",
    "write_csv",
    "format_number",
]

MAGIC = b"ORDF1"
_HEADER = struct.Struct("<II")
_MAX_CELLS = 1 << 31


class SnapshotError(ValueError):
    pass


def write_snapshot(f, path):
    """Binary field: magic, little-endian uint32 nx and ny, then float64 cells row-major."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError("snapshots hold 2-D fields")
    ny, nx = f.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(nx, ny))
        fh.write(np.ascontiguousarray(f, dtype="<f8").tobytes())


def read_snapshot(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:len(MAGIC)] != MAGIC:
        raise SnapshotError(f"{path}: bad magic {data[:len(MAGIC)]!r}")
    if len(data) < len(MAGIC) + _HEADER.size:
        raise SnapshotError(f"{path}: truncated header")
    nx, ny = _HEADER.unpack_from(data, len(MAGIC))
    if nx * ny > _MAX_CELLS:
        raise SnapshotError(f"{path}: dimensions {nx}x{ny} overflow")
    payload = data[len(MAGIC) + _HEADER.size:]
    if len(payload) != 8 * nx * ny:
        raise SnapshotError(f"{path}: expected {8 * nx * ny} payload bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(ny, nx)


def write_preview(f, path, mask=None, sentinel=None):
    """16-bit binary PGM; [min, max] of the visible cells maps to [0, 65535].

    Hidden cells (``mask`` true, or equal to ``sentinel``) are drawn black.
    A constant field renders mid-gray.
    """
    f = np.asarray(f, dtype=np.float64)
    hidden = np.zeros(f.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).copy()
    if sentinel is not None:
        hidden |= f == sentinel
    visible = f[~hidden]
    img = np.zeros(f.shape, dtype=">u2")
    if visible.size:
        lo, hi = visible.min(), visible.max()
        if hi > lo:
            scaled = np.rint((f - lo) / (hi - lo) * 65535.0)
        else:
            scaled = np.full(f.shape, 32768.0)
        img[~hidden] = np.clip(scaled, 0, 65535)[~hidden]
    ny, nx = f.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n65535\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path):
    """Minimal reader for the previews written above (no comments in header)."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    nx, ny, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    dtype = ">u2" if maxval > 255 else "u1"
    body = parts[4]
    return np.frombuffer(body, dtype=dtype, count=nx * ny).reshape(ny, nx)


def format_number(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, rows, columns=None):
    """Write dict rows with a header; floats use 17 significant digits."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([format_number(row.get(c, "")) for c in columns])
