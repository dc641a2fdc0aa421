"""Binary field snapshots.

Layout (little-endian): magic b"PHFL", u32 version = 1, u32 nx, u32 ny,
f64 dx, f64 dy, f64 time, then nx*ny (re, im) f64 pairs row-major.
Round-trips are bit-identical.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from ..errors import SnapshotFormatError
from ..grids import ComplexField, GridSpec

MAGIC = b"PHFL"
VERSION = 1
_HEADER = struct.Struct("<4sIII ddd".replace(" ", ""))


def write_snapshot(field: ComplexField, path, time=0.0):
    grid = field.grid
    header = _HEADER.pack(MAGIC, VERSION, grid.nx, grid.ny,
                          grid.dx, grid.dy, float(time))
    payload = np.ascontiguousarray(field.data, dtype="<c16").tobytes()
    _atomic_write_bytes(path, header + payload)


def read_snapshot(path):
    """Returns (ComplexField, time)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(
            f"file too short for a snapshot header ({len(raw)} bytes)")
    magic, version, nx, ny, dx, dy, time = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic bytes {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    expected = _HEADER.size + 16 * nx * ny
    if len(raw) != expected:
        raise SnapshotFormatError(
            f"truncated or padded snapshot: {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(nx, ny)
    grid = GridSpec(nx=int(nx), ny=int(ny), lx=nx * dx, ly=ny * dy)
    return ComplexField(grid, data.copy()), time


def _atomic_write_bytes(path, blob: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    _atomic_write_bytes(path, text.encode("utf-8"))
