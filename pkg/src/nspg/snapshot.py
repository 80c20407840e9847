"""Binary snapshot format for scalar fields.

Layout (all little-endian):

    bytes 0..3   magic "NSPF"
    u32          format version (currently 1)
    u32          dimension d
    u32 * d      points per axis
    f64 * d      period per axis
    f64 * N      physical values, row-major (C order)

The payload stores physical grid values, so a snapshot is readable without
any FFT convention; loading forward-transforms back to coefficients.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import SpectralField, TorusGrid

MAGIC = b"NSPF"
VERSION = 1

__all__ = ["write_snapshot", "read_snapshot", "SnapshotFormatError"]


class SnapshotFormatError(ValueError):
    """Snapshot file is malformed or inconsistent with its header."""


def write_snapshot(field: SpectralField, path) -> None:
    """Write a field's physical values with a self-describing header."""
    grid = field.grid
    path = Path(path)
    header = MAGIC + struct.pack("<II", VERSION, grid.dim)
    header += struct.pack(f"<{grid.dim}I", *grid.points)
    header += struct.pack(f"<{grid.dim}d", *grid.period)
    data = np.ascontiguousarray(field.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_snapshot(path) -> SpectralField:
    """Load a snapshot, validating magic, version and payload size."""
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise SnapshotFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {raw[:4]!r}")
    version, dim = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise SnapshotFormatError(f"{path}: unsupported version {version}")
    if not 1 <= dim <= 3:
        raise SnapshotFormatError(f"{path}: bad dimension {dim}")
    off = 12
    need = dim * 4 + dim * 8
    if len(raw) < off + need:
        raise SnapshotFormatError(f"{path}: truncated grid header")
    points = struct.unpack_from(f"<{dim}I", raw, off)
    off += dim * 4
    period = struct.unpack_from(f"<{dim}d", raw, off)
    off += dim * 8
    try:
        grid = TorusGrid(points=points, period=period)
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: invalid grid ({exc})") from exc
    n_total = grid.n_total
    expected = off + 8 * n_total
    if len(raw) != expected:
        raise SnapshotFormatError(
            f"{path}: payload size {len(raw) - off} bytes, expected {8 * n_total}"
        )
    values = np.frombuffer(raw, dtype="<f8", count=n_total, offset=off)
    return SpectralField.from_values(grid, values.reshape(grid.points))
