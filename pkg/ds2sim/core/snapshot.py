"""
Binary snapshots and amplitude images.

Snapshot layout (little-endian, no padding)::

    magic   4 bytes  b"DS2F"
    version u32      1
    nx, ny  u32, u32
    Lx, Ly  f64, f64
    t       f64
    coeffs  nx*ny complex values as interleaved (re, im) f64 pairs,
            row-major over (j, l) in the stored FFT ordering

Images are binary PGM (P5) with 16-bit big-endian samples, maxval 65535,
width nx, height ny, first row at the smallest y.
"""
import struct
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, SnapshotDimensionError, SnapshotFormatError
from .spectral import Grid2D, SpectralField, inverse_transform

MAGIC = b"DS2F"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIIIddd")
PGM_MAXVAL = 65535


def write_snapshot(u_hat: SpectralField, t: float, path: str) -> None:
    """Write a field and its time stamp in the DS2F binary layout.

    Raises:
        ConfigurationError: If the field is not two-dimensional
        OSError: On I/O failures
    """
    grid = u_hat.grid
    if grid.ndim != 2:
        raise ConfigurationError(f"snapshots store two-dimensional fields, got {grid.ndim} dimensions", key="grid")
    nx, ny = grid.points
    Lx, Ly = grid.lengths
    payload = np.ascontiguousarray(u_hat.coeffs, dtype="<c16").tobytes()
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, FORMAT_VERSION, nx, ny, Lx, Ly, float(t)))
        f.write(payload)


def read_snapshot(path: str, expected_shape: Optional[Sequence[int]] = None) -> Tuple[SpectralField, float]:
    """Read a DS2F snapshot.

    Args:
        path: Snapshot file
        expected_shape: (nx, ny) the caller requires, if any

    Returns:
        Tuple of (field, time stamp)

    Raises:
        SnapshotFormatError: Bad magic, unknown version or truncated payload
        SnapshotDimensionError: Stored shape differs from expected_shape
        OSError: On I/O failures
    """
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < HEADER.size:
        raise SnapshotFormatError(f"{path}: file too short for a DS2F header ({len(data)} bytes)")
    magic, version, nx, ny, Lx, Ly, t = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise SnapshotFormatError(f"{path}: unsupported format version {version}")
    if expected_shape is not None and (nx, ny) != tuple(expected_shape):
        raise SnapshotDimensionError((nx, ny), tuple(expected_shape))
    expected_bytes = HEADER.size + nx * ny * 16
    if len(data) != expected_bytes:
        raise SnapshotFormatError(f"{path}: payload has {len(data) - HEADER.size} bytes, expected {nx * ny * 16}")
    coeffs = np.frombuffer(data, dtype="<c16", offset=HEADER.size).reshape(nx, ny)
    try:
        grid = Grid2D(nx, ny, Lx, Ly)
    except ConfigurationError as e:
        raise SnapshotFormatError(f"{path}: invalid grid in header ({e})") from None
    return SpectralField(grid, coeffs), t


def amplitude_image(u_hat: SpectralField) -> np.ndarray:
    """16-bit image rows of |u|: shape (ny, nx), row 0 at the smallest y."""
    amplitude = np.abs(inverse_transform(u_hat))
    peak = float(np.max(amplitude))
    if peak == 0.0:
        scaled = np.zeros(amplitude.shape, dtype=np.uint16)
    else:
        scaled = np.rint(np.clip(amplitude / peak, 0.0, 1.0) * PGM_MAXVAL).astype(np.uint16)
    return scaled.T


def emit_amplitude_image(u_hat: SpectralField, path: str) -> None:
    """Write |u| as a 16-bit binary PGM, linearly mapped [0, max|u|] -> [0, 65535]."""
    if u_hat.grid.ndim != 2:
        raise ConfigurationError("amplitude images need a two-dimensional field", key="grid")
    rows = amplitude_image(u_hat)
    height, width = rows.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii"))
        f.write(rows.astype(">u2").tobytes())


def read_pgm(path: str) -> np.ndarray:
    """Read a 16-bit P5 image written by emit_amplitude_image; returns rows."""
    with open(path, "rb") as f:
        data = f.read()
    tokens = []
    position = 0
    while len(tokens) < 4:
        while position < len(data) and data[position:position + 1].isspace():
            position += 1
        start = position
        while position < len(data) and not data[position:position + 1].isspace():
            position += 1
        if position >= len(data):
            raise SnapshotFormatError(f"{path}: truncated image header")
        tokens.append(data[start:position])
    position += 1
    try:
        width, height, maxval = (int(token) for token in tokens[1:])
    except ValueError:
        raise SnapshotFormatError(f"{path}: not a 16-bit P5 image") from None
    if tokens[0] != b"P5" or maxval != PGM_MAXVAL:
        raise SnapshotFormatError(f"{path}: not a 16-bit P5 image")
    if len(data) - position != 2 * width * height:
        raise SnapshotFormatError(
            f"{path}: payload holds {len(data) - position} bytes, expected {2 * width * height}"
        )
    return np.frombuffer(data, dtype=">u2", offset=position, count=width * height).reshape(height, width)
