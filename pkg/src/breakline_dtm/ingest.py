"""Point-cloud ingestion: XYZ text and uncompressed little-endian LAS.

Only the x/y/z coordinates of each record are consumed; return numbers,
classification and intensity are ignored.  Coordinates are assumed to be
in a projected metric CRS.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, MalformedRecordError, UnsupportedFormatError

_LAS_MAGIC = b"LASF"
_FIELD_SEP = re.compile(r"[,\s]+")

# minimal public header sizes per LAS minor version
_LAS_MIN_HEADER = 227


@dataclass(frozen=True)
class BBox:
    """Axis-aligned bounds in meters."""

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self) -> None:
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise ValueError(f"inverted bbox: {self}")

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y


@dataclass
class PointCloud:
    """A flat (n, 3) float64 array of x/y/z observations in meters.

    The coordinate array is made read-only on construction so clouds can be
    shared across threads.  ``dropped_nonfinite`` counts records discarded
    for NaN/Inf coordinates, ``skipped_records`` counts records skipped as
    unparsable in lenient mode.
    """

    xyz: np.ndarray
    dropped_nonfinite: int = 0
    skipped_records: int = 0

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.xyz, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, 3)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError("xyz must be an (n, 3) array")
        arr.setflags(write=False)
        self.xyz = arr

    @property
    def count(self) -> int:
        return self.xyz.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.xyz[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.xyz[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.xyz[:, 2]


def _drop_nonfinite(xyz: np.ndarray) -> tuple[np.ndarray, int]:
    finite = np.isfinite(xyz).all(axis=1)
    dropped = int(xyz.shape[0] - finite.sum())
    if dropped:
        xyz = xyz[finite]
    return xyz, dropped


def _read_xyz_text(data: bytes, strict: bool) -> PointCloud:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnsupportedFormatError(f"input is not UTF-8 text: {exc}") from None

    rows: list[tuple[float, float, float]] = []
    skipped = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = _FIELD_SEP.split(stripped)
        try:
            if len(fields) < 3:
                raise ValueError("fewer than 3 fields")
            rows.append((float(fields[0]), float(fields[1]), float(fields[2])))
        except ValueError as exc:
            if strict:
                raise MalformedRecordError(f"line {lineno}: {exc}") from None
            skipped += 1

    xyz = np.asarray(rows, dtype=np.float64).reshape(-1, 3)
    xyz, dropped = _drop_nonfinite(xyz)
    if xyz.shape[0] == 0:
        raise EmptyInputError("no valid points in text input")
    return PointCloud(xyz, dropped_nonfinite=dropped, skipped_records=skipped)


def _read_las(data: bytes, strict: bool) -> PointCloud:
    """Decode the common 12-byte XYZ prefix of LAS 1.2-1.4 point records."""
    if len(data) < _LAS_MIN_HEADER:
        raise UnsupportedFormatError("LAS input shorter than the public header")
    if data[:4] != _LAS_MAGIC:
        raise UnsupportedFormatError("missing LASF magic")

    ver_major, ver_minor = data[24], data[25]
    if ver_major != 1 or not 0 <= ver_minor <= 4:
        raise UnsupportedFormatError(f"unsupported LAS version {ver_major}.{ver_minor}")

    (header_size,) = struct.unpack_from("<H", data, 94)
    (point_offset,) = struct.unpack_from("<I", data, 96)
    fmt_id = data[104]
    (rec_len,) = struct.unpack_from("<H", data, 105)
    (legacy_count,) = struct.unpack_from("<I", data, 107)
    scales = struct.unpack_from("<3d", data, 131)
    offsets = struct.unpack_from("<3d", data, 155)

    if fmt_id & 0x80:
        raise UnsupportedFormatError("LAZ-compressed point data is not supported")
    if fmt_id > 10:
        raise UnsupportedFormatError(f"unknown point record format {fmt_id}")
    if rec_len < 12:
        raise UnsupportedFormatError(f"record length {rec_len} too short for XYZ")
    if point_offset < header_size or point_offset > len(data):
        raise UnsupportedFormatError("offset to point data outside the file")

    count = legacy_count
    if ver_minor >= 4 and header_size >= 375:
        (count64,) = struct.unpack_from("<Q", data, 247)
        if count64:
            count = count64

    body = data[point_offset:]
    available = len(body) // rec_len
    skipped = 0
    if count > available:
        if strict:
            raise MalformedRecordError(
                f"header declares {count} records but only {available} fit the file"
            )
        skipped = count - available
        count = available

    if count == 0:
        raise EmptyInputError("LAS file contains no point records")

    raw = np.frombuffer(body, dtype=np.uint8, count=count * rec_len)
    ixyz = raw.reshape(count, rec_len)[:, :12].copy().view("<i4").astype(np.float64)
    xyz = ixyz * np.asarray(scales) + np.asarray(offsets)
    xyz, dropped = _drop_nonfinite(xyz)
    if xyz.shape[0] == 0:
        raise EmptyInputError("LAS file contains no finite points")
    return PointCloud(xyz, dropped_nonfinite=dropped, skipped_records=skipped)


def _to_bytes(source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
        return data
    raise TypeError(f"cannot read points from {type(source).__name__}")


def read_points(source, fmt: str = "auto", strict: bool = False) -> PointCloud:
    """Read a point cloud from a path, byte string or binary stream.

    Parameters
    ----------
    source : path, bytes or file-like
        Raw input.  Whole input is held in memory.
    fmt : {"auto", "xyz_text", "las"}
        ``auto`` sniffs the LASF magic and falls back to text.
    strict : bool
        When True a malformed record aborts with MalformedRecordError;
        otherwise bad records are skipped and counted.
    """
    data = _to_bytes(source)
    if fmt == "auto":
        fmt = "las" if data[:4] == _LAS_MAGIC else "xyz_text"
    if fmt == "las":
        return _read_las(data, strict)
    if fmt == "xyz_text":
        return _read_xyz_text(data, strict)
    raise ValueError(f"unknown format {fmt!r}")


def bounds(pc: PointCloud) -> BBox:
    """Tight axis-aligned bounds of all points."""
    if pc.count == 0:
        raise EmptyInputError("cannot take bounds of an empty point cloud")
    lo = pc.xyz[:, :2].min(axis=0)
    hi = pc.xyz[:, :2].max(axis=0)
    return BBox(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


def write_points_xyz(pc: PointCloud, target) -> None:
    """Write a cloud as plain XYZ text with 6 decimal places per field."""
    lines = [f"{x:.6f} {y:.6f} {z:.6f}" for x, y, z in pc.xyz]
    payload = "\n".join(lines) + ("\n" if lines else "")
    if isinstance(target, (str, Path)):
        Path(target).write_text(payload, encoding="utf-8")
    else:
        target.write(payload)
