"""ESRI ASCII grid reader/writer, the package's bit-exact raster format.

Values are printed with 6 decimal places and NaN cells as the literal
``-9999`` token, so identical rasters always serialize to identical
bytes.  Arrays follow the package convention of row 0 = south; the file
format stores the top row first, so rows are flipped on the way through.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import HeaderMismatchError
from .raster import GridSpec

NODATA = -9999.0
_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def format_ascii_grid(values: np.ndarray, grid: GridSpec) -> str:
    if values.shape != grid.shape:
        raise ValueError(f"raster shape {values.shape} != grid shape {grid.shape}")
    lines = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {grid.origin_x:.6f}",
        f"yllcorner {grid.origin_y:.6f}",
        f"cellsize {grid.cell:.6f}",
        "NODATA_value -9999",
    ]
    flipped = np.flipud(np.asarray(values, dtype=np.float64))
    for row in flipped:
        lines.append(
            " ".join("-9999" if not np.isfinite(v) else f"{v:.6f}" for v in row)
        )
    return "\n".join(lines) + "\n"


def write_ascii_grid(values: np.ndarray, grid: GridSpec, path) -> None:
    """Write a raster; NaN cells become the NODATA token."""
    Path(path).write_text(format_ascii_grid(values, grid), encoding="ascii")


def read_ascii_grid(path) -> tuple[np.ndarray, GridSpec]:
    """Read a raster back; NODATA cells come back as NaN."""
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header: dict[str, float] = {}
    idx = 0
    while idx < len(lines) and len(header) < 6:
        parts = lines[idx].split()
        if len(parts) != 2 or parts[0].lower() not in _HEADER_KEYS:
            break
        header[parts[0].lower()] = float(parts[1])
        idx += 1

    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise HeaderMismatchError(f"ASCII grid header missing {missing}")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    nodata = header["nodata_value"]

    rows = lines[idx:]
    if len(rows) != nrows:
        raise HeaderMismatchError(
            f"header declares {nrows} rows but file has {len(rows)}"
        )
    try:
        data = np.array([[float(v) for v in row.split()] for row in rows])
    except ValueError as exc:
        raise HeaderMismatchError(f"non-numeric cell value: {exc}") from None
    if data.shape != (nrows, ncols):
        raise HeaderMismatchError(
            f"header declares {nrows}x{ncols} but data is {data.shape}"
        )
    data[data == nodata] = np.nan
    grid = GridSpec(
        header["xllcorner"], header["yllcorner"], header["cellsize"], ncols, nrows
    )
    return np.flipud(data).copy(), grid
