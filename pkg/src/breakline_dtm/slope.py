"""Slope mapping with a 3x3 Sobel stencil and break-line thresholding.

The two Sobel responses are scaled by 1 / (8 * cell) so they estimate
rise over run; on an inclined plane the recovered slope is exact.  Border
pixels are computed with edge-replication padding, and the outer ring of
the break mask is always stamped true so that objects cut by the data
edge still end up enclosed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadThresholdError, GridTooSmallError
from .raster import Dsm, GridSpec


@dataclass
class SlopeMap:
    """Per-pixel surface slope in degrees, in [0, 90)."""

    grid: GridSpec
    slope_deg: np.ndarray


@dataclass
class BreakMask:
    """Boolean raster of break-line pixels; the outer ring is always true."""

    grid: GridSpec
    is_break: np.ndarray


def slope_map(dsm: Dsm) -> SlopeMap:
    """Slope of the surface at every pixel via the Sobel gradient."""
    nrows, ncols = dsm.grid.shape
    if nrows < 3 or ncols < 3:
        raise GridTooSmallError(f"need at least 3x3 cells, got {nrows}x{ncols}")

    p = np.pad(dsm.elev, 1, mode="edge")
    scale = 8.0 * dsm.grid.cell
    gx = (
        (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    ) / scale
    gy = (
        (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    ) / scale
    deg = np.degrees(np.arctan(np.hypot(gx, gy)))
    return SlopeMap(dsm.grid, deg)


def break_line_mask(slope: SlopeMap, tau_deg: float) -> BreakMask:
    """Pixels strictly steeper than ``tau_deg``, plus the stamped data edge."""
    if not 0.0 < tau_deg < 90.0:
        raise BadThresholdError(f"slope threshold must be in (0, 90), got {tau_deg}")
    mask = slope.slope_deg > tau_deg
    mask[0, :] = True
    mask[-1, :] = True
    mask[:, 0] = True
    mask[:, -1] = True
    return BreakMask(slope.grid, mask)
