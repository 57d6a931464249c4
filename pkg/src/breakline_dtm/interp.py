"""Seamless DTM assembly: mask non-ground pixels and fill them linearly.

Each 4-connected hole of non-ground pixels is interpolated on its own
from the ground pixels that touch it (4-adjacency).  Those boundary
pixels are triangulated and the hole is filled barycentrically; hole
pixels outside the triangulation hull take the elevation of the nearest
boundary pixel.  Interpolated values therefore never leave the range of
the boundary elevations used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import Delaunay, QhullError

from .errors import InsufficientGroundError
from .groundfilter import GroundMask
from .raster import Dsm, GridSpec, nearest_donor_indices

SOURCE_MEASURED = 0
SOURCE_INTERPOLATED = 1
SOURCE_WATER = 2

_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int8)


@dataclass
class DtmRaster:
    """Terrain raster plus a per-pixel provenance flag.

    ``source`` holds SOURCE_MEASURED, SOURCE_INTERPOLATED or SOURCE_WATER.
    """

    grid: GridSpec
    elev: np.ndarray
    source: np.ndarray


def _is_collinear(pts: np.ndarray) -> bool:
    """Exact collinearity test for integer-scaled points."""
    if len(pts) < 3:
        return True
    ref = pts[0]
    deltas = pts[1:] - ref
    base = None
    for d in deltas:
        if d[0] != 0 or d[1] != 0:
            base = d
            break
    if base is None:
        return True
    cross = deltas[:, 0] * base[1] - deltas[:, 1] * base[0]
    return bool(np.all(cross == 0))


def _fill_hole_1d(
    donor_xy: np.ndarray, donor_z: np.ndarray, hole_xy: np.ndarray
) -> np.ndarray:
    """Degenerate (collinear) boundary: linear interpolation along the principal axis."""
    if len(donor_xy) == 1:
        return np.full(len(hole_xy), donor_z[0])
    centered = donor_xy - donor_xy.mean(axis=0)
    # principal direction of the boundary points; SVD is deterministic here
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    axis = vt[0]
    t_d = donor_xy @ axis
    t_h = hole_xy @ axis
    order = np.argsort(t_d, kind="stable")
    t_sorted = t_d[order]
    z_sorted = donor_z[order]
    # collapse duplicate projections (possible for off-axis donors): keep first
    uniq, idx = np.unique(t_sorted, return_index=True)
    return np.interp(t_h, uniq, z_sorted[idx])


def interpolate_nonground(dsm: Dsm, ground: GroundMask) -> DtmRaster:
    """Copy ground pixels and fill non-ground holes from their ground rims."""
    if dsm.grid != ground.grid:
        raise ValueError("DSM and ground mask grids differ")
    is_ground = ground.is_ground
    grd_cells = np.argwhere(is_ground)
    if len(grd_cells) < 3 or _is_collinear(grd_cells.astype(np.int64)):
        raise InsufficientGroundError(
            "need at least 3 non-collinear ground pixels to interpolate"
        )

    elev = dsm.elev.copy()
    source = np.full(dsm.grid.shape, SOURCE_MEASURED, dtype=np.uint8)
    masked = ~is_ground
    if not masked.any():
        return DtmRaster(dsm.grid, elev, source)
    source[masked] = SOURCE_INTERPOLATED

    holes, n_holes = ndimage.label(masked, structure=_FOUR)
    slices = ndimage.find_objects(holes)
    for hole_id in range(1, n_holes + 1):
        rs, cs = slices[hole_id - 1]
        # expand one pixel so the adjacent ground rim is inside the window
        rs = slice(max(0, rs.start - 1), min(dsm.grid.nrows, rs.stop + 1))
        cs = slice(max(0, cs.start - 1), min(dsm.grid.ncols, cs.stop + 1))
        hole = holes[rs, cs] == hole_id
        rim = ndimage.binary_dilation(hole, structure=_FOUR) & is_ground[rs, cs]

        hole_rc = np.argwhere(hole)
        rim_rc = np.argwhere(rim)
        # lexicographic point order keeps the triangulation deterministic
        order = np.lexsort((rim_rc[:, 0], rim_rc[:, 1]))
        rim_rc = rim_rc[order]
        donor_xy = rim_rc[:, ::-1] + 0.5  # (x, y) in cell units
        donor_z = dsm.elev[rs, cs][rim_rc[:, 0], rim_rc[:, 1]]
        hole_xy = hole_rc[:, ::-1] + 0.5

        values = None
        if len(rim_rc) >= 3 and not _is_collinear(rim_rc.astype(np.int64)):
            try:
                tri = Delaunay(donor_xy)
                values = LinearNDInterpolator(tri, donor_z)(hole_xy)
            except QhullError:
                values = None
        if values is None:
            values = _fill_hole_1d(donor_xy, donor_z, hole_xy)
        else:
            outside = ~np.isfinite(values)
            if outside.any():
                donor_mask = np.zeros(hole.shape, dtype=bool)
                donor_mask[rim_rc[:, 0], rim_rc[:, 1]] = True
                donors = nearest_donor_indices(donor_mask)
                win_z = np.where(rim, dsm.elev[rs, cs], np.nan).ravel()
                flat = hole_rc[outside, 0] * hole.shape[1] + hole_rc[outside, 1]
                values[outside] = win_z[donors[flat]]

        sub = elev[rs, cs]
        sub[hole_rc[:, 0], hole_rc[:, 1]] = values

    return DtmRaster(dsm.grid, elev, source)
