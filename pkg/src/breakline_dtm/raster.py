"""Fine rasterization of a point cloud and nearest-cell void filling.

The grid is anchored at its lower-left corner; array row 0 is the
southernmost row, so cell (r, c) has its center at
``(origin_x + (c + 0.5) * cell, origin_y + (r + 0.5) * cell)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import AllVoidError, NonPositiveCellError
from .ingest import BBox, PointCloud


@dataclass(frozen=True)
class GridSpec:
    """Regular raster geometry in meters."""

    origin_x: float
    origin_y: float
    cell: float
    ncols: int
    nrows: int

    def __post_init__(self) -> None:
        if self.cell <= 0:
            raise NonPositiveCellError(f"cell size must be > 0, got {self.cell}")
        if self.ncols < 1 or self.nrows < 1:
            raise ValueError(f"grid must have at least one cell: {self}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def max_x(self) -> float:
        return self.origin_x + self.ncols * self.cell

    @property
    def max_y(self) -> float:
        return self.origin_y + self.nrows * self.cell

    def x_centers(self) -> np.ndarray:
        return self.origin_x + (np.arange(self.ncols) + 0.5) * self.cell

    def y_centers(self) -> np.ndarray:
        return self.origin_y + (np.arange(self.nrows) + 0.5) * self.cell


@dataclass
class SparseDsm:
    """Min-z surface before void filling: NaN marks void cells.

    ``occupancy[r, c]`` is the number of points binned into the cell, so
    ``np.isnan(elev) == (occupancy == 0)``.  ``oob_dropped`` counts points
    that fell outside the grid.
    """

    grid: GridSpec
    elev: np.ndarray
    occupancy: np.ndarray
    oob_dropped: int = 0


@dataclass
class Dsm:
    """Fully populated surface raster."""

    grid: GridSpec
    elev: np.ndarray


def make_grid_spec(bbox: BBox, cell: float) -> GridSpec:
    """Grid covering ``bbox`` with the given cell size, origin at the min corner.

    Column/row counts are ceilings of extent / cell (at least 1); a small
    relative tolerance keeps exact multiples from spilling into an extra
    row or column through float noise.
    """
    if cell <= 0:
        raise NonPositiveCellError(f"cell size must be > 0, got {cell}")
    ncols = max(1, math.ceil(bbox.width / cell - 1e-9))
    nrows = max(1, math.ceil(bbox.height / cell - 1e-9))
    return GridSpec(bbox.min_x, bbox.min_y, cell, ncols, nrows)


def _bin_min_count(
    xyz: np.ndarray, grid: GridSpec
) -> tuple[np.ndarray, np.ndarray, int]:
    nrows, ncols = grid.shape
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    inside = (
        (x >= grid.origin_x)
        & (x <= grid.max_x)
        & (y >= grid.origin_y)
        & (y <= grid.max_y)
    )
    dropped = int(xyz.shape[0] - inside.sum())
    x, y, z = x[inside], y[inside], z[inside]

    col = np.floor((x - grid.origin_x) / grid.cell).astype(np.int64)
    row = np.floor((y - grid.origin_y) / grid.cell).astype(np.int64)
    # points sitting exactly on the max edge belong to the last row/column
    np.minimum(col, ncols - 1, out=col)
    np.minimum(row, nrows - 1, out=row)

    flat = row * ncols + col
    elev = np.full(nrows * ncols, np.inf)
    occ = np.zeros(nrows * ncols, dtype=np.int64)
    np.minimum.at(elev, flat, z)
    np.add.at(occ, flat, 1)
    return elev, occ, dropped


def rasterize_min(pc: PointCloud, grid: GridSpec, workers: int = 1) -> SparseDsm:
    """Bin points into the grid keeping the lowest elevation per cell.

    ``workers`` > 1 partitions the points across threads; the min/count
    merge is commutative and exact, so the result is independent of the
    partitioning and of thread scheduling.
    """
    nrows, ncols = grid.shape
    workers = max(1, int(workers))
    if pc.count == 0:
        elev = np.full(grid.shape, np.nan)
        occ = np.zeros(grid.shape, dtype=np.int64)
        return SparseDsm(grid, elev, occ, 0)

    if workers == 1 or pc.count < 4 * workers:
        elev, occ, dropped = _bin_min_count(pc.xyz, grid)
    else:
        chunks = np.array_split(pc.xyz, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _bin_min_count(c, grid), chunks))
        elev = np.full(nrows * ncols, np.inf)
        occ = np.zeros(nrows * ncols, dtype=np.int64)
        dropped = 0
        for e, o, d in parts:
            np.minimum(elev, e, out=elev)
            occ += o
            dropped += d

    elev = elev.reshape(grid.shape)
    occ = occ.reshape(grid.shape)
    elev[occ == 0] = np.nan
    return SparseDsm(grid, elev, occ, dropped)


def nearest_donor_indices(donor_mask: np.ndarray) -> np.ndarray:
    """Flat index of the Euclidean-nearest donor cell for every cell.

    Distances are between cell centers.  Equidistant donors resolve to the
    one with the smallest row-major index, which makes the result
    data-deterministic (independent of library internals and threading).
    """
    donor_mask = np.asarray(donor_mask, dtype=bool)
    if not donor_mask.any():
        raise AllVoidError("no donor cells available")
    nrows, ncols = donor_mask.shape

    _, (ir, ic) = ndimage.distance_transform_edt(~donor_mask, return_indices=True)
    rr, cc = np.indices(donor_mask.shape)
    d2 = (rr - ir) ** 2 + (cc - ic) ** 2  # exact integer squared distances
    donor = (ir.astype(np.int64) * ncols + ic).ravel()

    # Tie-break pass: within each squared-distance shell, try donor offsets
    # in increasing row-major delta so the first hit is the smallest donor.
    targets = np.flatnonzero(~donor_mask.ravel())
    if targets.size == 0:
        return donor
    t_d2 = d2.ravel()[targets]
    order = np.argsort(t_d2, kind="stable")
    targets = targets[order]
    t_d2 = t_d2[order]
    shell_starts = np.searchsorted(t_d2, np.unique(t_d2))
    shell_bounds = list(shell_starts) + [targets.size]

    tr = targets // ncols
    tc = targets % ncols
    for si in range(len(shell_bounds) - 1):
        lo, hi = shell_bounds[si], shell_bounds[si + 1]
        dist2 = int(t_d2[lo])
        offsets = []
        rmax = math.isqrt(dist2)
        for dr in range(-rmax, rmax + 1):
            rem = dist2 - dr * dr
            dc = math.isqrt(rem)
            if dc * dc == rem:
                offsets.append((dr, dc))
                if dc:
                    offsets.append((dr, -dc))
        offsets.sort(key=lambda o: o[0] * ncols + o[1])

        r = tr[lo:hi]
        c = tc[lo:hi]
        unassigned = np.ones(hi - lo, dtype=bool)
        for dr, dc in offsets:
            if not unassigned.any():
                break
            nr = r + dr
            nc = c + dc
            ok = unassigned & (nr >= 0) & (nr < nrows) & (nc >= 0) & (nc < ncols)
            if not ok.any():
                continue
            hit = ok.copy()
            hit[ok] = donor_mask[nr[ok], nc[ok]]
            if hit.any():
                donor[targets[lo:hi][hit]] = nr[hit] * ncols + nc[hit]
                unassigned &= ~hit
    return donor


def fill_voids_nearest(sparse: SparseDsm) -> Dsm:
    """Fill void cells with the elevation of the nearest occupied cell."""
    occupied = sparse.occupancy > 0
    if not occupied.any():
        raise AllVoidError("cannot fill a raster with no occupied cells")
    donor = nearest_donor_indices(occupied)
    filled = sparse.elev.ravel()[donor].reshape(sparse.grid.shape)
    return Dsm(sparse.grid, filled)
