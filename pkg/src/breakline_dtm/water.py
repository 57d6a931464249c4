"""Water-body detection from return density and per-segment elevations.

Water hardly reflects near-infrared laser pulses, so water pixels show
up as low-occupancy neighbourhoods in the raster *before* void filling.
The decision threshold is the lower confidence bound of a binomial
B(N, P/2) under its normal approximation, where N is the window size in
pixels and P the fraction of non-void cells; halving P compensates for
scan-overlap density imbalance.  Each detected segment is flattened to
the nearest-rank 10th percentile of its occupied-cell elevations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .groundfilter import label_4connected
from .interp import SOURCE_WATER, DtmRaster
from .raster import GridSpec, SparseDsm, nearest_donor_indices


@dataclass(frozen=True)
class WaterParams:
    """Detection window, confidence multiplier and percentile settings.

    The density-halving factor (p = P/2) is fixed, not configurable.
    """

    window: int = 9
    k: float = 4.0
    percentile: float = 0.10
    min_segment_px: int = 0

    def __post_init__(self) -> None:
        if self.window < 3 or self.window % 2 == 0:
            raise ParameterError(f"window must be odd and >= 3, got {self.window}")
        if self.k < 0:
            raise ParameterError(f"confidence multiplier must be >= 0, got {self.k}")
        if not 0.0 < self.percentile < 1.0:
            raise ParameterError(f"percentile must be in (0, 1), got {self.percentile}")
        if self.min_segment_px < 0:
            raise ParameterError("min_segment_px must be >= 0")


@dataclass
class WaterSegment:
    id: int
    pixels: np.ndarray  # flat raster indices
    elevation: float

    @property
    def pixel_count(self) -> int:
        return int(self.pixels.size)


@dataclass
class WaterMap:
    grid: GridSpec
    is_water: np.ndarray
    label: np.ndarray
    segments: list[WaterSegment] = field(default_factory=list)


def water_threshold(occupancy: np.ndarray, wp: WaterParams) -> int:
    """Point-count decision threshold from the windowed density statistics."""
    total = occupancy.size
    if total == 0:
        raise ParameterError("occupancy raster is empty")
    fraction_nonvoid = float((occupancy > 0).sum()) / total
    p = fraction_nonvoid / 2.0
    n = wp.window * wp.window
    mean = n * p
    sd = math.sqrt(n * p * (1.0 - p))
    return max(0, math.floor(mean - wp.k * sd))


def window_sums(arr: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Edge-truncated centered window sums and visible-pixel counts.

    Uses an integral image, so sums are exact for integer input.
    """
    half = window // 2
    nrows, ncols = arr.shape
    sat = np.zeros((nrows + 1, ncols + 1), dtype=np.int64)
    sat[1:, 1:] = np.cumsum(np.cumsum(arr, axis=0, dtype=np.int64), axis=1)

    r = np.arange(nrows)
    c = np.arange(ncols)
    r0 = np.clip(r - half, 0, nrows)
    r1 = np.clip(r + half + 1, 0, nrows)
    c0 = np.clip(c - half, 0, ncols)
    c1 = np.clip(c + half + 1, 0, ncols)

    sums = (
        sat[np.ix_(r1, c1)]
        - sat[np.ix_(r0, c1)]
        - sat[np.ix_(r1, c0)]
        + sat[np.ix_(r0, c0)]
    )
    visible = np.outer(r1 - r0, c1 - c0)
    return sums, visible


def water_mask(occupancy: np.ndarray, threshold: int, window: int) -> np.ndarray:
    """Pixels whose windowed point count is strictly below the threshold.

    Truncated edge windows scale the threshold proportionally to the
    visible pixel count (ceiling), instead of zero-padding which would
    fabricate water along the border.
    """
    if window < 3 or window % 2 == 0:
        raise ParameterError(f"window must be odd and >= 3, got {window}")
    if threshold <= 0:
        return np.zeros(occupancy.shape, dtype=bool)
    sums, visible = window_sums(occupancy.astype(np.int64), window)
    n = window * window
    t_eff = np.where(
        visible == n, threshold, -(-threshold * visible // n)  # ceil division
    )
    return sums < t_eff


def nearest_rank(values: np.ndarray, q: float) -> float:
    """Order statistic at 1-based index ceil(q * n) of the ascending sort."""
    s = np.sort(np.asarray(values, dtype=np.float64))
    if s.size == 0:
        raise ValueError("nearest_rank of an empty set")
    k = max(1, math.ceil(q * s.size - 1e-9))
    return float(s[k - 1])


def water_segments(mask: np.ndarray, sparse: SparseDsm, wp: WaterParams) -> WaterMap:
    """Group water pixels into 4-connected segments and assign elevations.

    Segments smaller than ``min_segment_px`` are discarded.  A segment's
    elevation is the nearest-rank percentile of the elevations of its
    occupied cells; a segment with no occupied cell takes the elevation
    of the occupied cell nearest to the segment (smallest row-major donor
    on ties).  With no occupied cell anywhere the elevation is NaN.
    """
    if mask.shape != sparse.grid.shape:
        raise ValueError("mask and raster dimensions differ")
    lab, n = label_4connected(mask)
    if n == 0:
        return WaterMap(sparse.grid, np.zeros_like(mask), lab, [])

    counts = np.bincount(lab.ravel(), minlength=n + 1)
    keep = np.flatnonzero(counts[1:] >= max(0, wp.min_segment_px)) + 1
    lut = np.zeros(n + 1, dtype=np.int32)
    lut[keep] = np.arange(1, keep.size + 1, dtype=np.int32)
    lab = lut[lab]
    n = int(keep.size)
    if n == 0:
        return WaterMap(sparse.grid, np.zeros_like(mask), lab, [])

    occupied = sparse.occupancy > 0
    flat_lab = lab.ravel()
    segments: list[WaterSegment] = []
    donor = None
    for seg_id in range(1, n + 1):
        pixels = np.flatnonzero(flat_lab == seg_id)
        occ_px = pixels[occupied.ravel()[pixels]]
        if occ_px.size:
            elevation = nearest_rank(sparse.elev.ravel()[occ_px], wp.percentile)
        elif occupied.any():
            if donor is None:
                donor = nearest_donor_indices(occupied)
            # closest occupied cell over the whole segment, deterministic ties
            rr = pixels // sparse.grid.ncols
            cc = pixels % sparse.grid.ncols
            dr = rr - donor[pixels] // sparse.grid.ncols
            dc = cc - donor[pixels] % sparse.grid.ncols
            best = int(np.argmin(dr * dr + dc * dc))
            elevation = float(sparse.elev.ravel()[donor[pixels[best]]])
        else:
            elevation = float("nan")
        segments.append(WaterSegment(seg_id, pixels, elevation))

    return WaterMap(sparse.grid, lab > 0, lab, segments)


def apply_water(dtm: DtmRaster, water: WaterMap) -> DtmRaster:
    """Replace water-pixel elevations with their segment elevation."""
    if dtm.grid != water.grid:
        raise ValueError("DTM and water map grids differ")
    elev = dtm.elev.copy()
    source = dtm.source.copy()
    flat = elev.ravel()
    for seg in water.segments:
        flat[seg.pixels] = seg.elevation
    source[water.is_water] = SOURCE_WATER
    return DtmRaster(dtm.grid, elev, source)
