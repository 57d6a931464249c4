"""Region labeling between break-lines and the enclosure classification.

Non-break pixels are grouped into 4-connected regions (so one-pixel
diagonal break walls still seal a region).  Each region is classified by
its area against the low/high limits and, in between, by rectangularity:
the ratio of its area to the area of its minimum rotated bounding
rectangle.  Large-and-rectangular reads as building, everything else as
terrain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .raster import GridSpec
from .slope import BreakMask

_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int8)


@dataclass(frozen=True)
class FilterParams:
    """Classification parameters: slope threshold, area limits, rectangularity."""

    tau_deg: float = 45.0
    a1_m2: float = 40_000.0
    a2_m2: float = 100_000.0
    r: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.tau_deg < 90.0:
            raise ParameterError(f"tau_deg must be in (0, 90), got {self.tau_deg}")
        if not 0.0 < self.a1_m2 <= self.a2_m2:
            raise ParameterError(
                f"need 0 < a1 <= a2, got a1={self.a1_m2} a2={self.a2_m2}"
            )
        if not 0.0 < self.r <= 1.0:
            raise ParameterError(f"rectangularity limit must be in (0, 1], got {self.r}")


@dataclass
class Segmentation:
    """Labels 1..region_count for non-break pixels, 0 on break-lines."""

    grid: GridSpec
    label: np.ndarray
    region_count: int


@dataclass
class RegionStats:
    """Per-region geometry, index i holds label i + 1."""

    pixel_count: np.ndarray
    area_m2: np.ndarray
    mbr_area_m2: np.ndarray
    rectangularity: np.ndarray


@dataclass
class GroundMask:
    grid: GridSpec
    is_ground: np.ndarray


def label_4connected(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected components of ``mask``, labeled in row-major first-encounter order."""
    lab, n = ndimage.label(mask, structure=_FOUR)
    if n == 0:
        return lab.astype(np.int32), 0
    flat = lab.ravel()
    nz = np.flatnonzero(flat)
    first = np.full(n + 1, flat.size, dtype=np.int64)
    # reversed scan leaves each label's earliest (row-major) position behind
    first[flat[nz[::-1]]] = nz[::-1]
    order = np.argsort(first[1:], kind="stable")
    lut = np.zeros(n + 1, dtype=np.int32)
    lut[order + 1] = np.arange(1, n + 1, dtype=np.int32)
    return lut[lab], n


def label_regions(mask: BreakMask) -> Segmentation:
    lab, n = label_4connected(~mask.is_break)
    return Segmentation(mask.grid, lab, n)


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, counter-clockwise, of an (n, 2) point set."""
    pts = np.unique(points, axis=0)  # sorts lexicographically
    if len(pts) <= 2:
        return pts

    def half(seq):
        hull: list[np.ndarray] = []
        for p in seq:
            while len(hull) >= 2:
                a, b = hull[-2], hull[-1]
                cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
                if cross <= 0:
                    hull.pop()
                else:
                    break
            hull.append(p)
        return hull

    lower = half(pts)
    upper = half(pts[::-1])
    return np.asarray(lower[:-1] + upper[:-1], dtype=np.float64)


def min_area_rect(points: np.ndarray) -> float:
    """Area of the minimum rotated rectangle enclosing an (n, 2) point set.

    Rotating calipers over the convex hull: the optimal rectangle has one
    side collinear with a hull edge, so checking every edge direction is
    exhaustive.
    """
    hull = _convex_hull(np.asarray(points, dtype=np.float64))
    if len(hull) <= 2:
        return 0.0  # degenerate: a point or a segment has zero area
    edges = np.diff(np.vstack([hull, hull[:1]]), axis=0)
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    keep = lengths > 0
    dirs = edges[keep] / lengths[keep, None]
    normals = np.column_stack([-dirs[:, 1], dirs[:, 0]])
    u = dirs @ hull.T
    v = normals @ hull.T
    areas = (u.max(axis=1) - u.min(axis=1)) * (v.max(axis=1) - v.min(axis=1))
    return float(areas.min())


def _region_boundary_corners(seg: Segmentation) -> list[np.ndarray]:
    """Pixel-square corner points per region, reduced to row extremes.

    Only the leftmost and rightmost pixel of each (region, row) pair can
    contribute hull vertices, so their corners are enough for an exact
    minimum-rectangle computation.
    """
    lab = seg.label
    nz = np.flatnonzero(lab.ravel())
    if nz.size == 0:
        return []
    labels = lab.ravel()[nz]
    rows = nz // seg.grid.ncols
    cols = nz % seg.grid.ncols

    order = np.lexsort((cols, rows, labels))
    labels, rows, cols = labels[order], rows[order], cols[order]
    group = labels.astype(np.int64) * seg.grid.nrows + rows
    starts = np.flatnonzero(np.diff(group, prepend=group[0] - 1))
    ends = np.append(starts[1:], group.size) - 1

    corners_per_region: list[list[tuple[int, int]]] = [
        [] for _ in range(seg.region_count)
    ]
    g_lab = labels[starts]
    g_row = rows[starts]
    g_cmin = cols[starts]
    g_cmax = cols[ends]
    for lb, r, cmin, cmax in zip(g_lab, g_row, g_cmin, g_cmax):
        bucket = corners_per_region[lb - 1]
        for c in (cmin, cmax):
            bucket.append((c, r))
            bucket.append((c + 1, r))
            bucket.append((c, r + 1))
            bucket.append((c + 1, r + 1))
    return [np.asarray(b, dtype=np.float64) for b in corners_per_region]


def region_stats(seg: Segmentation) -> RegionStats:
    """Pixel counts, areas and rectangularity for every region."""
    n = seg.region_count
    if n == 0:
        empty = np.empty(0)
        return RegionStats(np.empty(0, dtype=np.int64), empty, empty.copy(), empty.copy())
    counts = np.bincount(seg.label.ravel(), minlength=n + 1)[1:].astype(np.int64)
    cell2 = seg.grid.cell * seg.grid.cell
    area = counts * cell2

    mbr = np.empty(n, dtype=np.float64)
    for i, corners in enumerate(_region_boundary_corners(seg)):
        mbr[i] = min_area_rect(corners) * cell2
    with np.errstate(divide="ignore", invalid="ignore"):
        rect = np.where(mbr > 0, area / mbr, 1.0)
    return RegionStats(counts, area, mbr, rect)


def region_ground_flags(stats: RegionStats, params: FilterParams) -> np.ndarray:
    """Ground decision per region (index i holds label i + 1).

    area < a1 is non-ground, area > a2 is ground; areas inside the closed
    interval [a1, a2] are non-ground exactly when rectangularity > r.
    """
    area = stats.area_m2
    rect = stats.rectangularity
    mid = (area >= params.a1_m2) & (area <= params.a2_m2)
    return (area > params.a2_m2) | (mid & (rect <= params.r))


def classify_regions(
    seg: Segmentation, stats: RegionStats, params: FilterParams
) -> GroundMask:
    """Apply the enclosure rule region by region; break pixels are non-ground."""
    ground = np.zeros(seg.region_count + 1, dtype=bool)  # label 0 = break
    ground[1:] = region_ground_flags(stats, params)
    return GroundMask(seg.grid, ground[seg.label])


def region_report_rows(
    stats: RegionStats, params: FilterParams
) -> list[tuple[int, float, float, str]]:
    """Rows (label, area_m2, rectangularity, class) for the per-region CSV."""
    flags = region_ground_flags(stats, params)
    return [
        (
            i + 1,
            float(stats.area_m2[i]),
            float(stats.rectangularity[i]),
            "ground" if flags[i] else "non_ground",
        )
        for i in range(len(stats.pixel_count))
    ]
