"""End-to-end conversion of a point cloud into a seamless DTM raster.

Stages: ingest -> min-z rasterization -> void fill -> slope map ->
break-line mask -> region labeling and enclosure classification ->
interpolation of non-ground pixels -> water mapping on the
pre-interpolation occupancy -> water flattening.  The run report echoes
every effective parameter so a result is reproducible from the report
alone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, PipelineError
from .groundfilter import (
    FilterParams,
    GroundMask,
    RegionStats,
    Segmentation,
    classify_regions,
    label_regions,
    region_stats,
)
from .ingest import BBox, PointCloud, bounds, read_points
from .interp import DtmRaster, interpolate_nonground
from .raster import Dsm, GridSpec, SparseDsm, fill_voids_nearest, make_grid_spec, rasterize_min
from .slope import BreakMask, SlopeMap, break_line_mask, slope_map
from .water import WaterMap, WaterParams, apply_water, water_mask, water_segments, water_threshold


@dataclass(frozen=True)
class PipelineConfig:
    cell: float = 0.5
    filter_params: FilterParams = field(default_factory=FilterParams)
    water_params: WaterParams = field(default_factory=WaterParams)
    strict_parse: bool = False
    emit_intermediates: bool = False
    workers: int = 1
    crop: BBox | None = None
    input_format: str = "auto"

    def parameter_echo(self) -> dict:
        """Every effective parameter, spelled out for the run report."""
        return {
            "cell_m": self.cell,
            "slope_threshold_deg": self.filter_params.tau_deg,
            "a1_m2": self.filter_params.a1_m2,
            "a2_m2": self.filter_params.a2_m2,
            "rectangularity": self.filter_params.r,
            "window_px": self.water_params.window,
            "confidence": self.water_params.k,
            "percentile": self.water_params.percentile,
            "min_segment_px": self.water_params.min_segment_px,
            "strict_parse": self.strict_parse,
            "workers": self.workers,
            "crop": None
            if self.crop is None
            else [self.crop.min_x, self.crop.min_y, self.crop.max_x, self.crop.max_y],
        }


@dataclass
class PipelineResult:
    dtm: DtmRaster
    ground: GroundMask
    water: WaterMap
    sparse: SparseDsm
    dsm: Dsm
    slope: SlopeMap
    breaks: BreakMask
    segmentation: Segmentation
    stats: RegionStats
    report: dict


class _StageTimer:
    def __init__(self) -> None:
        self.timings: dict[str, float] = {}

    def run(self, name: str, fn):
        start = time.perf_counter()
        try:
            result = fn()
        except PipelineError as exc:
            exc.args = (f"[stage {name}] {exc}",)
            raise
        self.timings[name] = time.perf_counter() - start
        return result


def crop_window(grid: GridSpec, crop: BBox) -> tuple[slice, slice, GridSpec]:
    """Cell window covering ``crop``; used to trim buffered runs to the target area."""
    c0 = max(0, int(np.floor((crop.min_x - grid.origin_x) / grid.cell + 1e-9)))
    r0 = max(0, int(np.floor((crop.min_y - grid.origin_y) / grid.cell + 1e-9)))
    c1 = min(grid.ncols, int(np.ceil((crop.max_x - grid.origin_x) / grid.cell - 1e-9)))
    r1 = min(grid.nrows, int(np.ceil((crop.max_y - grid.origin_y) / grid.cell - 1e-9)))
    if c1 <= c0 or r1 <= r0:
        raise ParameterError(f"crop window {crop} does not intersect the data grid")
    sub = GridSpec(
        grid.origin_x + c0 * grid.cell,
        grid.origin_y + r0 * grid.cell,
        grid.cell,
        c1 - c0,
        r1 - r0,
    )
    return slice(r0, r1), slice(c0, c1), sub


def run_pipeline(source, cfg: PipelineConfig | None = None) -> PipelineResult:
    """Run the whole chain on a path, bytes, stream or PointCloud."""
    cfg = cfg or PipelineConfig()
    timer = _StageTimer()

    if isinstance(source, PointCloud):
        pc = source
    else:
        pc = timer.run(
            "ingest", lambda: read_points(source, cfg.input_format, cfg.strict_parse)
        )

    bbox = timer.run("bounds", lambda: bounds(pc))
    grid = make_grid_spec(bbox, cfg.cell)
    sparse = timer.run("rasterize", lambda: rasterize_min(pc, grid, cfg.workers))
    dsm = timer.run("fill_voids", lambda: fill_voids_nearest(sparse))
    slp = timer.run("slope", lambda: slope_map(dsm))
    breaks = timer.run(
        "break_lines", lambda: break_line_mask(slp, cfg.filter_params.tau_deg)
    )
    seg = timer.run("label_regions", lambda: label_regions(breaks))
    stats = timer.run("region_stats", lambda: region_stats(seg))
    ground = timer.run(
        "classify", lambda: classify_regions(seg, stats, cfg.filter_params)
    )
    dtm_land = timer.run("interpolate", lambda: interpolate_nonground(dsm, ground))

    threshold = timer.run(
        "water_threshold", lambda: water_threshold(sparse.occupancy, cfg.water_params)
    )
    wmask = timer.run(
        "water_mask",
        lambda: water_mask(sparse.occupancy, threshold, cfg.water_params.window),
    )
    wmap = timer.run(
        "water_segments", lambda: water_segments(wmask, sparse, cfg.water_params)
    )
    dtm = timer.run("apply_water", lambda: apply_water(dtm_land, wmap))

    nonvoid = int((sparse.occupancy > 0).sum())
    report = {
        "parameters": cfg.parameter_echo(),
        "input": {
            "points": pc.count,
            "dropped_nonfinite": pc.dropped_nonfinite,
            "skipped_records": pc.skipped_records,
            "out_of_bounds": sparse.oob_dropped,
        },
        "grid": {
            "origin_x": grid.origin_x,
            "origin_y": grid.origin_y,
            "cell": grid.cell,
            "ncols": grid.ncols,
            "nrows": grid.nrows,
        },
        "density": {
            "nonvoid_cells": nonvoid,
            "total_cells": int(sparse.occupancy.size),
            "P": nonvoid / sparse.occupancy.size,
            "water_threshold": int(threshold),
        },
        "regions": {
            "count": seg.region_count,
            "ground_px": int(ground.is_ground.sum()),
            "nonground_px": int((~ground.is_ground).sum()),
        },
        "water": {
            "segment_count": len(wmap.segments),
            "water_px": int(wmap.is_water.sum()),
        },
        "timings_s": {k: round(v, 6) for k, v in timer.timings.items()},
    }

    result = PipelineResult(dtm, ground, wmap, sparse, dsm, slp, breaks, seg, stats, report)
    if cfg.crop is not None:
        result = _crop_result(result, cfg.crop)
    return result


def _crop_segments(res: PipelineResult, rs: slice, cs: slice, sub: GridSpec) -> list:
    from .water import WaterSegment

    ncols = res.dtm.grid.ncols
    out = []
    for seg in res.water.segments:
        rr = seg.pixels // ncols
        cc = seg.pixels % ncols
        keep = (rr >= rs.start) & (rr < rs.stop) & (cc >= cs.start) & (cc < cs.stop)
        if keep.any():
            flat = (rr[keep] - rs.start) * sub.ncols + (cc[keep] - cs.start)
            out.append(WaterSegment(seg.id, flat, seg.elevation))
    return out


def _crop_result(res: PipelineResult, crop: BBox) -> PipelineResult:
    rs, cs, sub = crop_window(res.dtm.grid, crop)
    res.report["grid_cropped"] = {
        "origin_x": sub.origin_x,
        "origin_y": sub.origin_y,
        "cell": sub.cell,
        "ncols": sub.ncols,
        "nrows": sub.nrows,
    }
    return PipelineResult(
        DtmRaster(sub, res.dtm.elev[rs, cs].copy(), res.dtm.source[rs, cs].copy()),
        GroundMask(sub, res.ground.is_ground[rs, cs].copy()),
        WaterMap(
            sub,
            res.water.is_water[rs, cs].copy(),
            res.water.label[rs, cs].copy(),
            _crop_segments(res, rs, cs, sub),
        ),
        SparseDsm(
            sub,
            res.sparse.elev[rs, cs].copy(),
            res.sparse.occupancy[rs, cs].copy(),
            res.sparse.oob_dropped,
        ),
        Dsm(sub, res.dsm.elev[rs, cs].copy()),
        SlopeMap(sub, res.slope.slope_deg[rs, cs].copy()),
        BreakMask(sub, res.breaks.is_break[rs, cs].copy()),
        Segmentation(sub, res.segmentation.label[rs, cs].copy(), res.segmentation.region_count),
        res.stats,
        res.report,
    )
