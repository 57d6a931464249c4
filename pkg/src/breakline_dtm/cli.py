"""Command-line entry points.

Subcommands:
  dtm      point cloud -> DTM raster, masks, CSV reports and a JSON run report
  slope    point cloud -> slope map and break-line mask rasters
  water    point cloud -> water mask raster and per-segment CSV
  compare  two rasters -> tiled MAE/RMSE report
  synth    scene description -> XYZ point cloud plus truth rasters

Exit codes: 0 success, 2 input error, 3 parameter error, 4 unexpected
internal failure.  Malformed command lines exit with 2 via argparse.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .asciigrid import read_ascii_grid, write_ascii_grid
from .errors import InputDataError, ParameterError, PipelineError
from .groundfilter import FilterParams, region_report_rows
from .ingest import BBox, bounds, read_points, write_points_xyz
from .pipeline import PipelineConfig, run_pipeline
from .raster import fill_voids_nearest, make_grid_spec, rasterize_min
from .scene import load_scene, sample_points, truth_rasters
from .slope import break_line_mask, slope_map
from .tiling import compare_tiled, write_tile_csv
from .water import WaterParams, water_mask, water_segments, water_threshold


def _add_common_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cell", type=float, default=0.5, help="grid cell size in meters")
    p.add_argument(
        "--format",
        choices=("auto", "xyz_text", "las"),
        default="auto",
        help="input point format",
    )
    p.add_argument(
        "--strict", action="store_true", help="abort on the first malformed record"
    )


def _add_filter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--slope-threshold",
        type=float,
        default=45.0,
        help="break-line slope threshold in degrees",
    )
    p.add_argument("--a1", type=float, default=40_000.0, help="low area limit in m^2")
    p.add_argument("--a2", type=float, default=100_000.0, help="high area limit in m^2")
    p.add_argument(
        "--rectangularity",
        type=float,
        default=0.5,
        help="rectangularity limit for mid-sized regions",
    )


def _add_water_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=9, help="water detection window (odd)")
    p.add_argument(
        "--confidence", type=float, default=4.0, help="confidence multiplier k"
    )
    p.add_argument(
        "--percentile",
        type=float,
        default=0.10,
        help="per-segment elevation percentile",
    )
    p.add_argument(
        "--min-segment-px",
        type=int,
        default=0,
        help="drop water segments smaller than this many pixels",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="breakline-dtm",
        description="Seamless DTM extraction from airborne LiDAR point clouds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dtm = sub.add_parser("dtm", help="run the full pipeline")
    p_dtm.add_argument("input", help="point cloud file (XYZ text or LAS)")
    p_dtm.add_argument("--out-dir", default=".", help="output directory")
    _add_common_grid_flags(p_dtm)
    _add_filter_flags(p_dtm)
    _add_water_flags(p_dtm)
    p_dtm.add_argument(
        "--workers", type=int, default=1, help="threads for rasterization"
    )
    p_dtm.add_argument(
        "--crop",
        type=float,
        nargs=4,
        metavar=("MIN_X", "MIN_Y", "MAX_X", "MAX_Y"),
        help="process the full input, then crop outputs to this extent "
        "(buffered-extent workflow for clean data edges)",
    )
    p_dtm.add_argument(
        "--emit-intermediates",
        action="store_true",
        help="also write DSM, slope, break and label rasters",
    )

    p_slope = sub.add_parser("slope", help="slope map and break-line mask only")
    p_slope.add_argument("input")
    p_slope.add_argument("--out-dir", default=".")
    _add_common_grid_flags(p_slope)
    p_slope.add_argument("--slope-threshold", type=float, default=45.0)
    p_slope.add_argument("--workers", type=int, default=1)

    p_water = sub.add_parser("water", help="water mask and segment table only")
    p_water.add_argument("input")
    p_water.add_argument("--out-dir", default=".")
    _add_common_grid_flags(p_water)
    _add_water_flags(p_water)
    p_water.add_argument("--workers", type=int, default=1)

    p_cmp = sub.add_parser("compare", help="tiled MAE/RMSE between two rasters")
    p_cmp.add_argument("raster_a")
    p_cmp.add_argument("raster_b")
    p_cmp.add_argument("--mask", help="ASCII grid; nonzero pixels are excluded")
    p_cmp.add_argument("--tile-px", type=int, default=1000)
    p_cmp.add_argument("--out", default="tiles.csv", help="output CSV path")
    p_cmp.add_argument("--top", type=int, default=5, help="print the N worst tiles")

    p_synth = sub.add_parser("synth", help="generate a synthetic scene")
    p_synth.add_argument("scene", help="scene description file")
    p_synth.add_argument("--out-dir", default=".")
    p_synth.add_argument("--cell", type=float, default=0.5, help="truth raster cell")
    p_synth.add_argument("--seed", type=int, help="override the scene seed")
    p_synth.add_argument("--density", type=float, help="override points per m^2")
    return parser


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _crop_bbox(values) -> BBox:
    try:
        return BBox(*values)
    except ValueError as exc:
        raise ParameterError(f"bad --crop extent: {exc}") from None


def _cmd_dtm(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = PipelineConfig(
        cell=args.cell,
        filter_params=FilterParams(
            args.slope_threshold, args.a1, args.a2, args.rectangularity
        ),
        water_params=WaterParams(
            args.window, args.confidence, args.percentile, args.min_segment_px
        ),
        strict_parse=args.strict,
        emit_intermediates=args.emit_intermediates,
        workers=args.workers,
        crop=None if args.crop is None else _crop_bbox(args.crop),
        input_format=args.format,
    )
    res = run_pipeline(args.input, cfg)

    grid = res.dtm.grid
    write_ascii_grid(res.dtm.elev, grid, out / "dtm.asc")
    write_ascii_grid(res.ground.is_ground.astype(np.float64), grid, out / "ground_mask.asc")
    write_ascii_grid(res.water.is_water.astype(np.float64), grid, out / "water_mask.asc")
    if args.emit_intermediates:
        write_ascii_grid(res.dsm.elev, grid, out / "dsm.asc")
        write_ascii_grid(res.sparse.occupancy.astype(np.float64), grid, out / "occupancy.asc")
        write_ascii_grid(res.slope.slope_deg, grid, out / "slope.asc")
        write_ascii_grid(res.breaks.is_break.astype(np.float64), grid, out / "break_mask.asc")
        write_ascii_grid(res.segmentation.label.astype(np.float64), grid, out / "labels.asc")
        write_ascii_grid(res.dtm.source.astype(np.float64), grid, out / "source.asc")

    with open(out / "regions.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "area_m2", "rectangularity", "class"])
        for row in region_report_rows(res.stats, cfg.filter_params):
            writer.writerow([row[0], f"{row[1]:.6f}", f"{row[2]:.6f}", row[3]])
    _write_water_csv(out / "water_segments.csv", res.water)
    _write_json(out / "report.json", res.report)

    print(f"DTM written to {out / 'dtm.asc'}")
    print(
        f"grid {grid.ncols}x{grid.nrows} @ {grid.cell} m | "
        f"regions {res.segmentation.region_count} | "
        f"water segments {len(res.water.segments)} | "
        f"P {res.report['density']['P']:.4f} T {res.report['density']['water_threshold']}"
    )
    return 0


def _write_water_csv(path: Path, wmap) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "pixel_count", "elevation"])
        for seg in wmap.segments:
            writer.writerow([seg.id, seg.pixel_count, f"{seg.elevation:.6f}"])


def _read_to_dsm(args):
    pc = read_points(args.input, args.format, args.strict)
    grid = make_grid_spec(bounds(pc), args.cell)
    sparse = rasterize_min(pc, grid, getattr(args, "workers", 1))
    return pc, sparse


def _cmd_slope(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, sparse = _read_to_dsm(args)
    dsm = fill_voids_nearest(sparse)
    slp = slope_map(dsm)
    mask = break_line_mask(slp, args.slope_threshold)
    write_ascii_grid(slp.slope_deg, slp.grid, out / "slope.asc")
    write_ascii_grid(mask.is_break.astype(np.float64), mask.grid, out / "break_mask.asc")
    print(f"slope map written to {out / 'slope.asc'}")
    return 0


def _cmd_water(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wp = WaterParams(args.window, args.confidence, args.percentile, args.min_segment_px)
    _, sparse = _read_to_dsm(args)
    threshold = water_threshold(sparse.occupancy, wp)
    mask = water_mask(sparse.occupancy, threshold, wp.window)
    wmap = water_segments(mask, sparse, wp)
    write_ascii_grid(wmap.is_water.astype(np.float64), wmap.grid, out / "water_mask.asc")
    _write_water_csv(out / "water_segments.csv", wmap)
    nonvoid = int((sparse.occupancy > 0).sum())
    print(
        f"P {nonvoid / sparse.occupancy.size:.4f} | threshold {threshold} | "
        f"segments {len(wmap.segments)}"
    )
    return 0


def _cmd_compare(args) -> int:
    arr_a, grid_a = read_ascii_grid(args.raster_a)
    arr_b, grid_b = read_ascii_grid(args.raster_b)
    if grid_a != grid_b:
        raise InputDataError(f"grids differ: {grid_a} vs {grid_b}")
    exclude = None
    if args.mask:
        mask_arr, mask_grid = read_ascii_grid(args.mask)
        if mask_grid != grid_a:
            raise InputDataError("mask grid differs from the compared rasters")
        exclude = np.nan_to_num(mask_arr) != 0
    report = compare_tiled(arr_a, arr_b, exclude=exclude, tile_px=args.tile_px)
    write_tile_csv(report, args.out)
    if report.global_mae is None:
        print("no valid pixels to compare")
        return 0
    print(
        f"global MAE {report.global_mae:.4f} m | RMSE {report.global_rmse:.4f} m | "
        f"valid px {report.total_valid}"
    )
    for rank, (tr, tc) in enumerate(report.ranking[: args.top], start=1):
        tile = next(t for t in report.tiles if (t.row, t.col) == (tr, tc))
        print(f"  #{rank} tile ({tr},{tc}) MAE {tile.mae:.4f} RMSE {tile.rmse:.4f}")
    print(f"tile report written to {args.out}")
    return 0


def _cmd_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scn = load_scene(args.scene)
    pc = sample_points(scn, density=args.density, seed=args.seed)
    write_points_xyz(pc, out / "points.xyz")
    grid = make_grid_spec(scn.extent, args.cell)
    truth = truth_rasters(scn, grid)
    write_ascii_grid(truth.dtm, grid, out / "truth_dtm.asc")
    write_ascii_grid(truth.ground_mask.astype(np.float64), grid, out / "truth_ground.asc")
    write_ascii_grid(truth.water_mask.astype(np.float64), grid, out / "truth_water.asc")
    print(f"{pc.count} points written to {out / 'points.xyz'}")
    return 0


_COMMANDS = {
    "dtm": _cmd_dtm,
    "slope": _cmd_slope,
    "water": _cmd_water,
    "compare": _cmd_compare,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 3
    except (InputDataError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # noqa: BLE001 - invariant violations map to 4
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
