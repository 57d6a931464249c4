"""Seamless DTM extraction from airborne LiDAR via break-line enclosure."""

from .errors import (
    AllVoidError,
    BadThresholdError,
    EmptyExtentError,
    EmptyInputError,
    GridMismatchError,
    GridTooSmallError,
    HeaderMismatchError,
    InputDataError,
    InsufficientGroundError,
    MalformedRecordError,
    NonPositiveCellError,
    ParameterError,
    PipelineError,
    UnsupportedFormatError,
)
from .groundfilter import (
    FilterParams,
    GroundMask,
    RegionStats,
    Segmentation,
    classify_regions,
    label_regions,
    min_area_rect,
    region_stats,
)
from .ingest import BBox, PointCloud, bounds, read_points, write_points_xyz
from .interp import (
    SOURCE_INTERPOLATED,
    SOURCE_MEASURED,
    SOURCE_WATER,
    DtmRaster,
    interpolate_nonground,
)
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .raster import (
    Dsm,
    GridSpec,
    SparseDsm,
    fill_voids_nearest,
    make_grid_spec,
    rasterize_min,
)
from .scene import Scene, load_scene, sample_points, truth_rasters
from .slope import BreakMask, SlopeMap, break_line_mask, slope_map
from .tiling import TileReport, compare_tiled
from .water import (
    WaterMap,
    WaterParams,
    apply_water,
    nearest_rank,
    water_mask,
    water_segments,
    water_threshold,
)

__version__ = "0.1.0"
