"""Fundus image preprocessing on 8-bit rasters."""

from .color import rgb_to_ycbcr, to_gray, ycbcr_to_rgb
from .errors import BlankImageError, ImagingError, PreprocessError
from .filters import gaussian_blur, resize_bilinear, subtract_local_average
from .histogram import adaptive_hist_eq, compute_histogram, otsu_threshold, tile_mappings
from .pipeline import (
    STAGES,
    BoundingBox,
    PreprocessConfig,
    RimCrop,
    crop_to_rim,
    iter_stages,
    preprocess,
)
from .raster import ColorSpace, Histogram256, RasterImage
from .synthetic import make_fundus

__all__ = [
    "BlankImageError",
    "BoundingBox",
    "ColorSpace",
    "Histogram256",
    "ImagingError",
    "PreprocessConfig",
    "PreprocessError",
    "RasterImage",
    "RimCrop",
    "STAGES",
    "adaptive_hist_eq",
    "compute_histogram",
    "crop_to_rim",
    "gaussian_blur",
    "iter_stages",
    "make_fundus",
    "otsu_threshold",
    "preprocess",
    "resize_bilinear",
    "rgb_to_ycbcr",
    "subtract_local_average",
    "tile_mappings",
    "to_gray",
    "ycbcr_to_rgb",
]
