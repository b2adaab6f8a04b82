"""Fundus preprocessing chain: crop, equalize, subtract, resize."""

import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from pydantic import BaseModel, Field, field_validator

from .color import merge_luma, rgb_to_ycbcr, split_luma, to_gray, ycbcr_to_rgb
from .errors import BlankImageError, ImagingError, PreprocessError
from .filters import resize_bilinear, subtract_local_average
from .histogram import adaptive_hist_eq, compute_histogram, otsu_threshold
from .raster import ColorSpace, RasterImage, require_colorspace

logger = logging.getLogger(__name__)

STAGES = ("crop", "eq", "subtract", "resize")


class PreprocessConfig(BaseModel):
    """Parameters of the preprocessing chain."""

    clahe_tiles: tuple[int, int] = Field((8, 8), description="CLAHE grid as (rows, columns)")
    clahe_clip_limit: float = Field(
        4.0, ge=1.0, description="Clip at this multiple of a uniform bin"
    )
    blur_radius_fraction: float = Field(
        0.30, gt=0, description="Local-average radius as a fraction of the rim radius"
    )
    subtraction_gain: float = Field(4.0, gt=0, description="Gain applied to in - local average")
    subtraction_offset: float = Field(128.0, gt=0, le=255, description="Level of flat regions")
    output_size: int = Field(448, ge=32, description="Side of the square output image")

    model_config = {"frozen": True}

    @field_validator("clahe_tiles")
    @classmethod
    def _positive_tiles(cls, value: tuple[int, int]) -> tuple[int, int]:
        if min(value) < 1:
            raise ValueError(f"clahe_tiles must be positive, got {value}")
        return value


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive pixel box."""

    top: int
    left: int
    bottom: int
    right: int

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def width(self) -> int:
        return self.right - self.left + 1


@dataclass(frozen=True)
class RimCrop:
    """Result of cropping to the retinal rim."""

    image: RasterImage
    box: BoundingBox
    threshold: int

    @property
    def rim_radius(self) -> float:
        return max(self.box.width, self.box.height) / 2.0


def crop_to_rim(image: RasterImage) -> RimCrop:
    """
    Crop an RGB fundus image to the bounding box of its bright foreground.

    The luma is thresholded with Otsu's method; pixels strictly above the
    threshold are foreground.

    Args:
        image: RGB raster

    Returns:
        RimCrop with the cropped image, box and threshold

    Raises:
        BlankImageError: If no pixel lies above the threshold
    """
    require_colorspace(image, ColorSpace.RGB, "crop_to_rim")
    gray = to_gray(image)
    threshold = otsu_threshold(compute_histogram(gray))
    mask = gray.plane(0) > threshold

    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise BlankImageError()

    box = BoundingBox(int(rows[0]), int(cols[0]), int(rows[-1]), int(cols[-1]))
    cropped = image.data[box.top:box.bottom + 1, box.left:box.right + 1]
    return RimCrop(RasterImage(cropped, ColorSpace.RGB), box, threshold)


def equalize_luma(image: RasterImage, config: PreprocessConfig) -> RasterImage:
    """Run CLAHE on the Y plane of an RGB image and convert back to RGB."""
    luma, chroma = split_luma(rgb_to_ycbcr(image))
    equalized = adaptive_hist_eq(luma, config.clahe_tiles, config.clahe_clip_limit)
    return ycbcr_to_rgb(merge_luma(equalized, chroma))


def iter_stages(
    image: RasterImage,
    config: PreprocessConfig | None = None,
) -> Iterator[tuple[str, RasterImage]]:
    """
    Run the preprocessing chain, yielding the image after every stage.

    Args:
        image: RGB fundus raster
        config: Chain parameters (defaults if None)

    Yields:
        (stage name, raster) for crop, eq, subtract and resize in that order

    Raises:
        PreprocessError: Wrapping the failing stage's error
    """
    config = config or PreprocessConfig()
    stage = STAGES[0]
    try:
        rim = crop_to_rim(image)
        yield stage, rim.image

        stage = "eq"
        current = equalize_luma(rim.image, config)
        yield stage, current

        stage = "subtract"
        radius = max(1.0, config.blur_radius_fraction * rim.rim_radius)
        current = subtract_local_average(
            current, radius, config.subtraction_gain, config.subtraction_offset
        )
        yield stage, current

        stage = "resize"
        current = resize_bilinear(current, config.output_size, config.output_size)
        yield stage, current
    except ImagingError as e:
        if isinstance(e, PreprocessError):
            raise
        logger.debug("Preprocessing failed at stage %s: %s", stage, e)
        raise PreprocessError(stage, e) from e


def preprocess(image: RasterImage, config: PreprocessConfig | None = None) -> RasterImage:
    """
    Apply the full chain and return the final output_size x output_size RGB image.

    Raises:
        PreprocessError: With `.stage` naming the stage that failed
    """
    result = None
    for _, result in iter_stages(image, config):
        pass
    return result
