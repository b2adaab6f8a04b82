"""Raster image and histogram types."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ImagingError


class ColorSpace(str, Enum):
    """Colour space tag carried by every raster."""

    RGB = "RGB"
    YCBCR = "YCbCr"
    GRAY = "Gray"


_CHANNELS = {ColorSpace.RGB: 3, ColorSpace.YCBCR: 3, ColorSpace.GRAY: 1}


@dataclass(frozen=True)
class RasterImage:
    """
    An H x W x C 8-bit image with a colour space tag.

    `data` is always a read-only uint8 array of shape (height, width, channels),
    row-major with interleaved channels.
    """

    data: np.ndarray
    colorspace: ColorSpace

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, np.newaxis]
        if data.ndim != 3:
            raise ImagingError(f"Raster data must be HxWxC, got shape {data.shape}")
        if data.dtype != np.uint8:
            raise ImagingError(f"Raster data must be uint8, got {data.dtype}")
        colorspace = ColorSpace(self.colorspace)
        expected = _CHANNELS[colorspace]
        if data.shape[2] != expected:
            raise ImagingError(
                f"{colorspace.value} image needs {expected} channel(s), got {data.shape[2]}"
            )
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ImagingError("Raster must be at least 1x1")
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "colorspace", colorspace)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    def plane(self, index: int = 0) -> np.ndarray:
        """Return one channel as a 2-D array."""
        return self.data[:, :, index]

    @classmethod
    def gray(cls, values: np.ndarray) -> "RasterImage":
        """Build a single-channel image from a 2-D array."""
        return cls(np.asarray(values, dtype=np.uint8), ColorSpace.GRAY)

    @classmethod
    def rgb(cls, values: np.ndarray) -> "RasterImage":
        """Build an RGB image from an HxWx3 array."""
        return cls(np.asarray(values, dtype=np.uint8), ColorSpace.RGB)


@dataclass(frozen=True)
class Histogram256:
    """Counts of each 8-bit level."""

    bins: np.ndarray

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.int64)
        if bins.shape != (256,):
            raise ImagingError(f"Histogram needs 256 bins, got shape {bins.shape}")
        if (bins < 0).any():
            raise ImagingError("Histogram counts must be non-negative")
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    @property
    def total(self) -> int:
        return int(self.bins.sum())


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Round half up and clamp to [0, 255]."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def require_channels(image: RasterImage, channels: int, operation: str) -> None:
    if image.channels != channels:
        raise ImagingError(
            f"{operation} needs a {channels}-channel image, got {image.channels} channel(s)"
        )


def require_colorspace(image: RasterImage, colorspace: ColorSpace, operation: str) -> None:
    if image.colorspace != colorspace:
        raise ImagingError(
            f"{operation} needs a {colorspace.value} image, got {image.colorspace.value}"
        )
