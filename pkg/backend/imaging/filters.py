"""Local average colour subtraction and bilinear resizing."""

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ImagingError
from .raster import RasterImage, to_uint8

TRUNCATE_SIGMAS = 3.0


def gaussian_blur(plane: np.ndarray, sigma: float) -> np.ndarray:
    """
    Gaussian blur of one plane with edge replication.

    The kernel is truncated at 3 sigma; the returned array is float64.
    """
    return gaussian_filter(
        np.asarray(plane, dtype=np.float64),
        sigma=sigma,
        mode="nearest",
        truncate=TRUNCATE_SIGMAS,
    )


def subtract_local_average(
    image: RasterImage,
    radius: float,
    gain: float = 4.0,
    offset: float = 128.0,
) -> RasterImage:
    """
    Subtract the local average colour from every pixel.

    Per channel: out = clamp(gain * (in - blur(in)) + offset), where blur is a
    Gaussian with sigma = radius / 2.

    Args:
        image: Input raster (any channel count; the colour space tag is kept)
        radius: Local-average radius in pixels, >= 1
        gain: Contrast multiplier
        offset: Level that a flat region maps to

    Returns:
        Raster of the same shape and colour space
    """
    if radius < 1:
        raise ImagingError(f"radius must be >= 1, got {radius}")
    sigma = radius / 2.0
    planes = []
    for c in range(image.channels):
        plane = image.plane(c).astype(np.float64)
        planes.append(gain * (plane - gaussian_blur(plane, sigma)) + offset)
    return RasterImage(to_uint8(np.stack(planes, axis=2)), image.colorspace)


def _source_coords(out_len: int, in_len: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # half-pixel centres: src = (dst + 0.5) * in / out - 0.5
    src = (np.arange(out_len, dtype=np.float64) + 0.5) * (in_len / out_len) - 0.5
    src = np.clip(src, 0.0, in_len - 1)
    lower = np.floor(src).astype(np.int64)
    upper = np.minimum(lower + 1, in_len - 1)
    return lower, upper, src - lower


def resize_bilinear(image: RasterImage, out_w: int, out_h: int) -> RasterImage:
    """
    Resize with bilinear interpolation and half-pixel centre alignment.

    Args:
        image: Input raster
        out_w: Output width, >= 1
        out_h: Output height, >= 1

    Returns:
        Resized raster with the input's colour space
    """
    if out_w < 1 or out_h < 1:
        raise ImagingError(f"Output size must be at least 1x1, got {out_w}x{out_h}")
    if (out_w, out_h) == (image.width, image.height):
        return image

    data = image.data.astype(np.float64)
    y0, y1, wy = _source_coords(out_h, image.height)
    x0, x1, wx = _source_coords(out_w, image.width)
    wy = wy[:, None, None]
    wx = wx[None, :, None]

    top = (1.0 - wx) * data[y0][:, x0] + wx * data[y0][:, x1]
    bottom = (1.0 - wx) * data[y1][:, x0] + wx * data[y1][:, x1]
    return RasterImage(to_uint8((1.0 - wy) * top + wy * bottom), image.colorspace)
