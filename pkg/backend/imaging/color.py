"""Full-range BT.601 colour conversions."""

import numpy as np

from .raster import ColorSpace, RasterImage, require_colorspace, to_uint8

# Rows produce (Y, Cb, Cr) from (R, G, B); chroma gets a +128 offset.
RGB_TO_YCBCR = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
YCBCR_TO_RGB = np.array(
    [
        [1.0, 0.0, 1.402],
        [1.0, -0.344136, -0.714136],
        [1.0, 1.772, 0.0],
    ]
)
CHROMA_OFFSET = np.array([0.0, 128.0, 128.0])


def rgb_to_ycbcr(image: RasterImage) -> RasterImage:
    """
    Convert RGB to full-range YCbCr, rounding half up and clamping to [0, 255].

    Raises:
        ImagingError: If the image is not tagged RGB
    """
    require_colorspace(image, ColorSpace.RGB, "rgb_to_ycbcr")
    rgb = image.data.astype(np.float64)
    ycc = rgb @ RGB_TO_YCBCR.T + CHROMA_OFFSET
    return RasterImage(to_uint8(ycc), ColorSpace.YCBCR)


def ycbcr_to_rgb(image: RasterImage) -> RasterImage:
    """
    Convert full-range YCbCr back to RGB, rounding half up and clamping to [0, 255].

    Raises:
        ImagingError: If the image is not tagged YCbCr
    """
    require_colorspace(image, ColorSpace.YCBCR, "ycbcr_to_rgb")
    ycc = image.data.astype(np.float64) - CHROMA_OFFSET
    rgb = ycc @ YCBCR_TO_RGB.T
    return RasterImage(to_uint8(rgb), ColorSpace.RGB)


def to_gray(image: RasterImage) -> RasterImage:
    """Luma of an RGB image (the Y plane of rgb_to_ycbcr)."""
    require_colorspace(image, ColorSpace.RGB, "to_gray")
    luma = image.data.astype(np.float64) @ RGB_TO_YCBCR[0]
    return RasterImage.gray(to_uint8(luma))


def split_luma(image: RasterImage) -> tuple[RasterImage, np.ndarray]:
    """Split a YCbCr image into its Y plane and the untouched chroma planes."""
    require_colorspace(image, ColorSpace.YCBCR, "split_luma")
    return RasterImage.gray(image.plane(0)), image.data[:, :, 1:]


def merge_luma(luma: RasterImage, chroma: np.ndarray) -> RasterImage:
    """Reassemble a YCbCr image from a Y plane and chroma planes."""
    stacked = np.concatenate([luma.data, chroma], axis=2)
    return RasterImage(stacked, ColorSpace.YCBCR)
