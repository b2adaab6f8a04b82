"""Synthetic fundus-like images for demos and tests."""

from typing import Optional, Sequence

import numpy as np

from .raster import RasterImage


def make_fundus(
    width: int,
    height: int,
    radius: float,
    color: tuple[int, int, int] = (180, 90, 40),
    lesions: Sequence[tuple[float, float]] = (),
    lesion_radius: float = 4.0,
    lesion_color: tuple[int, int, int] = (250, 240, 170),
    seed: Optional[int] = None,
) -> RasterImage:
    """
    Draw a bright disk on a black frame, optionally with bright lesion blobs.

    Args:
        width: Frame width in pixels
        height: Frame height in pixels
        radius: Disk radius in pixels; the disk is centred in the frame
        color: Disk RGB colour
        lesions: Blob centres as (dx, dy) offsets from the disk centre, in
            units of the disk radius
        lesion_radius: Blob radius in pixels
        lesion_color: Blob RGB colour
        seed: If given, jitters the disk colour by up to +/-12 per channel

    Returns:
        RGB RasterImage
    """
    cy = (height - 1) / 2.0
    cx = (width - 1) / 2.0
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)

    disk_color = np.array(color, dtype=np.int64)
    if seed is not None:
        rng = np.random.default_rng(seed)
        disk_color = np.clip(disk_color + rng.integers(-12, 13, size=3), 0, 255)

    data = np.zeros((height, width, 3), dtype=np.uint8)
    disk = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2
    data[disk] = disk_color.astype(np.uint8)

    for dx, dy in lesions:
        ly = cy + dy * radius
        lx = cx + dx * radius
        blob = ((yy - ly) ** 2 + (xx - lx) ** 2 <= lesion_radius ** 2) & disk
        data[blob] = np.array(lesion_color, dtype=np.uint8)

    return RasterImage.rgb(data)
