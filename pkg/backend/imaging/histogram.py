"""Histogram, Otsu threshold and contrast-limited adaptive equalization."""

import numpy as np

from .errors import ImagingError
from .raster import Histogram256, RasterImage, require_channels, to_uint8

LEVELS = 256


def compute_histogram(image: RasterImage) -> Histogram256:
    """
    Count the pixels at each 8-bit level of a single-channel image.

    Args:
        image: Single-channel raster

    Returns:
        Histogram256 whose bins sum to the pixel count

    Raises:
        ImagingError: If the image has more than one channel
    """
    require_channels(image, 1, "compute_histogram")
    return Histogram256(np.bincount(image.plane(0).ravel(), minlength=LEVELS))


def otsu_threshold(hist: Histogram256) -> int:
    """
    Pick the level t maximizing the between-class variance.

    Class 0 holds values <= t. The score w0*w1*(mu0 - mu1)^2 is compared in
    exact integer arithmetic as (N*S0 - S*c0)^2 / (c0*c1), which differs from
    it only by the constant factor N^2, so ties are real ties and the
    smallest maximizing t wins.

    Args:
        hist: Histogram of a non-empty image

    Returns:
        Threshold level in [0, 255]

    Raises:
        ImagingError: If the histogram is empty
    """
    counts = [int(c) for c in hist.bins]
    total = sum(counts)
    if total <= 0:
        raise ImagingError("otsu_threshold needs a non-empty histogram")
    weighted_total = sum(level * count for level, count in enumerate(counts))

    best_t = 0
    best_num, best_den = 0, 1
    c0 = 0
    s0 = 0
    for t in range(LEVELS):
        c0 += counts[t]
        s0 += t * counts[t]
        c1 = total - c0
        if c0 == 0 or c1 == 0:
            num, den = 0, 1
        else:
            num = (total * s0 - weighted_total * c0) ** 2
            den = c0 * c1
        # num/den > best_num/best_den
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def _tile_edges(length: int, tiles: int) -> np.ndarray:
    return (np.arange(tiles + 1) * length) // tiles


def _clipped_lut(block: np.ndarray, clip_limit: float) -> np.ndarray:
    pixels = block.size
    hist = np.bincount(block.ravel(), minlength=LEVELS).astype(np.float64)
    clip = clip_limit * pixels / LEVELS
    clipped = np.minimum(hist, clip)
    excess = float(hist.sum() - clipped.sum())
    clipped += excess / LEVELS
    cdf = np.cumsum(clipped)
    occupied = np.flatnonzero(clipped > 0)
    cdf_min = cdf[occupied[0]]
    span = pixels - cdf_min
    if span <= 0:
        return np.arange(LEVELS, dtype=np.uint8)
    return to_uint8((cdf - cdf_min) * 255.0 / span)


def _check_grid(plane: np.ndarray, tiles: tuple[int, int]) -> tuple[int, int]:
    tiles_y, tiles_x = int(tiles[0]), int(tiles[1])
    if tiles_y < 1 or tiles_x < 1:
        raise ImagingError(f"Tile grid must be at least 1x1, got {tiles_y}x{tiles_x}")
    height, width = plane.shape
    if height < tiles_y or width < tiles_x:
        raise ImagingError(
            f"Image {width}x{height} is smaller than the {tiles_x}x{tiles_y} tile grid"
        )
    return tiles_y, tiles_x


def tile_mappings(
    channel: RasterImage,
    tiles: tuple[int, int] = (8, 8),
    clip_limit: float = 4.0,
) -> np.ndarray:
    """
    Build the clipped-CDF lookup table of every tile.

    Args:
        channel: Single-channel raster
        tiles: Grid as (rows, columns)
        clip_limit: Multiple of the uniform bin height at which bins are clipped

    Returns:
        uint8 array of shape (rows, columns, 256); each table is monotone
    """
    require_channels(channel, 1, "tile_mappings")
    if clip_limit < 1.0:
        raise ImagingError(f"clip_limit must be >= 1.0, got {clip_limit}")
    plane = channel.plane(0)
    tiles_y, tiles_x = _check_grid(plane, tiles)
    rows = _tile_edges(plane.shape[0], tiles_y)
    cols = _tile_edges(plane.shape[1], tiles_x)

    luts = np.empty((tiles_y, tiles_x, LEVELS), dtype=np.uint8)
    for i in range(tiles_y):
        for j in range(tiles_x):
            block = plane[rows[i]:rows[i + 1], cols[j]:cols[j + 1]]
            luts[i, j] = _clipped_lut(block, clip_limit)
    return luts


def _interp_axis(length: int, tiles: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    edges = _tile_edges(length, tiles)
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    position = np.interp(np.arange(length, dtype=np.float64), centers, np.arange(tiles))
    lower = np.minimum(np.floor(position).astype(np.int64), tiles - 1)
    upper = np.minimum(lower + 1, tiles - 1)
    return lower, upper, position - lower


def adaptive_hist_eq(
    channel: RasterImage,
    tiles: tuple[int, int] = (8, 8),
    clip_limit: float = 4.0,
) -> RasterImage:
    """
    Contrast-limited adaptive histogram equalization.

    Each pixel is mapped through the tables of the (up to) four tiles whose
    centres surround it, blended bilinearly. Pixels outside the outermost
    centres use the nearest tiles only.

    Args:
        channel: Single-channel raster
        tiles: Grid as (rows, columns)
        clip_limit: Multiple of the uniform bin height at which bins are clipped

    Returns:
        Equalized Gray raster

    Raises:
        ImagingError: If the image is multi-channel or smaller than the grid
    """
    luts = tile_mappings(channel, tiles, clip_limit).astype(np.float64)
    plane = channel.plane(0)
    height, width = plane.shape
    tiles_y, tiles_x = luts.shape[:2]

    y0, y1, wy = _interp_axis(height, tiles_y)
    x0, x1, wx = _interp_axis(width, tiles_x)
    y0, y1, wy = y0[:, None], y1[:, None], wy[:, None]
    x0, x1, wx = x0[None, :], x1[None, :], wx[None, :]

    top = (1.0 - wx) * luts[y0, x0, plane] + wx * luts[y0, x1, plane]
    bottom = (1.0 - wx) * luts[y1, x0, plane] + wx * luts[y1, x1, plane]
    out = (1.0 - wy) * top + wy * bottom

    return RasterImage.gray(to_uint8(out))
