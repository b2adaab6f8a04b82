"""Atomic file output and image decode/encode."""

import io
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from backend.imaging.raster import ColorSpace, RasterImage

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def atomic_write_bytes(path: str | Path, payload: bytes) -> Path:
    """
    Write bytes to a file atomically (temp file + rename).

    Args:
        path: Destination file
        payload: Bytes to write

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write UTF-8 text atomically; line endings are kept as given."""
    return atomic_write_bytes(path, text.encode("utf-8"))


def load_image(path: str | Path) -> RasterImage:
    """
    Decode a PNG or JPEG file into an RGB raster.

    Args:
        path: Image file

    Returns:
        RGB RasterImage

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the file cannot be decoded
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Image not found: {path}")
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            data = np.asarray(rgb, dtype=np.uint8).copy()
    except OSError as e:
        raise ValueError(f"Cannot decode image {path}: {e}") from e
    return RasterImage(data, ColorSpace.RGB)


def encode_png(image: RasterImage) -> bytes:
    """Encode a raster as PNG bytes (Gray or RGB; YCbCr is stored as raw samples)."""
    if image.channels == 1:
        pil = Image.fromarray(np.ascontiguousarray(image.data[:, :, 0]))
    else:
        pil = Image.fromarray(np.ascontiguousarray(image.data))
    buffer = io.BytesIO()
    pil.save(buffer, format="PNG")
    return buffer.getvalue()


def save_png(image: RasterImage, path: str | Path) -> Path:
    """Write a raster to a PNG file atomically."""
    return atomic_write_bytes(path, encode_png(image))


def find_image(images_dir: str | Path, image_id: str) -> Path:
    """
    Locate the image file for an id inside a directory.

    Args:
        images_dir: Directory holding <image_id>.<png|jpg|jpeg> files
        image_id: Manifest image id

    Returns:
        Path to the first existing candidate

    Raises:
        FileNotFoundError: If no candidate exists
    """
    images_dir = Path(images_dir)
    for suffix in IMAGE_SUFFIXES + tuple(s.upper() for s in IMAGE_SUFFIXES):
        candidate = images_dir / f"{image_id}{suffix}"
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"No image file for {image_id} in {images_dir}")
