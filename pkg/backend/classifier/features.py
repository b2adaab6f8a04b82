"""Thumbnail features for the baseline classifier."""

from dataclasses import dataclass

import numpy as np

from backend.imaging import ColorSpace, RasterImage, resize_bilinear
from backend.imaging.raster import require_colorspace

from .errors import ClassifierError


@dataclass(frozen=True)
class FeatureVector:
    """Flattened s x s x 3 thumbnail scaled to [0, 1]."""

    image_id: str
    values: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


def featurize(image: RasterImage, side: int = 32, image_id: str = "") -> FeatureVector:
    """
    Resize to side x side, scale by 1/255 and flatten row-major, channels interleaved.

    Args:
        image: Preprocessed RGB raster
        side: Thumbnail side
        image_id: Id carried into the feature vector

    Returns:
        FeatureVector of dimension side * side * 3
    """
    require_colorspace(image, ColorSpace.RGB, "featurize")
    thumb = resize_bilinear(image, side, side)
    values = thumb.data.reshape(-1).astype(np.float64) / 255.0
    return FeatureVector(image_id, values)


def stack_features(features: list[FeatureVector]) -> np.ndarray:
    """Stack feature vectors into an (n, d) matrix; all must share a dimension."""
    if not features:
        return np.zeros((0, 0))
    dims = {f.dimension for f in features}
    if len(dims) != 1:
        raise ClassifierError(f"Feature dimensions differ: {sorted(dims)}")
    return np.vstack([f.values for f in features])
