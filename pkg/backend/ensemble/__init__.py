"""Inference-time fusion of per-model probabilities."""

from .errors import FusionError
from .fusion import (
    Diagnosis,
    EnsembleInput,
    FusionReport,
    FusionStrategy,
    fuse,
    fuse_batch,
    fuse_majority,
    fuse_mean,
    group_predictions,
    write_diagnoses,
)

__all__ = [
    "Diagnosis",
    "EnsembleInput",
    "FusionError",
    "FusionReport",
    "FusionStrategy",
    "fuse",
    "fuse_batch",
    "fuse_majority",
    "fuse_mean",
    "group_predictions",
    "write_diagnoses",
]
