"""Softmax baseline classifier and prediction file handling."""

from .errors import ClassifierError, PredictionFileError, TrainingDivergedError
from .features import FeatureVector, featurize, stack_features
from .predictions import (
    PredictionRecord,
    PredictionSet,
    load_predictions,
    prob_columns,
    write_predictions,
)
from .softmax import (
    BaselineConfig,
    SoftmaxModel,
    TrainingResult,
    accuracy_of,
    load_model,
    loss_and_gradient,
    predict,
    predict_batch,
    save_model,
    softmax,
    train_softmax,
)

__all__ = [
    "BaselineConfig",
    "ClassifierError",
    "FeatureVector",
    "PredictionFileError",
    "PredictionRecord",
    "PredictionSet",
    "SoftmaxModel",
    "TrainingDivergedError",
    "TrainingResult",
    "accuracy_of",
    "featurize",
    "load_model",
    "load_predictions",
    "loss_and_gradient",
    "predict",
    "predict_batch",
    "prob_columns",
    "save_model",
    "softmax",
    "stack_features",
    "train_softmax",
    "write_predictions",
]
