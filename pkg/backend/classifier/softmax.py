"""Multinomial softmax regression trained by full-batch gradient descent."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from backend.dataset import Task
from backend.storage import atomic_write_text

from .errors import ClassifierError, TrainingDivergedError
from .features import FeatureVector
from .predictions import PredictionRecord

logger = logging.getLogger(__name__)

MODEL_FORMAT = "rgp-softmax"
MODEL_VERSION = 1
DEFAULT_MODEL_ID = "softmax-baseline"


class BaselineConfig(BaseModel):
    """Hyperparameters of the desk-scale baseline."""

    side: int = Field(32, ge=1, description="Thumbnail side; features have side*side*3 values")
    lr: float = Field(1e-3, gt=0, description="Gradient descent step size")
    epochs: int = Field(300, ge=1, description="Full-batch epochs")
    l2: float = Field(1e-4, ge=0, description="L2 penalty on the weights")
    model_id: str = Field(DEFAULT_MODEL_ID, min_length=1, description="Id written to predictions")
    shuffle: bool = Field(False, description="Permute samples with the run seed before training")

    model_config = {"frozen": True}


@dataclass(frozen=True)
class SoftmaxModel:
    """Weights (K x d) and bias (K) of a trained softmax classifier."""

    weights: np.ndarray
    bias: np.ndarray
    task: Task
    model_id: str = DEFAULT_MODEL_ID

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        bias = np.array(self.bias, dtype=np.float64)
        task = Task(self.task)
        if weights.ndim != 2 or bias.shape != (weights.shape[0],):
            raise ClassifierError(
                f"Weights {weights.shape} and bias {bias.shape} do not describe a K x d model"
            )
        if weights.shape[0] != task.class_count:
            raise ClassifierError(
                f"Model has {weights.shape[0]} classes, task {task.value} needs {task.class_count}"
            )
        if not (np.isfinite(weights).all() and np.isfinite(bias).all()):
            raise ClassifierError("Model parameters must be finite")
        weights.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "task", task)

    @property
    def dimension(self) -> int:
        return int(self.weights.shape[1])

    @property
    def class_count(self) -> int:
        return int(self.weights.shape[0])

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "model_id": self.model_id,
            "task": self.task.value,
            "classes": self.class_count,
            "dimension": self.dimension,
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SoftmaxModel":
        if payload.get("format") != MODEL_FORMAT:
            raise ClassifierError(f"Not a softmax model file (format={payload.get('format')!r})")
        if payload.get("version") != MODEL_VERSION:
            raise ClassifierError(f"Unsupported model version {payload.get('version')!r}")
        model = cls(
            weights=np.array(payload["weights"], dtype=np.float64).reshape(
                payload["classes"], payload["dimension"]
            ),
            bias=np.array(payload["bias"], dtype=np.float64),
            task=Task(payload["task"]),
            model_id=payload.get("model_id", DEFAULT_MODEL_ID),
        )
        return model


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_gradient(
    weights: np.ndarray,
    bias: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Mean cross-entropy plus l2 * ||W||^2 / 2, and its gradient.

    Args:
        weights: (K, d)
        bias: (K,)
        features: (n, d)
        labels: (n,) class indices
        l2: Penalty strength

    Returns:
        (loss, dL/dW, dL/db)
    """
    n = features.shape[0]
    rows = np.arange(n)
    with np.errstate(over="ignore", invalid="ignore"):
        logits = features @ weights.T + bias
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1))
        log_probs = shifted - log_norm[:, None]
        loss = -log_probs[rows, labels].mean() + 0.5 * l2 * float(np.sum(weights * weights))

        residual = np.exp(log_probs)
        residual[rows, labels] -= 1.0
        residual /= n
        grad_w = residual.T @ features + l2 * weights
        grad_b = residual.sum(axis=0)
    return float(loss), grad_w, grad_b


@dataclass
class TrainingResult:
    """Trained model and the loss at the start of every epoch."""

    model: SoftmaxModel
    losses: list[float] = field(default_factory=list)
    final_loss: float = float("nan")


EpochCallback = Callable[[int, float, SoftmaxModel], None]


def _check_training_data(features: np.ndarray, labels: np.ndarray, task: Task) -> None:
    if features.ndim != 2 or features.shape[0] == 0:
        raise ClassifierError(f"Features must be a non-empty (n, d) matrix, got {features.shape}")
    if labels.shape != (features.shape[0],):
        raise ClassifierError(f"{labels.shape[0]} labels for {features.shape[0]} samples")
    if labels.min() < 0 or labels.max() >= task.class_count:
        raise ClassifierError(f"Labels must lie in [0, {task.class_count})")
    counts = np.bincount(labels, minlength=task.class_count)
    empty = [k for k, c in enumerate(counts) if c == 0]
    if empty:
        raise ClassifierError(f"No training samples for class(es) {empty}")


def train_softmax(
    features: np.ndarray,
    labels: Sequence[int],
    task: Task,
    lr: float = 1e-3,
    epochs: int = 300,
    l2: float = 1e-4,
    seed: int = 0,
    shuffle: bool = False,
    model_id: str = DEFAULT_MODEL_ID,
    on_epoch: Optional[EpochCallback] = None,
) -> TrainingResult:
    """
    Fit a softmax classifier by full-batch gradient descent from zero weights.

    Args:
        features: (n, d) matrix
        labels: n class indices
        task: Classification task (fixes K)
        lr: Step size
        epochs: Number of full-batch steps
        l2: L2 penalty on the weights
        seed: Seed for the optional sample permutation
        shuffle: Permute samples before training (changes only summation order)
        model_id: Id stored in the model and its predictions
        on_epoch: Called after each step with (epoch, loss before the step, model)

    Returns:
        TrainingResult

    Raises:
        ClassifierError: On malformed inputs or a class without samples
        TrainingDivergedError: If the loss or gradient becomes non-finite
    """
    task = Task(task)
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    _check_training_data(x, y, task)
    if shuffle:
        order = np.random.default_rng(seed).permutation(x.shape[0])
        x, y = x[order], y[order]

    weights = np.zeros((task.class_count, x.shape[1]))
    bias = np.zeros(task.class_count)
    losses: list[float] = []

    for epoch in range(1, epochs + 1):
        loss, grad_w, grad_b = loss_and_gradient(weights, bias, x, y, l2)
        if not (np.isfinite(loss) and np.isfinite(grad_w).all() and np.isfinite(grad_b).all()):
            raise TrainingDivergedError(epoch, losses[-1] if losses else None)
        losses.append(loss)
        weights = weights - lr * grad_w
        bias = bias - lr * grad_b
        if not (np.isfinite(weights).all() and np.isfinite(bias).all()):
            raise TrainingDivergedError(epoch, loss)
        if on_epoch is not None:
            on_epoch(epoch, loss, SoftmaxModel(weights, bias, task, model_id))
        logger.debug("epoch %d loss %.6f", epoch, loss)

    final_loss, _, _ = loss_and_gradient(weights, bias, x, y, l2)
    if not np.isfinite(final_loss):
        raise TrainingDivergedError(epochs, losses[-1] if losses else None)
    return TrainingResult(SoftmaxModel(weights, bias, task, model_id), losses, final_loss)


def predict(model: SoftmaxModel, feature: FeatureVector) -> PredictionRecord:
    """
    Class probabilities softmax(Wx + b) for one feature vector.

    Raises:
        ClassifierError: If the feature dimension does not match the model
    """
    if feature.dimension != model.dimension:
        raise ClassifierError(
            f"Feature dimension {feature.dimension} != model dimension {model.dimension}"
        )
    probs = softmax(model.weights @ feature.values + model.bias)[0]
    return PredictionRecord(
        image_id=feature.image_id or "-", model_id=model.model_id, probs=tuple(probs.tolist())
    )


def predict_batch(model: SoftmaxModel, features: Sequence[FeatureVector]) -> list[PredictionRecord]:
    """Predict every feature vector; order follows the input."""
    return [predict(model, f) for f in features]


def accuracy_of(model: SoftmaxModel, features: np.ndarray, labels: Sequence[int]) -> float:
    """Fraction of samples whose argmax matches the label."""
    if len(labels) == 0:
        return float("nan")
    probs = softmax(np.asarray(features) @ model.weights.T + model.bias)
    return float(np.mean(np.argmax(probs, axis=1) == np.asarray(labels)))


def save_model(model: SoftmaxModel, path: str | Path) -> Path:
    """Write the model as versioned JSON, atomically."""
    return atomic_write_text(path, json.dumps(model.to_dict(), indent=2) + "\n")


def load_model(path: str | Path) -> SoftmaxModel:
    """Read a model written by save_model."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ClassifierError(f"Model file {path} is not valid JSON: {e}") from e
    return SoftmaxModel.from_dict(payload)
