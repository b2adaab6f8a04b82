"""Confusion matrices and the rates derived from them."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix as sk_confusion_matrix

from .errors import MetricsError


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts; rows are true classes, columns predicted classes."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.shape[0] < 2:
            raise MetricsError(f"Confusion matrix must be K x K with K >= 2, got {counts.shape}")
        if (counts < 0).any():
            raise MetricsError("Confusion matrix counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def k(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_sums(self) -> list[int]:
        return [int(s) for s in self.counts.sum(axis=1)]

    def to_list(self) -> list[list[int]]:
        return self.counts.tolist()


def _as_labels(values: Sequence[int], name: str) -> np.ndarray:
    array = np.asarray(values)
    if array.ndim != 1:
        raise MetricsError(f"{name} must be one-dimensional")
    if array.size and not np.issubdtype(array.dtype, np.integer):
        if not np.all(np.equal(np.mod(array, 1), 0)):
            raise MetricsError(f"{name} must be integer class indices")
    return array.astype(np.int64)


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int], k: int) -> ConfusionMatrix:
    """
    Count (true, predicted) pairs.

    Raises:
        MetricsError: On a length mismatch or a label outside [0, k)
    """
    truth = _as_labels(y_true, "labels")
    predicted = _as_labels(y_pred, "predictions")
    if truth.shape != predicted.shape:
        raise MetricsError(f"{truth.size} labels but {predicted.size} predictions")
    for name, values in (("label", truth), ("prediction", predicted)):
        if values.size and (values.min() < 0 or values.max() >= k):
            raise MetricsError(f"{name} outside [0, {k})")
    if truth.size == 0:
        return ConfusionMatrix(np.zeros((k, k), dtype=np.int64))
    return ConfusionMatrix(sk_confusion_matrix(truth, predicted, labels=list(range(k))))


def accuracy(cm: ConfusionMatrix) -> float:
    """Trace over total."""
    if cm.total == 0:
        raise MetricsError("accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


@dataclass(frozen=True)
class BinaryRates:
    """Sensitivity and specificity; None where the rate has no denominator."""

    sensitivity: Optional[float]
    specificity: Optional[float]
    undefined: tuple[str, ...] = field(default=())


def binary_rates(cm: ConfusionMatrix) -> BinaryRates:
    """
    TP/(TP+FN) and TN/(TN+FP) with class 1 as positive.

    An empty positive (or negative) row leaves sensitivity (or specificity)
    undefined and flagged.
    """
    if cm.k != 2:
        raise MetricsError(f"binary rates need a 2 x 2 matrix, got K={cm.k}")
    (tn, fp), (fn, tp) = cm.counts.tolist()
    undefined = []
    sensitivity = specificity = None
    if tp + fn:
        sensitivity = tp / (tp + fn)
    else:
        undefined.append("sensitivity")
    if tn + fp:
        specificity = tn / (tn + fp)
    else:
        undefined.append("specificity")
    return BinaryRates(sensitivity, specificity, tuple(undefined))


def class_rates(cm: ConfusionMatrix, k: int) -> BinaryRates:
    """One-vs-rest recall and true-negative rate of class k."""
    counts = cm.counts
    tp = int(counts[k, k])
    fn = int(counts[k].sum()) - tp
    fp = int(counts[:, k].sum()) - tp
    tn = cm.total - tp - fn - fp
    return binary_rates(ConfusionMatrix([[tn, fp], [fn, tp]]))


def confusion_matrix_frame(cm: ConfusionMatrix, class_names: Sequence[str]) -> pd.DataFrame:
    """Counts labelled by class name, rows true and columns predicted."""
    if len(class_names) != cm.k:
        raise MetricsError(f"{len(class_names)} class names for a {cm.k}-class matrix")
    return pd.DataFrame(
        cm.counts,
        index=pd.Index(list(class_names), name="true"),
        columns=pd.Index(list(class_names), name="predicted"),
    )
