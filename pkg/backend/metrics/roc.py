"""ROC curves, AUC and fixed-specificity operating points."""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata
from sklearn.metrics import auc as trapezoid_area

from .errors import MetricsError, UndefinedMetricError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RocCurve:
    """
    ROC points from (0, 0) to (1, 1).

    `thresholds[i]` is the score cut that yields point i when a sample is
    called positive iff its score >= the cut; the first point uses +inf.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    positives: int
    negatives: int

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def __len__(self) -> int:
        return int(self.fpr.shape[0])


def _binary_inputs(scores: Sequence[float], labels: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or s.shape != y.shape:
        raise MetricsError(f"{s.size} scores but {y.size} labels")
    if not np.isfinite(s).all():
        raise MetricsError("scores must be finite")
    if not np.isin(y, (0, 1)).all():
        raise MetricsError("labels must be 0 or 1")
    y = y.astype(np.int64)
    positives = int(y.sum())
    if positives == 0 or positives == y.size:
        raise UndefinedMetricError()
    return s, y


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> RocCurve:
    """
    Sweep every distinct score as a threshold, highest first.

    Tied scores form a single step, so a run of ties appears as one
    diagonal segment.

    Raises:
        UndefinedMetricError: If labels hold a single class
    """
    s, y = _binary_inputs(scores, labels)
    values, inverse = np.unique(s, return_inverse=True)
    pos_at = np.bincount(inverse, weights=y, minlength=values.size)[::-1]
    all_at = np.bincount(inverse, minlength=values.size)[::-1]
    tp = np.concatenate(([0], np.cumsum(pos_at))).astype(np.int64)
    fp = np.concatenate(([0], np.cumsum(all_at))).astype(np.int64) - tp

    p = int(y.sum())
    n = int(y.size - p)
    return RocCurve(
        fpr=fp / n,
        tpr=tp / p,
        thresholds=np.concatenate(([np.inf], values[::-1])),
        positives=p,
        negatives=n,
    )


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under a ROC curve."""
    return float(trapezoid_area(curve.fpr, curve.tpr))


def auc_from_scores(scores: Sequence[float], labels: Sequence[int]) -> float:
    return auc(roc_curve(scores, labels))


def mann_whitney_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """
    Rank-sum AUC: P(score of a positive > score of a negative), ties count half.

    Computed from average ranks, independently of the ROC sweep.
    """
    s, y = _binary_inputs(scores, labels)
    ranks = rankdata(s, method="average")
    p = int(y.sum())
    n = int(y.size - p)
    u = float(ranks[y == 1].sum()) - p * (p + 1) / 2.0
    return u / (p * n)


@dataclass(frozen=True)
class OperatingPoint:
    """Best sensitivity among thresholds meeting a specificity target."""

    target_specificity: float
    sensitivity: float
    specificity: float
    threshold: float

    @property
    def description(self) -> str:
        cut = "no sample called positive" if np.isinf(self.threshold) else (
            f"positive iff score >= {self.threshold:.6g}"
        )
        return (
            f"sensitivity {self.sensitivity:.4f} at specificity {self.specificity:.4f} "
            f"(target {self.target_specificity:.4f}; {cut})"
        )


def sensitivity_at_specificity(
    scores: Sequence[float], labels: Sequence[int], target_specificity: float
) -> OperatingPoint:
    """
    Pick the threshold with the highest sensitivity whose specificity is at
    least the target; among equal sensitivities the higher specificity wins.

    Calling every sample negative has specificity 1, so a target in (0, 1]
    always has an answer.

    Raises:
        MetricsError: If the target lies outside (0, 1]
        UndefinedMetricError: If labels hold a single class
    """
    if not 0.0 < target_specificity <= 1.0:
        raise MetricsError(f"target specificity must lie in (0, 1], got {target_specificity}")
    curve = roc_curve(scores, labels)
    n = curve.negatives
    fp = np.rint(curve.fpr * n).astype(np.int64)
    specificity = (n - fp) / n

    best = 0
    for i in range(1, len(curve)):
        if specificity[i] < target_specificity:
            continue
        if curve.tpr[i] > curve.tpr[best] or (
            curve.tpr[i] == curve.tpr[best] and specificity[i] > specificity[best]
        ):
            best = i
    return OperatingPoint(
        target_specificity=float(target_specificity),
        sensitivity=float(curve.tpr[best]),
        specificity=float(specificity[best]),
        threshold=float(curve.thresholds[best]),
    )


def one_vs_rest_curves(probs: np.ndarray, labels: Sequence[int], k: int) -> dict[int, RocCurve]:
    """
    ROC curve per class, using that class's probability as the score.

    Classes that are absent from the labels (or are the only class present)
    are skipped with a warning.
    """
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape != (y.size, k):
        raise MetricsError(f"probabilities of shape {probs.shape} do not match {y.size} x {k}")
    curves: dict[int, RocCurve] = {}
    for c in range(k):
        try:
            curves[c] = roc_curve(probs[:, c], (y == c).astype(np.int64))
        except UndefinedMetricError:
            logger.warning("class %d has no positive or no negative samples; ROC skipped", c)
    return curves
