"""Evaluation reports for binary and multi-class grading tasks."""

import logging
import math
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from backend.dataset import Task

from .confusion import accuracy, binary_rates, class_rates, confusion_matrix
from .errors import MetricsError, UndefinedMetricError
from .roc import auc, one_vs_rest_curves, roc_curve, sensitivity_at_specificity

logger = logging.getLogger(__name__)

DEFAULT_TARGET_SPECIFICITY = 0.9

Rate = Optional[float]


class ClassMetrics(BaseModel):
    """One-vs-rest figures for one class."""

    class_index: int
    name: str
    support: int = Field(..., ge=0, description="Samples whose true class is this one")
    sensitivity: Rate = Field(None, ge=0, le=1)
    specificity: Rate = Field(None, ge=0, le=1)
    auc: Rate = Field(None, ge=0, le=1)


class OperatingPointReport(BaseModel):
    target_specificity: float = Field(..., gt=0, le=1)
    sensitivity: float = Field(..., ge=0, le=1)
    specificity: float = Field(..., ge=0, le=1)
    threshold: Optional[float] = Field(
        None, description="Class-1 probability cut (score >= threshold is positive); null = none"
    )
    description: str


class MetricsReport(BaseModel):
    """Everything reported for one model (or the ensemble) on one task."""

    task: Task
    samples: int = Field(..., ge=0)
    accuracy: float = Field(..., ge=0, le=1)
    auc: Rate = Field(None, ge=0, le=1, description="Binary AUC or macro one-vs-rest AUC")
    sensitivity: Rate = Field(None, ge=0, le=1)
    specificity: Rate = Field(None, ge=0, le=1)
    per_class: list[ClassMetrics]
    confusion_matrix: list[list[int]]
    operating_point: Optional[OperatingPointReport] = None
    excluded_classes: list[int] = Field(
        default_factory=list, description="Classes left out of macro averages"
    )
    undefined: list[str] = Field(default_factory=list, description="Metrics without a value")


def _check_probs(probs: np.ndarray, labels: Sequence[int], k: int) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if p.ndim != 2 or p.shape != (y.size, k):
        raise MetricsError(f"probabilities of shape {p.shape} do not match {y.size} x {k}")
    if y.size == 0:
        raise MetricsError("no samples to evaluate")
    if (y < 0).any() or (y >= k).any():
        raise MetricsError(f"labels outside [0, {k})")
    return p, y


def predicted_classes(probs: np.ndarray) -> np.ndarray:
    """Row argmax; ties go to the smallest class index."""
    return np.argmax(np.asarray(probs), axis=1)


def _decisions(p: np.ndarray, predicted: Optional[Sequence[int]], k: int) -> np.ndarray:
    if predicted is None:
        return predicted_classes(p)
    decided = np.asarray(predicted, dtype=np.int64)
    if decided.shape != (p.shape[0],):
        raise MetricsError(f"{decided.size} predicted classes for {p.shape[0]} samples")
    if (decided < 0).any() or (decided >= k).any():
        raise MetricsError(f"predicted classes outside [0, {k})")
    return decided


def _per_class(cm, task: Task, curves) -> list[ClassMetrics]:
    rows = []
    for c, name in enumerate(task.class_names):
        rates = class_rates(cm, c)
        rows.append(
            ClassMetrics(
                class_index=c,
                name=name,
                support=cm.row_sums()[c],
                sensitivity=rates.sensitivity,
                specificity=rates.specificity,
                auc=auc(curves[c]) if c in curves else None,
            )
        )
    return rows


def binary_metrics(
    probs: np.ndarray,
    labels: Sequence[int],
    task: Task = Task.BINARY_NORMAL_ABNORMAL,
    target_specificity: float = DEFAULT_TARGET_SPECIFICITY,
    predicted: Optional[Sequence[int]] = None,
) -> MetricsReport:
    """
    Two-class report: rates from the argmax decision (or `predicted` when a
    fusion rule already decided), AUC and the operating point from the
    class-1 probability.
    """
    task = Task(task)
    if task.class_count != 2:
        raise MetricsError(f"binary_metrics needs a two-class task, got {task.value}")
    p, y = _check_probs(probs, labels, 2)
    cm = confusion_matrix(y, _decisions(p, predicted, 2), 2)
    rates = binary_rates(cm)
    undefined = list(rates.undefined)

    area = None
    operating_point = None
    try:
        curve = roc_curve(p[:, 1], y)
        area = auc(curve)
        point = sensitivity_at_specificity(p[:, 1], y, target_specificity)
        operating_point = OperatingPointReport(
            target_specificity=point.target_specificity,
            sensitivity=point.sensitivity,
            specificity=point.specificity,
            threshold=None if math.isinf(point.threshold) else point.threshold,
            description=point.description,
        )
    except UndefinedMetricError:
        logger.warning("%s: only one class among %d samples; AUC undefined", task.value, y.size)
        undefined += ["auc", "operating_point"]

    curves = one_vs_rest_curves(p, y, 2) if area is not None else {}
    return MetricsReport(
        task=task,
        samples=int(y.size),
        accuracy=accuracy(cm),
        auc=area,
        sensitivity=rates.sensitivity,
        specificity=rates.specificity,
        per_class=_per_class(cm, task, curves),
        confusion_matrix=cm.to_list(),
        operating_point=operating_point,
        undefined=undefined,
    )


def _macro(values: list[float]) -> Optional[float]:
    return math.fsum(values) / len(values) if values else None


def multiclass_metrics(
    probs: np.ndarray,
    labels: Sequence[int],
    task: Task,
    predicted: Optional[Sequence[int]] = None,
) -> MetricsReport:
    """
    Report for K >= 3: accuracy from argmax (or `predicted`), then macro
    averages over the classes present in the labels of one-vs-rest AUC,
    recall and true-negative rate.
    """
    task = Task(task)
    k = task.class_count
    if k < 3:
        raise MetricsError(f"multiclass_metrics needs K >= 3, got {task.value}")
    p, y = _check_probs(probs, labels, k)
    cm = confusion_matrix(y, _decisions(p, predicted, k), k)
    curves = one_vs_rest_curves(p, y, k)
    per_class = _per_class(cm, task, curves)

    included = [c for c in range(k) if c in curves]
    excluded = [c for c in range(k) if c not in curves]
    if excluded:
        logger.warning("%s: classes %s excluded from macro averages", task.value, excluded)

    macro_auc = _macro([per_class[c].auc for c in included])
    macro_sens = _macro([per_class[c].sensitivity for c in included])
    macro_spec = _macro([per_class[c].specificity for c in included])
    macros = {"auc": macro_auc, "sensitivity": macro_sens, "specificity": macro_spec}
    undefined = [name for name, value in macros.items() if value is None]
    return MetricsReport(
        task=task,
        samples=int(y.size),
        accuracy=accuracy(cm),
        auc=macro_auc,
        sensitivity=macro_sens,
        specificity=macro_spec,
        per_class=per_class,
        confusion_matrix=cm.to_list(),
        excluded_classes=excluded,
        undefined=undefined,
    )


def evaluate_task(
    probs: np.ndarray,
    labels: Sequence[int],
    task: Task,
    target_specificity: float = DEFAULT_TARGET_SPECIFICITY,
    predicted: Optional[Sequence[int]] = None,
) -> MetricsReport:
    task = Task(task)
    if task.is_binary:
        return binary_metrics(probs, labels, task, target_specificity, predicted)
    return multiclass_metrics(probs, labels, task, predicted)


ENSEMBLE_NAME = "ensemble"


def compare_models(
    members: Mapping[str, tuple[np.ndarray, Sequence[int]]],
    ensemble: tuple[np.ndarray, Sequence[int]],
    task: Task,
    target_specificity: float = DEFAULT_TARGET_SPECIFICITY,
    ensemble_predicted: Optional[Sequence[int]] = None,
) -> list[tuple[str, MetricsReport]]:
    """
    Evaluate every member model and the ensemble on the same task.

    Args:
        members: model_id -> (probabilities, labels) over the images it covers
        ensemble: Fused (probabilities, labels)
        task: Task being evaluated
        target_specificity: Operating point for binary tasks
        ensemble_predicted: Classes chosen by the fusion rule; argmax of the
            fused probabilities when omitted

    Returns:
        (name, report) pairs, members sorted by name, ensemble last
    """
    rows = [
        (name, evaluate_task(p, y, task, target_specificity))
        for name, (p, y) in sorted(members.items())
    ]
    rows.append(
        (
            ENSEMBLE_NAME,
            evaluate_task(ensemble[0], ensemble[1], task, target_specificity, ensemble_predicted),
        )
    )
    return rows


def format_percent(rate: Optional[float]) -> str:
    """Rate in [0, 1] as a percentage with two decimals, or n/a."""
    if rate is None or not math.isfinite(rate):
        return "n/a"
    return f"{rate * 100:.2f}"


COMPARISON_COLUMNS = ["model", "samples", "accuracy", "auc", "sensitivity", "specificity"]


def comparison_frame(rows: Sequence[tuple[str, MetricsReport]]) -> pd.DataFrame:
    """Results table with percentages rendered to two decimals."""
    return pd.DataFrame(
        [
            [
                name,
                report.samples,
                format_percent(report.accuracy),
                format_percent(report.auc),
                format_percent(report.sensitivity),
                format_percent(report.specificity),
            ]
            for name, report in rows
        ],
        columns=COMPARISON_COLUMNS,
    )
