"""Confusion matrices, ROC/AUC and evaluation reports."""

from .confusion import (
    BinaryRates,
    ConfusionMatrix,
    accuracy,
    binary_rates,
    class_rates,
    confusion_matrix,
    confusion_matrix_frame,
)
from .errors import MetricsError, UndefinedMetricError
from .plots import plot_confusion, plot_roc
from .report import (
    DEFAULT_TARGET_SPECIFICITY,
    ENSEMBLE_NAME,
    ClassMetrics,
    MetricsReport,
    OperatingPointReport,
    binary_metrics,
    compare_models,
    comparison_frame,
    evaluate_task,
    format_percent,
    multiclass_metrics,
    predicted_classes,
)
from .roc import (
    OperatingPoint,
    RocCurve,
    auc,
    auc_from_scores,
    mann_whitney_auc,
    one_vs_rest_curves,
    roc_curve,
    sensitivity_at_specificity,
)

__all__ = [
    "DEFAULT_TARGET_SPECIFICITY",
    "ENSEMBLE_NAME",
    "BinaryRates",
    "ClassMetrics",
    "ConfusionMatrix",
    "MetricsError",
    "MetricsReport",
    "OperatingPoint",
    "OperatingPointReport",
    "RocCurve",
    "UndefinedMetricError",
    "accuracy",
    "auc",
    "auc_from_scores",
    "binary_metrics",
    "binary_rates",
    "class_rates",
    "compare_models",
    "comparison_frame",
    "confusion_matrix",
    "confusion_matrix_frame",
    "evaluate_task",
    "format_percent",
    "mann_whitney_auc",
    "multiclass_metrics",
    "one_vs_rest_curves",
    "plot_confusion",
    "plot_roc",
    "predicted_classes",
    "roc_curve",
    "sensitivity_at_specificity",
]
