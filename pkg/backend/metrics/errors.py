"""Errors raised by metric computations."""


class MetricsError(ValueError):
    """Inputs to a metric violate its contract."""


class UndefinedMetricError(MetricsError):
    """The metric has no value for these labels (e.g. a single class)."""

    def __init__(self, message: str = "AUC undefined"):
        super().__init__(message)
