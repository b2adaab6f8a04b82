"""Errors raised by the classifier module."""

from typing import Optional


class ClassifierError(ValueError):
    """Features, labels or a model violated a contract."""


class TrainingDivergedError(ClassifierError):
    """The training loss became non-finite."""

    def __init__(self, epoch: int, last_finite_loss: Optional[float]):
        self.epoch = epoch
        self.last_finite_loss = last_finite_loss
        super().__init__(
            f"diverged at epoch {epoch} (last finite loss: {last_finite_loss})"
        )


class PredictionFileError(ClassifierError):
    """A prediction file row is invalid."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
