"""Errors raised by the dataset module."""

from typing import Optional


class DatasetError(ValueError):
    """A manifest, grade or split violated its contract."""


class ManifestError(DatasetError):
    """A manifest, split or exclusion file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SplitPolicyError(DatasetError):
    """A split policy cannot be satisfied by the pool it is applied to."""
