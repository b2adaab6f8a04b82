"""Per-model probability records and prediction CSV files."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import pandas as pd
from pydantic import BaseModel, ValidationError, field_validator

from backend.dataset import Task
from backend.dataset.manifest import is_blank_row
from backend.storage import atomic_write_text

from .errors import PredictionFileError

logger = logging.getLogger(__name__)

SIMPLEX_TOLERANCE = 1e-6
ID_COLUMNS = ["image_id", "model_id"]


def prob_columns(class_count: int) -> list[str]:
    return [f"p{k}" for k in range(class_count)]


class PredictionRecord(BaseModel):
    """One model's class probabilities for one image."""

    image_id: str
    model_id: str
    probs: tuple[float, ...]

    model_config = {"frozen": True}

    @field_validator("image_id", "model_id")
    @classmethod
    def _non_empty(cls, value: str) -> str:
        value = value.strip()
        if not value or "," in value:
            raise ValueError("ids must be non-empty and contain no comma")
        return value

    @field_validator("probs")
    @classmethod
    def _on_simplex(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if len(value) < 2:
            raise ValueError("need at least two class probabilities")
        if any(not (p >= 0.0) for p in value):
            raise ValueError(f"probabilities must be non-negative, got {value}")
        total = sum(value)
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise ValueError(f"probabilities sum to {total:.9g}, not 1")
        return value

    @property
    def class_count(self) -> int:
        return len(self.probs)


@dataclass
class PredictionSet:
    """Validated records plus a coverage report against the expected ids."""

    records: list[PredictionRecord]
    missing_ids: list[str] = field(default_factory=list)
    extra_ids: list[str] = field(default_factory=list)
    rejected: list[tuple[int, str]] = field(default_factory=list)

    @property
    def model_ids(self) -> list[str]:
        return sorted({r.model_id for r in self.records})


def load_predictions(
    path: str | Path,
    task: Task,
    expected_ids: Optional[Iterable[str]] = None,
    strict: bool = True,
) -> PredictionSet:
    """
    Load and validate a prediction CSV.

    Args:
        path: File with header image_id,model_id,p0..p{K-1}
        task: Task whose class count the file must match
        expected_ids: Ids the file should cover (coverage report only)
        strict: Raise on the first invalid row; otherwise collect it in
            `rejected` as (line, reason)

    Returns:
        PredictionSet

    Raises:
        PredictionFileError: Wrong class count, or an invalid row in strict mode
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Prediction file not found: {path}")
    expected_columns = ID_COLUMNS + prob_columns(Task(task).class_count)
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, skip_blank_lines=False, encoding="utf-8"
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise PredictionFileError(f"cannot parse {path}: {e}") from e
    if list(frame.columns) != expected_columns:
        raise PredictionFileError(
            f"{path.name} has columns {','.join(map(str, frame.columns))}; task "
            f"{Task(task).value} needs {','.join(expected_columns)}",
            line=1,
        )

    records: list[PredictionRecord] = []
    rejected: list[tuple[int, str]] = []
    seen: set[tuple[str, str]] = set()
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        try:
            cells = list(row)
            if is_blank_row(cells):
                raise ValueError("blank line")
            if any(not isinstance(c, str) for c in cells):
                raise ValueError("missing fields")
            record = PredictionRecord(
                image_id=cells[0], model_id=cells[1], probs=tuple(float(c) for c in cells[2:])
            )
            key = (record.image_id, record.model_id)
            if key in seen:
                raise ValueError(f"duplicate row for {key[0]} / {key[1]}")
            seen.add(key)
        except (ValidationError, ValueError) as e:
            reason = (
                "; ".join(err["msg"] for err in e.errors())
                if isinstance(e, ValidationError)
                else str(e)
            )
            if strict:
                raise PredictionFileError(reason, line) from e
            logger.warning("%s line %d rejected: %s", path.name, line, reason)
            rejected.append((line, reason))
            continue
        records.append(record)

    result = PredictionSet(records, rejected=rejected)
    if expected_ids is not None:
        expected = set(expected_ids)
        covered = {r.image_id for r in records}
        result.missing_ids = sorted(expected - covered)
        result.extra_ids = sorted(covered - expected)
        if result.missing_ids:
            logger.warning("%s is missing %d expected id(s)", path.name, len(result.missing_ids))
    return result


def write_predictions(records: Iterable[PredictionRecord], path: str | Path) -> Path:
    """
    Write records as a prediction CSV with 17 significant digits, atomically.

    Rows are ordered by (image_id, model_id).
    """
    records = sorted(records, key=lambda r: (r.image_id, r.model_id))
    counts = {r.class_count for r in records}
    if len(counts) > 1:
        raise PredictionFileError(f"Mixed class counts: {sorted(counts)}")
    k = counts.pop() if counts else 2
    rows = [[r.image_id, r.model_id, *r.probs] for r in records]
    frame = pd.DataFrame(rows, columns=ID_COLUMNS + prob_columns(k))
    text = frame.to_csv(index=False, lineterminator="\n", float_format="%.17g")
    return atomic_write_text(path, text)
