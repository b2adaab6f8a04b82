"""Fuse per-model probability vectors into one diagnosis per image."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import pandas as pd

from backend.classifier import PredictionRecord, prob_columns
from backend.storage import atomic_write_text

from .errors import FusionError

logger = logging.getLogger(__name__)


class FusionStrategy(str, Enum):
    MEAN_PROB = "mean"
    MAJORITY_VOTE = "vote"


@dataclass(frozen=True)
class EnsembleInput:
    """All model outputs for one image."""

    image_id: str
    records: tuple[PredictionRecord, ...]

    def __post_init__(self):
        records = tuple(self.records)
        if not records:
            raise FusionError(f"{self.image_id}: no prediction records to fuse")
        mismatched = [r.image_id for r in records if r.image_id != self.image_id]
        if mismatched:
            raise FusionError(
                f"{self.image_id}: records for other images {sorted(set(mismatched))}"
            )
        model_ids = [r.model_id for r in records]
        if len(set(model_ids)) != len(model_ids):
            raise FusionError(f"{self.image_id}: duplicate model ids in {sorted(model_ids)}")
        counts = {r.class_count for r in records}
        if len(counts) != 1:
            raise FusionError(f"{self.image_id}: mixed class counts {sorted(counts)}")
        object.__setattr__(self, "records", records)

    @property
    def class_count(self) -> int:
        return self.records[0].class_count


@dataclass(frozen=True)
class Diagnosis:
    image_id: str
    fused_probs: tuple[float, ...]
    predicted_class: int
    strategy: FusionStrategy


def _argmax(values: Sequence[float]) -> int:
    # first maximum wins
    best = 0
    for k in range(1, len(values)):
        if values[k] > values[best]:
            best = k
    return best


def _mean_probs(records: Sequence[PredictionRecord]) -> tuple[float, ...]:
    n = len(records)
    k = records[0].class_count
    first = tuple(records[0].probs)
    if all(tuple(r.probs) == first for r in records[1:]):
        # identical members fuse to themselves, bit for bit
        return first
    return tuple(math.fsum(r.probs[c] for r in records) / n for c in range(k))


def _as_input(item: EnsembleInput | Sequence[PredictionRecord]) -> EnsembleInput:
    if isinstance(item, EnsembleInput):
        return item
    records = tuple(item)
    if not records:
        raise FusionError("no prediction records to fuse")
    return EnsembleInput(records[0].image_id, records)


def fuse_mean(item: EnsembleInput | Sequence[PredictionRecord]) -> Diagnosis:
    """
    Average member probabilities; the predicted class is the argmax.

    Sums are exactly rounded so the result does not depend on model order.
    Ties go to the smallest class index.
    """
    item = _as_input(item)
    fused = _mean_probs(item.records)
    return Diagnosis(item.image_id, fused, _argmax(fused), FusionStrategy.MEAN_PROB)


def fuse_majority(item: EnsembleInput | Sequence[PredictionRecord]) -> Diagnosis:
    """
    Each member votes for its argmax class; the most-voted class wins.

    Vote ties are broken by the highest mean probability among the tied
    classes, then by the smallest class index. `fused_probs` holds the
    vote shares.
    """
    item = _as_input(item)
    k = item.class_count
    votes = [0] * k
    for record in item.records:
        votes[_argmax(record.probs)] += 1

    top = max(votes)
    tied = [c for c in range(k) if votes[c] == top]
    winner = tied[0]
    if len(tied) > 1:
        mean = _mean_probs(item.records)
        for c in tied[1:]:
            if mean[c] > mean[winner]:
                winner = c

    n = len(item.records)
    shares = tuple(v / n for v in votes)
    return Diagnosis(item.image_id, shares, winner, FusionStrategy.MAJORITY_VOTE)


_FUSERS = {
    FusionStrategy.MEAN_PROB: fuse_mean,
    FusionStrategy.MAJORITY_VOTE: fuse_majority,
}


def fuse(item: EnsembleInput | Sequence[PredictionRecord], strategy: FusionStrategy) -> Diagnosis:
    return _FUSERS[FusionStrategy(strategy)](item)


@dataclass
class FusionReport:
    """Diagnoses sorted by image_id and the images that had nothing to fuse."""

    diagnoses: list[Diagnosis] = field(default_factory=list)
    omitted_ids: list[str] = field(default_factory=list)


def fuse_batch(
    inputs: Mapping[str, Sequence[PredictionRecord]],
    strategy: FusionStrategy = FusionStrategy.MEAN_PROB,
) -> FusionReport:
    """
    Fuse every image independently.

    Args:
        inputs: image_id -> that image's records (possibly empty)
        strategy: Fusion rule

    Returns:
        FusionReport; images without records are listed in `omitted_ids`

    Raises:
        FusionError: If an image's records are inconsistent
    """
    strategy = FusionStrategy(strategy)
    report = FusionReport()
    for image_id in sorted(inputs):
        records = tuple(inputs[image_id])
        if not records:
            report.omitted_ids.append(image_id)
            continue
        report.diagnoses.append(fuse(EnsembleInput(image_id, records), strategy))
    if report.omitted_ids:
        logger.warning(
            "%d image(s) had no predictions to fuse (first: %s)",
            len(report.omitted_ids), report.omitted_ids[0],
        )
    return report


def group_predictions(
    records: Iterable[PredictionRecord],
    expected_ids: Optional[Iterable[str]] = None,
) -> dict[str, list[PredictionRecord]]:
    """
    Group records by image_id.

    When `expected_ids` is given, only those ids are kept and ids without any
    record map to an empty list.
    """
    grouped: dict[str, list[PredictionRecord]] = {}
    if expected_ids is not None:
        grouped = {image_id: [] for image_id in expected_ids}
    for record in records:
        if expected_ids is not None and record.image_id not in grouped:
            continue
        grouped.setdefault(record.image_id, []).append(record)
    for bucket in grouped.values():
        bucket.sort(key=lambda r: r.model_id)
    return dict(sorted(grouped.items()))


def write_diagnoses(diagnoses: Iterable[Diagnosis], path: str | Path) -> Path:
    """Write `image_id,strategy,predicted_class,p0..pK-1` rows sorted by image_id."""
    diagnoses = sorted(diagnoses, key=lambda d: d.image_id)
    counts = {len(d.fused_probs) for d in diagnoses}
    if len(counts) > 1:
        raise FusionError(f"Mixed class counts: {sorted(counts)}")
    k = counts.pop() if counts else 2
    rows = [
        [d.image_id, d.strategy.value, d.predicted_class, *d.fused_probs] for d in diagnoses
    ]
    columns = ["image_id", "strategy", "predicted_class", *prob_columns(k)]
    frame = pd.DataFrame(rows, columns=columns)
    text = frame.to_csv(index=False, lineterminator="\n", float_format="%.17g")
    return atomic_write_text(path, text)
