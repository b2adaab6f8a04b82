"""Reproducible train/validate/test splits and class distributions."""

import logging
import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, MutableSequence, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from backend.storage import atomic_write_text

from .errors import DatasetError, ManifestError, SplitPolicyError
from .grades import DatasetId, Task, grade_map, quaternary_groups
from .manifest import Manifest, ManifestEntry, Partition, read_csv_strict

logger = logging.getLogger(__name__)

SPLIT_COLUMNS = ["image_id", "split"]
U64_MASK = (1 << 64) - 1


class SplitMix64:
    """
    SplitMix64 generator.

    Every split decision in the pipeline is drawn from this generator so a
    seed reproduces the same assignment in any implementation.
    """

    GOLDEN_GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self.state = int(seed) & U64_MASK

    def next_u64(self) -> int:
        self.state = (self.state + self.GOLDEN_GAMMA) & U64_MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & U64_MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & U64_MASK
        return z ^ (z >> 31)

    def shuffle(self, items: MutableSequence) -> None:
        """Fisher-Yates in place, j = next_u64() mod (i + 1)."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]


class Split(str, Enum):
    TRAIN = "train"
    VALIDATE = "validate"
    TEST = "test"


@dataclass(frozen=True)
class SplitAssignment:
    image_id: str
    split: Split


class SplitPolicy(BaseModel):
    """How many images go to each split and where the test pool comes from."""

    train_count: int = Field(..., ge=0, description="Images drawn for training")
    validate_count: Optional[int] = Field(
        None, ge=0, description="Images drawn for validation (None: rest of the pool)"
    )
    test_count: Optional[int] = Field(
        None, ge=0, description="Images drawn for testing (None: whole test pool)"
    )
    test_site: Optional[str] = Field(
        None, description="Clinic whose images form the test pool; else the test partition"
    )

    model_config = {"frozen": True}

    @classmethod
    def for_dataset(cls, dataset: DatasetId) -> "SplitPolicy":
        """Default policy reproducing the published experimental setup."""
        if DatasetId(dataset) is DatasetId.EYEPACS:
            return cls(train_count=30000, validate_count=None, test_count=33423)
        return cls(train_count=700, validate_count=None, test_count=400, test_site="Lariboisière")


def _normalize_site(site: Optional[str]) -> str:
    if not site:
        return ""
    decomposed = unicodedata.normalize("NFKD", site)
    return "".join(c for c in decomposed if not unicodedata.combining(c)).strip().casefold()


def _partition_pools(
    entries: Sequence[ManifestEntry], policy: SplitPolicy
) -> tuple[list[str], list[str]]:
    if policy.test_site is not None:
        site = _normalize_site(policy.test_site)
        test = [e.image_id for e in entries if _normalize_site(e.site) == site]
        pool = [e.image_id for e in entries if _normalize_site(e.site) != site]
    else:
        test = [e.image_id for e in entries if e.source_partition is Partition.TEST]
        pool = [e.image_id for e in entries if e.source_partition is not Partition.TEST]
    return sorted(pool), sorted(test)


def make_splits(
    manifest: Manifest,
    dataset: DatasetId,
    seed: int,
    policy: Optional[SplitPolicy] = None,
) -> list[SplitAssignment]:
    """
    Assign a dataset's images to train/validate/test.

    Pools are sorted by image_id, shuffled with SplitMix64(seed) (training
    pool first, then test pool) and assigned by prefix.

    Args:
        manifest: Manifest holding the dataset's entries
        dataset: Which dataset to split
        seed: Unsigned 64-bit seed
        policy: Split policy (defaults to SplitPolicy.for_dataset)

    Returns:
        Assignments sorted by image_id

    Raises:
        SplitPolicyError: If a pool is smaller than the requested counts
    """
    dataset = DatasetId(dataset)
    policy = policy or SplitPolicy.for_dataset(dataset)
    entries = [e for e in manifest if e.dataset is dataset]
    pool, test_pool = _partition_pools(entries, policy)

    wanted = policy.train_count + (policy.validate_count or 0)
    if len(pool) < wanted:
        raise SplitPolicyError(
            f"{dataset.value} training pool has {len(pool)} images, policy needs {wanted} "
            f"(train {policy.train_count}, validate {policy.validate_count or 0})"
        )
    if policy.test_count is not None and len(test_pool) < policy.test_count:
        raise SplitPolicyError(
            f"{dataset.value} test pool has {len(test_pool)} images, policy needs "
            f"{policy.test_count}"
        )

    rng = SplitMix64(seed)
    rng.shuffle(pool)
    rng.shuffle(test_pool)

    train = pool[:policy.train_count]
    rest = pool[policy.train_count:]
    validate = rest if policy.validate_count is None else rest[:policy.validate_count]
    test = test_pool if policy.test_count is None else test_pool[:policy.test_count]

    assignments = (
        [SplitAssignment(i, Split.TRAIN) for i in train]
        + [SplitAssignment(i, Split.VALIDATE) for i in validate]
        + [SplitAssignment(i, Split.TEST) for i in test]
    )
    logger.info(
        "%s split: %d train / %d validate / %d test",
        dataset.value, len(train), len(validate), len(test),
    )
    return sorted(assignments, key=lambda a: a.image_id)


def split_ids(assignments: Iterable[SplitAssignment], split: Split) -> list[str]:
    """Image ids assigned to one split, sorted."""
    split = Split(split)
    return sorted(a.image_id for a in assignments if a.split is split)


def write_splits(assignments: Iterable[SplitAssignment], path: str | Path) -> Path:
    """Write the split CSV sorted by image_id, atomically."""
    ordered = sorted(assignments, key=lambda a: a.image_id)
    frame = pd.DataFrame(
        [{"image_id": a.image_id, "split": a.split.value} for a in ordered],
        columns=SPLIT_COLUMNS,
    )
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def load_splits(path: str | Path) -> list[SplitAssignment]:
    """
    Load a split CSV.

    Raises:
        ManifestError: On unknown split names or duplicate ids, naming the line
    """
    frame = read_csv_strict(path, SPLIT_COLUMNS)
    seen: set[str] = set()
    assignments = []
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        image_id = str(row.image_id).strip()
        if not image_id:
            raise ManifestError("empty image_id", line)
        if image_id in seen:
            raise ManifestError(f"image {image_id} assigned twice", line)
        try:
            split = Split(str(row.split).strip().lower())
        except ValueError:
            raise ManifestError(f"unknown split {row.split!r}", line) from None
        seen.add(image_id)
        assignments.append(SplitAssignment(image_id, split))
    return assignments


@dataclass
class ClassDistribution:
    """Per-split, per-class image counts for one task."""

    task: Task
    counts: pd.DataFrame

    def column(self, split: Split) -> list[int]:
        return [int(c) for c in self.counts[Split(split).value]]

    def totals(self) -> dict[str, int]:
        return {col: int(self.counts[col].sum()) for col in self.counts.columns}

    def percentages(self) -> pd.DataFrame:
        """Share of each class within its split, in percent with two decimals."""
        totals = self.counts.sum(axis=0).replace(0, 1)
        return (self.counts / totals * 100).round(2)

    def to_frame(self) -> pd.DataFrame:
        """Counts with a Total row, ready for printing or CSV."""
        frame = self.counts.copy()
        frame.loc["Total"] = frame.sum(axis=0)
        return frame


def class_distribution(
    assignments: Iterable[SplitAssignment],
    manifest: Manifest,
    task: Task,
) -> ClassDistribution:
    """
    Count images per split and task class.

    Raises:
        DatasetError: If an assigned id is not in the manifest
    """
    task = Task(task)
    splits = list(Split)
    maps = {d: grade_map(d, task) for d in DatasetId}
    table = np.zeros((task.class_count, len(splits)), dtype=np.int64)
    for assignment in assignments:
        if assignment.image_id not in manifest:
            raise DatasetError(f"Split references unknown image_id {assignment.image_id}")
        entry = manifest[assignment.image_id]
        table[maps[entry.dataset](entry.native_grade), splits.index(assignment.split)] += 1
    counts = pd.DataFrame(
        table,
        index=pd.Index(task.class_names, name="class"),
        columns=[s.value for s in splits],
    )
    return ClassDistribution(task, counts)


@dataclass(frozen=True)
class IdentityCheck:
    """One merge identity: sum of quaternary counts == coarser-task count."""

    description: str
    expected: int
    actual: int

    @property
    def passed(self) -> bool:
        return self.expected == self.actual


def check_merge_identities(
    assignments: Sequence[SplitAssignment],
    manifest: Manifest,
    dataset: DatasetId,
    tasks: Optional[Sequence[Task]] = None,
) -> list[IdentityCheck]:
    """
    Check that every coarser task's counts equal sums of quaternary counts.

    Args:
        assignments: Split assignments
        manifest: Manifest the assignments refer to
        dataset: Dataset whose grade maps define the merges
        tasks: Tasks to check (all non-quaternary tasks by default)

    Returns:
        One IdentityCheck per split and class
    """
    tasks = tasks or [t for t in Task if t is not Task.QUATERNARY]
    quaternary = class_distribution(assignments, manifest, Task.QUATERNARY)
    checks = []
    for task in tasks:
        target = class_distribution(assignments, manifest, task)
        groups = quaternary_groups(dataset, task)
        for split in Split:
            q_counts = quaternary.column(split)
            t_counts = target.column(split)
            for cls, group in enumerate(groups):
                terms = [q_counts[q] for q in group]
                expected = sum(terms)
                description = (
                    f"{split.value} {task.value}[{task.class_names[cls]}]: "
                    f"{' + '.join(str(t) for t in terms)} == {t_counts[cls]}"
                )
                checks.append(IdentityCheck(description, expected, t_counts[cls]))
    return checks
