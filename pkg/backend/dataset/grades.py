"""Native-grade to task-class harmonization for EyePACS and Messidor."""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import DatasetError


class DatasetId(str, Enum):
    """Source dataset of a fundus image."""

    EYEPACS = "EyePACS"
    MESSIDOR = "Messidor"

    @classmethod
    def parse(cls, value: str) -> "DatasetId":
        """Case-insensitive lookup by tag."""
        for member in cls:
            if member.value.lower() == str(value).strip().lower():
                return member
        raise DatasetError(f"Unknown dataset tag: {value!r}")

    @property
    def grades(self) -> range:
        return range(5) if self is DatasetId.EYEPACS else range(4)


class Task(str, Enum):
    """Classification setting."""

    BINARY_NORMAL_ABNORMAL = "normal-abnormal"
    BINARY_REFERABLE = "referable"
    TERNARY = "ternary"
    QUATERNARY = "quaternary"

    @property
    def class_count(self) -> int:
        return _CLASS_COUNTS[self]

    @property
    def class_names(self) -> list[str]:
        return list(_CLASS_NAMES[self])

    @property
    def is_binary(self) -> bool:
        return self.class_count == 2


_CLASS_COUNTS = {
    Task.BINARY_NORMAL_ABNORMAL: 2,
    Task.BINARY_REFERABLE: 2,
    Task.TERNARY: 3,
    Task.QUATERNARY: 4,
}

_CLASS_NAMES = {
    Task.BINARY_NORMAL_ABNORMAL: ("Normal", "Abnormal"),
    Task.BINARY_REFERABLE: ("Non-Referable", "Referable"),
    Task.TERNARY: ("0", "1", "2"),
    Task.QUATERNARY: ("0", "1", "2", "3"),
}

# native grade -> class index, indexed by grade
_MAPS: dict[DatasetId, dict[Task, tuple[int, ...]]] = {
    DatasetId.EYEPACS: {
        Task.QUATERNARY: (0, 1, 1, 2, 3),
        Task.TERNARY: (0, 1, 1, 2, 2),
        Task.BINARY_REFERABLE: (0, 0, 0, 1, 1),
        Task.BINARY_NORMAL_ABNORMAL: (0, 1, 1, 1, 1),
    },
    DatasetId.MESSIDOR: {
        Task.QUATERNARY: (0, 1, 2, 3),
        Task.TERNARY: (0, 1, 2, 2),
        Task.BINARY_REFERABLE: (0, 0, 1, 1),
        Task.BINARY_NORMAL_ABNORMAL: (0, 1, 1, 1),
    },
}


@dataclass(frozen=True)
class GradeMap:
    """Mapping of one dataset's native grades onto one task's classes."""

    dataset: DatasetId
    task: Task
    mapping: tuple[int, ...]

    def __post_init__(self):
        if len(self.mapping) != len(self.dataset.grades):
            raise DatasetError(
                f"{self.dataset.value} map needs {len(self.dataset.grades)} grades"
            )
        if sorted(set(self.mapping)) != list(range(self.task.class_count)):
            raise DatasetError(
                f"{self.dataset.value}/{self.task.value} map is not onto "
                f"{self.task.class_count} classes"
            )

    def __call__(self, native_grade: int) -> int:
        if native_grade not in self.dataset.grades:
            raise DatasetError(
                f"Grade {native_grade} outside {self.dataset.value} range "
                f"[0, {len(self.dataset.grades) - 1}]"
            )
        return self.mapping[native_grade]

    def classes_of(self, class_index: int) -> list[int]:
        """Native grades that land in a class."""
        return [g for g, c in enumerate(self.mapping) if c == class_index]


def grade_map(dataset: DatasetId, task: Task) -> GradeMap:
    """Return the grade map for a dataset and task."""
    dataset, task = DatasetId(dataset), Task(task)
    return GradeMap(dataset, task, _MAPS[dataset][task])


def map_grade(dataset: DatasetId, native_grade: int, task: Task) -> int:
    """
    Map a native grade to a task class index.

    Args:
        dataset: Source dataset
        native_grade: Grade on the dataset's own scale
        task: Target classification setting

    Returns:
        Class index in [0, task.class_count)

    Raises:
        DatasetError: If the grade is outside the dataset's range
    """
    return grade_map(dataset, task)(int(native_grade))


def merge_counts(quaternary_counts: Sequence[int], dataset: DatasetId, task: Task) -> list[int]:
    """
    Sum quaternary class counts into the classes of another task.

    Each quaternary class lands in exactly one class of every coarser task,
    so the counts of a coarser task follow from the quaternary counts alone.

    Args:
        quaternary_counts: Four counts, one per quaternary class
        dataset: Dataset whose maps apply
        task: Target task

    Returns:
        One count per class of `task`
    """
    if len(quaternary_counts) != Task.QUATERNARY.class_count:
        raise DatasetError(f"Need 4 quaternary counts, got {len(quaternary_counts)}")
    return [sum(quaternary_counts[q] for q in group) for group in quaternary_groups(dataset, task)]


def quaternary_groups(dataset: DatasetId, task: Task) -> list[list[int]]:
    """For each class of `task`, the quaternary classes it absorbs."""
    quaternary = grade_map(dataset, Task.QUATERNARY)
    target = grade_map(dataset, task)
    groups: list[set[int]] = [set() for _ in range(task.class_count)]
    for grade in dataset.grades:
        groups[target(grade)].add(quaternary(grade))
    return [sorted(g) for g in groups]
