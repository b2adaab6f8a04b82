"""Manifest handling, grade harmonization and split generation."""

from .errors import DatasetError, ManifestError, SplitPolicyError
from .grades import DatasetId, GradeMap, Task, grade_map, map_grade, merge_counts
from .manifest import (
    Manifest,
    ManifestEntry,
    Partition,
    PruneReport,
    load_exclusion_list,
    load_manifest,
    prune,
    write_manifest,
)
from .splits import (
    ClassDistribution,
    IdentityCheck,
    Split,
    SplitAssignment,
    SplitMix64,
    SplitPolicy,
    check_merge_identities,
    class_distribution,
    load_splits,
    make_splits,
    split_ids,
    write_splits,
)

__all__ = [
    "ClassDistribution",
    "DatasetError",
    "DatasetId",
    "GradeMap",
    "IdentityCheck",
    "Manifest",
    "ManifestEntry",
    "ManifestError",
    "Partition",
    "PruneReport",
    "Split",
    "SplitAssignment",
    "SplitMix64",
    "SplitPolicy",
    "SplitPolicyError",
    "Task",
    "check_merge_identities",
    "class_distribution",
    "grade_map",
    "load_exclusion_list",
    "load_manifest",
    "load_splits",
    "make_splits",
    "map_grade",
    "merge_counts",
    "prune",
    "split_ids",
    "write_manifest",
    "write_splits",
]
