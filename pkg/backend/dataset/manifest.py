"""Manifest records, CSV persistence and pruning."""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional

import pandas as pd
from pydantic import BaseModel, ValidationError, field_validator, model_validator

from backend.storage import atomic_write_text

from .errors import DatasetError, ManifestError
from .grades import DatasetId

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["image_id", "dataset", "native_grade", "source_partition", "site"]


class Partition(str, Enum):
    """Partition an image came from in the published dataset."""

    TRAIN = "train"
    TEST = "test"
    NONE = "none"


class ManifestEntry(BaseModel):
    """One labeled image."""

    image_id: str
    dataset: DatasetId
    native_grade: int
    source_partition: Partition = Partition.NONE
    site: Optional[str] = None

    model_config = {"frozen": True}

    @field_validator("image_id")
    @classmethod
    def _non_empty_id(cls, value: str) -> str:
        value = value.strip()
        if not value or "," in value:
            raise ValueError("image_id must be non-empty and contain no comma")
        return value

    @field_validator("dataset", mode="before")
    @classmethod
    def _parse_dataset(cls, value):
        return value if isinstance(value, DatasetId) else DatasetId.parse(value)

    @field_validator("site", mode="before")
    @classmethod
    def _blank_site(cls, value):
        if value is None:
            return None
        value = str(value).strip()
        return value or None

    @model_validator(mode="after")
    def _grade_in_range(self) -> "ManifestEntry":
        if self.native_grade not in self.dataset.grades:
            raise ValueError(
                f"grade {self.native_grade} outside {self.dataset.value} range "
                f"[0, {len(self.dataset.grades) - 1}]"
            )
        return self


class Manifest:
    """Ordered collection of manifest entries with unique image ids."""

    def __init__(self, entries: Iterable[ManifestEntry] = ()):
        self._entries = tuple(entries)
        self._by_id: dict[str, ManifestEntry] = {}
        for entry in self._entries:
            if entry.image_id in self._by_id:
                raise DatasetError(f"Duplicate image_id in manifest: {entry.image_id}")
            self._by_id[entry.image_id] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self._entries)

    def __contains__(self, image_id: object) -> bool:
        return image_id in self._by_id

    def __getitem__(self, image_id: str) -> ManifestEntry:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise DatasetError(f"Unknown image_id: {image_id}") from None

    @property
    def entries(self) -> tuple[ManifestEntry, ...]:
        return self._entries

    @property
    def ids(self) -> list[str]:
        return [e.image_id for e in self._entries]

    def datasets(self) -> set[DatasetId]:
        return {e.dataset for e in self._entries}

    def filter(self, predicate) -> "Manifest":
        return Manifest(e for e in self._entries if predicate(e))

    def to_frame(self) -> pd.DataFrame:
        """Manifest as a DataFrame with the CSV columns."""
        rows = [
            {
                "image_id": e.image_id,
                "dataset": e.dataset.value,
                "native_grade": e.native_grade,
                "source_partition": e.source_partition.value,
                "site": e.site or "",
            }
            for e in self._entries
        ]
        return pd.DataFrame(rows, columns=MANIFEST_COLUMNS)


def _parser_error_line(error: Exception) -> Optional[int]:
    match = re.search(r"line (\d+)", str(error))
    return int(match.group(1)) if match else None


def is_blank_row(cells) -> bool:
    return all(not isinstance(c, str) or not c.strip() for c in cells)


def read_csv_strict(path: str | Path, columns: list[str]) -> pd.DataFrame:
    """
    Read a UTF-8 CSV whose header must equal `columns`, all cells as text.

    Blank lines are kept as rows so reported line numbers match the file,
    then rejected.

    Raises:
        FileNotFoundError: If the file does not exist
        ManifestError: On a malformed row or wrong header
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, skip_blank_lines=False, encoding="utf-8"
        )
    except pd.errors.EmptyDataError:
        raise ManifestError(f"{path} is empty; expected header {','.join(columns)}", line=1)
    except pd.errors.ParserError as e:
        raise ManifestError(f"malformed row in {path}: {e}", line=_parser_error_line(e)) from e
    if list(frame.columns) != columns:
        raise ManifestError(
            f"expected header {','.join(columns)}, got {','.join(map(str, frame.columns))}",
            line=1,
        )
    for offset, row in enumerate(frame.itertuples(index=False)):
        if is_blank_row(row):
            raise ManifestError("blank line", line=offset + 2)
    return frame


def load_manifest(path: str | Path) -> Manifest:
    """
    Load a manifest CSV.

    Args:
        path: File with header image_id,dataset,native_grade,source_partition,site

    Returns:
        Manifest in file order (a header-only file gives an empty manifest)

    Raises:
        ManifestError: Naming the line of the first invalid row
    """
    frame = read_csv_strict(path, MANIFEST_COLUMNS)
    entries = []
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        if any(not isinstance(cell, str) for cell in row):
            raise ManifestError(f"expected {len(MANIFEST_COLUMNS)} fields", line)
        try:
            grade = int(row.native_grade)
        except ValueError:
            raise ManifestError(f"native_grade {row.native_grade!r} is not an integer", line)
        try:
            dataset = DatasetId.parse(row.dataset)
        except DatasetError as e:
            raise ManifestError(str(e), line) from e
        try:
            entries.append(
                ManifestEntry(
                    image_id=row.image_id,
                    dataset=dataset,
                    native_grade=grade,
                    source_partition=row.source_partition.strip().lower() or "none",
                    site=row.site,
                )
            )
        except ValidationError as e:
            reason = "; ".join(err["msg"] for err in e.errors())
            raise ManifestError(reason, line) from e
    try:
        return Manifest(entries)
    except DatasetError as e:
        raise ManifestError(str(e)) from e


def write_manifest(manifest: Manifest, path: str | Path) -> Path:
    """Write a manifest CSV atomically (UTF-8, LF line endings)."""
    text = manifest.to_frame().to_csv(index=False, lineterminator="\n")
    return atomic_write_text(path, text)


def load_exclusion_list(path: str | Path) -> list[str]:
    """Read one image id per line, ignoring blank lines."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Exclusion list not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    return [line.strip() for line in lines if line.strip()]


@dataclass
class PruneReport:
    """Outcome of pruning a manifest."""

    manifest: Manifest
    removed: int
    missing_ids: list[str] = field(default_factory=list)


def prune(manifest: Manifest, exclusions: Iterable[str]) -> PruneReport:
    """
    Remove excluded images from a manifest.

    Args:
        manifest: Manifest to prune
        exclusions: Image ids to drop; must be unique

    Returns:
        PruneReport with the pruned manifest, the number removed and the
        exclusion ids that were not in the manifest

    Raises:
        DatasetError: If an id appears twice in the exclusion list
    """
    exclusions = list(exclusions)
    seen: set[str] = set()
    duplicates = sorted({x for x in exclusions if x in seen or seen.add(x)})
    if duplicates:
        raise DatasetError(f"Duplicate ids in exclusion list: {', '.join(duplicates[:10])}")

    missing = sorted(x for x in seen if x not in manifest)
    if missing:
        logger.warning(
            "%d excluded id(s) not present in manifest (first: %s)", len(missing), missing[0]
        )

    kept = manifest.filter(lambda e: e.image_id not in seen)
    removed = len(manifest) - len(kept)
    logger.info("Pruned %d image(s); %d remain", removed, len(kept))
    return PruneReport(kept, removed, missing)
