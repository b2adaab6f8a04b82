"""Run configuration: one JSON file plus command-line overrides."""

import json
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, ValidationError

from backend.classifier import BaselineConfig
from backend.dataset import DatasetId, SplitPolicy, Task
from backend.ensemble import FusionStrategy
from backend.imaging import PreprocessConfig

SEED_LIMIT = 2**64


class ConfigError(ValueError):
    """The run configuration is invalid or references missing paths."""


class PathsConfig(BaseModel):
    """Input and output locations; relative paths resolve against the config file."""

    manifest: Optional[Path] = Field(None, description="Manifest CSV")
    images_dir: Optional[Path] = Field(None, description="Directory of raw fundus images")
    exclusion_list: Optional[Path] = Field(None, description="Image ids to drop, one per line")
    predictions_dir: Optional[Path] = Field(
        None, description="Prediction CSVs to fuse (default: <output_dir>/predictions)"
    )
    processed_dir: Optional[Path] = Field(
        None, description="Preprocessed images (default: <output_dir>/processed)"
    )
    splits: Optional[Path] = Field(None, description="Split CSV (default: <output_dir>/splits.csv)")
    output_dir: Path = Field(Path("out"), description="Where every command writes its outputs")


class RunConfig(BaseModel):
    """Everything a pipeline command needs."""

    paths: PathsConfig = Field(default_factory=PathsConfig)
    task: Task = Field(Task.BINARY_NORMAL_ABNORMAL, description="Grading task")
    seed: int = Field(0, ge=0, lt=SEED_LIMIT, description="Unsigned 64-bit run seed")
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)
    split_policies: dict[DatasetId, SplitPolicy] = Field(
        default_factory=dict, description="Per-dataset split policy (default: published setup)"
    )
    strategy: FusionStrategy = Field(FusionStrategy.MEAN_PROB, description="Ensemble fusion rule")
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    target_specificity: float = Field(
        0.9, gt=0, le=1, description="Specificity of the reported binary operating point"
    )
    min_coverage: float = Field(
        0.9, ge=0, le=1, description="Abort evaluation if fewer test images get a diagnosis"
    )
    workers: int = Field(4, ge=1, description="Concurrent preprocessing workers")

    @property
    def output_dir(self) -> Path:
        return self.paths.output_dir

    @property
    def processed_dir(self) -> Path:
        return self.paths.processed_dir or self.output_dir / "processed"

    @property
    def predictions_dir(self) -> Path:
        return self.paths.predictions_dir or self.output_dir / "predictions"

    @property
    def splits_path(self) -> Path:
        return self.paths.splits or self.output_dir / "splits.csv"

    def policy_for(self, dataset: DatasetId) -> SplitPolicy:
        return self.split_policies.get(DatasetId(dataset)) or SplitPolicy.for_dataset(dataset)

    def require(self, *names: str) -> None:
        """
        Check that the named path fields are set and exist.

        Raises:
            ConfigError: Naming every missing path
        """
        problems = []
        for name in names:
            value = getattr(self.paths, name)
            if value is None:
                problems.append(f"paths.{name} is not set")
            elif not Path(value).exists():
                problems.append(f"paths.{name} does not exist: {value}")
        if problems:
            raise ConfigError("; ".join(problems))


def _resolve_paths(raw: dict[str, Any], base: Path) -> None:
    paths = raw.get("paths") or {}
    for key, value in paths.items():
        if isinstance(value, str) and value and not Path(value).is_absolute():
            paths[key] = str(base / value)


def load_run_config(path: Optional[str | Path] = None, **overrides: Any) -> RunConfig:
    """
    Build a RunConfig from an optional JSON file and flag overrides.

    Args:
        path: JSON config file
        **overrides: Top-level fields (task, seed, strategy, target_specificity,
            workers) or `output_dir`; None values are ignored

    Returns:
        RunConfig

    Raises:
        ConfigError: If the file is unreadable or any value is invalid
    """
    raw: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object")
        _resolve_paths(raw, path.resolve().parent)

    output_dir = overrides.pop("output_dir", None)
    if output_dir is not None:
        raw.setdefault("paths", {})["output_dir"] = str(output_dir)
    raw.update({key: value for key, value in overrides.items() if value is not None})

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid configuration: {details}") from e
