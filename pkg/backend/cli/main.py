"""Command-line interface for the retinal grading pipeline."""

import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import click
import numpy as np
import pandas as pd
from rich.console import Console
from rich.progress import Progress
from rich.table import Table

from backend import __version__
from backend.classifier import (
    FeatureVector,
    TrainingDivergedError,
    accuracy_of,
    featurize,
    load_predictions,
    predict_batch,
    save_model,
    stack_features,
    train_softmax,
    write_predictions,
)
from backend.dataset import (
    Manifest,
    Split,
    Task,
    check_merge_identities,
    class_distribution,
    grade_map,
    load_exclusion_list,
    load_manifest,
    load_splits,
    make_splits,
    prune,
    split_ids,
    write_splits,
)
from backend.ensemble import FusionStrategy, fuse_batch, group_predictions, write_diagnoses
from backend.imaging import PreprocessError, iter_stages
from backend.logging_config import configure_logging
from backend.metrics import (
    ENSEMBLE_NAME,
    ConfusionMatrix,
    UndefinedMetricError,
    compare_models,
    comparison_frame,
    confusion_matrix_frame,
    format_percent,
    one_vs_rest_curves,
    plot_confusion,
    plot_roc,
    roc_curve,
)
from backend.storage import atomic_write_text, find_image, load_image, save_png

from .config import SEED_LIMIT, ConfigError, RunConfig, load_run_config

logger = logging.getLogger(__name__)

console = Console()

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_ABORT = 2


def run_options(func):
    """Options shared by every command; flags win over the config file."""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False),
                     help="JSON run configuration"),
        click.option("--task", type=click.Choice([t.value for t in Task]), help="Grading task"),
        click.option("--seed", type=click.IntRange(0, SEED_LIMIT - 1), help="Unsigned 64-bit seed"),
        click.option("--strategy", type=click.Choice([s.value for s in FusionStrategy]),
                     help="Ensemble fusion rule"),
        click.option("--target-specificity", type=click.FloatRange(0, 1, min_open=True),
                     help="Specificity of the binary operating point"),
        click.option("--workers", type=click.IntRange(min=1), help="Preprocessing workers"),
        click.option("--out", "output_dir", type=click.Path(file_okay=False),
                     help="Output directory"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@contextmanager
def _aborting():
    """Turn contract and I/O errors into a red message and exit code 2."""
    try:
        yield
    except TrainingDivergedError as e:
        console.print(
            f"\n[red]Training diverged at epoch {e.epoch}; "
            f"last finite loss: {e.last_finite_loss}[/red]"
        )
        sys.exit(EXIT_ABORT)
    except (ValueError, OSError) as e:
        console.print(f"\n[red]Error: {e}[/red]")
        logger.debug("aborting", exc_info=True)
        sys.exit(EXIT_ABORT)


def _load_config(config_path: Optional[str], **overrides) -> RunConfig:
    return load_run_config(config_path, **overrides)


def _ensure_writable(directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    if not os.access(directory, os.W_OK):
        raise ConfigError(f"Output directory is not writable: {directory}")
    return directory


def _load_manifest(config: RunConfig) -> Manifest:
    config.require("manifest")
    manifest = load_manifest(config.paths.manifest)
    if config.paths.exclusion_list is not None:
        config.require("exclusion_list")
        manifest = prune(manifest, load_exclusion_list(config.paths.exclusion_list)).manifest
    return manifest


def _labels_for(ids: list[str], manifest: Manifest, task: Task) -> list[int]:
    maps = {}
    labels = []
    for image_id in ids:
        entry = manifest[image_id]
        if entry.dataset not in maps:
            maps[entry.dataset] = grade_map(entry.dataset, task)
        labels.append(maps[entry.dataset](entry.native_grade))
    return labels


def _write_frame(frame: pd.DataFrame, path: Path, index: bool = False) -> Path:
    return atomic_write_text(
        path, frame.to_csv(index=index, lineterminator="\n", float_format="%.17g")
    )


@click.group()
@click.version_option(version=__version__)
def cli():
    """Retinal grading pipeline - preprocess, split, train a baseline and evaluate ensembles."""
    with _aborting():
        configure_logging()


# --------------------------------------------------------------------------- preprocess


def _preprocess_one(
    image_id: str, config: RunConfig, debug_dir: Optional[Path]
) -> Optional[tuple[str, str, str]]:
    """Process one image; returns (image_id, stage, error) on failure."""
    try:
        image = load_image(find_image(config.paths.images_dir, image_id))
    except (OSError, ValueError) as e:
        return image_id, "load", str(e)
    try:
        final = None
        for k, (_, stage_image) in enumerate(iter_stages(image, config.preprocess), start=1):
            if debug_dir is not None:
                save_png(stage_image, debug_dir / f"{image_id}.stage{k}.png")
            final = stage_image
        save_png(final, config.processed_dir / f"{image_id}.png")
    except PreprocessError as e:
        return image_id, e.stage, str(e.cause)
    return None


@cli.command()
@run_options
@click.option("--debug-stages", is_flag=True, help="Also write every intermediate stage as PNG")
def preprocess(config_path, debug_stages, **overrides):
    """Crop, equalize, normalize and resize every manifest image."""
    with _aborting():
        config = _load_config(config_path, **overrides)
        config.require("images_dir")
        manifest = _load_manifest(config)
        _ensure_writable(config.output_dir)
        _ensure_writable(config.processed_dir)
        debug_dir = _ensure_writable(config.output_dir / "debug") if debug_stages else None

        console.print(
            f"\n[bold blue]Preprocessing {len(manifest)} image(s) "
            f"with {config.workers} worker(s)[/bold blue]\n"
        )
        failures = []
        with Progress(console=console, transient=True) as progress:
            bar = progress.add_task("Preprocessing", total=len(manifest))
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                futures = [
                    pool.submit(_preprocess_one, image_id, config, debug_dir)
                    for image_id in manifest.ids
                ]
                for future in as_completed(futures):
                    failure = future.result()
                    if failure is not None:
                        failures.append(failure)
                    progress.advance(bar)

        failures.sort()
        errors = pd.DataFrame(failures, columns=["image_id", "stage", "error"])
        _write_frame(errors, config.output_dir / "preprocess_errors.csv")

        done = len(manifest) - len(failures)
        console.print(f"Processed [green]{done}[/green] image(s) into {config.processed_dir}")
        if failures:
            for image_id, stage, error in failures[:10]:
                console.print(f"  [red]{image_id}[/red] ({stage}): {error}")
            console.print(
                f"[yellow]{len(failures)} failure(s) logged to preprocess_errors.csv[/yellow]"
            )
            sys.exit(EXIT_PARTIAL)


# --------------------------------------------------------------------------- split


def _distribution_table(title: str, frame: pd.DataFrame) -> Table:
    table = Table(title=title)
    table.add_column("Class")
    for column in frame.columns:
        table.add_column(column.capitalize(), justify="right")
    for name, row in frame.iterrows():
        table.add_row(str(name), *(str(int(v)) for v in row))
    return table


@cli.command()
@run_options
def split(config_path, **overrides):
    """Assign images to train/validate/test and check the class tables."""
    with _aborting():
        config = _load_config(config_path, **overrides)
        manifest = _load_manifest(config)
        _ensure_writable(config.output_dir)
        if len(manifest) == 0:
            raise ConfigError("Manifest is empty")

        assignments = []
        per_dataset = {}
        for dataset in sorted(manifest.datasets(), key=lambda d: d.value):
            subset = make_splits(manifest, dataset, config.seed, config.policy_for(dataset))
            per_dataset[dataset] = subset
            assignments.extend(subset)
        write_splits(assignments, config.splits_path)

        frames = []
        failed = 0
        for dataset, subset in per_dataset.items():
            distribution = class_distribution(subset, manifest, config.task)
            title = f"{dataset.value} - {config.task.value}"
            console.print(_distribution_table(title, distribution.to_frame()))

            percentages = distribution.percentages().add_suffix("_pct")
            frame = distribution.counts.join(percentages).reset_index()
            frame.insert(0, "dataset", dataset.value)
            frames.append(frame)

            for check in check_merge_identities(subset, manifest, dataset):
                if check.passed:
                    console.print(f"  [green]PASS[/green] {dataset.value} {check.description}")
                else:
                    failed += 1
                    console.print(
                        f"  [red]FAIL[/red] {dataset.value} {check.description} "
                        f"(quaternary sum {check.expected})"
                    )

        distribution_frame = pd.concat(frames, ignore_index=True)
        _write_frame(distribution_frame, config.output_dir / "distribution.csv")
        console.print(f"\n[green]Splits saved to {config.splits_path}[/green]")
        if failed:
            sys.exit(EXIT_PARTIAL)


# --------------------------------------------------------------------------- train-baseline


def _load_features(
    ids: list[str], config: RunConfig
) -> tuple[list[FeatureVector], list[str]]:
    features, missing = [], []
    for image_id in ids:
        path = config.processed_dir / f"{image_id}.png"
        if not path.exists():
            missing.append(image_id)
            continue
        features.append(featurize(load_image(path), config.baseline.side, image_id))
    return features, missing


@cli.command("train-baseline")
@run_options
def train_baseline(config_path, **overrides):
    """Train the softmax baseline on the train split and predict validate/test."""
    with _aborting():
        config = _load_config(config_path, **overrides)
        manifest = _load_manifest(config)
        _ensure_writable(config.output_dir)
        assignments = [a for a in load_splits(config.splits_path) if a.image_id in manifest]
        task = config.task
        params = config.baseline

        train_feats, missing = _load_features(split_ids(assignments, Split.TRAIN), config)
        val_feats, missing_val = _load_features(split_ids(assignments, Split.VALIDATE), config)
        test_feats, missing_test = _load_features(split_ids(assignments, Split.TEST), config)
        missing += missing_val + missing_test
        if not train_feats:
            raise ConfigError(f"No preprocessed training images in {config.processed_dir}")
        if missing:
            logger.warning("%d preprocessed image(s) missing (first: %s)", len(missing), missing[0])

        x_train = stack_features(train_feats)
        y_train = _labels_for([f.image_id for f in train_feats], manifest, task)
        x_val = stack_features(val_feats)
        y_val = _labels_for([f.image_id for f in val_feats], manifest, task)

        log_rows = []

        def on_epoch(epoch, loss, model):
            val_acc = accuracy_of(model, x_val, y_val) if val_feats else None
            log_rows.append((epoch, loss, val_acc))

        console.print(
            f"\n[bold blue]Training {params.model_id} on {len(train_feats)} image(s), "
            f"task {task.value}[/bold blue]\n"
        )
        result = train_softmax(
            x_train,
            y_train,
            task,
            lr=params.lr,
            epochs=params.epochs,
            l2=params.l2,
            seed=config.seed,
            shuffle=params.shuffle,
            model_id=params.model_id,
            on_epoch=on_epoch,
        )

        save_model(result.model, config.output_dir / "model.json")
        log = pd.DataFrame(log_rows, columns=["epoch", "loss", "validation_accuracy"])
        _write_frame(log, config.output_dir / "training_log.csv")
        records = predict_batch(result.model, val_feats + test_feats)
        prediction_path = write_predictions(
            records, config.predictions_dir / f"{params.model_id}.csv"
        )

        final_val = log_rows[-1][2] if log_rows else None
        table = Table(show_header=False)
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="green")
        table.add_row("Train images", str(len(train_feats)))
        table.add_row("Validation images", str(len(val_feats)))
        table.add_row("Test images", str(len(test_feats)))
        table.add_row("Final loss", f"{result.final_loss:.6f}")
        table.add_row("Validation accuracy %", format_percent(final_val))
        table.add_row("Predictions", str(prediction_path))
        console.print(table)

        if missing:
            sys.exit(EXIT_PARTIAL)


# --------------------------------------------------------------------------- evaluate


def _probability_matrix(rows: list[tuple[float, ...]], k: int) -> np.ndarray:
    return np.array(rows, dtype=np.float64).reshape(len(rows), k)


def _write_roc_plots(members, ensemble, task: Task, out: Path) -> list[Path]:
    named = {**members, ENSEMBLE_NAME: ensemble}
    written = []
    if task.is_binary:
        curves = {}
        for name, (probs, labels) in named.items():
            try:
                curves[name] = roc_curve(probs[:, 1], labels)
            except UndefinedMetricError:
                logger.warning("%s: ROC undefined on its covered images", name)
        written.append(plot_roc(curves, out / "roc.svg", title=f"ROC - {task.value}"))
        return written
    per_model = {
        name: one_vs_rest_curves(probs, labels, task.class_count)
        for name, (probs, labels) in named.items()
    }
    for k, class_name in enumerate(task.class_names):
        curves = {name: c[k] for name, c in per_model.items() if k in c}
        written.append(
            plot_roc(
                curves, out / f"roc_class{k}.svg", title=f"ROC - {task.value} class {class_name}"
            )
        )
    return written


@cli.command()
@run_options
def evaluate(config_path, **overrides):
    """Fuse prediction files on the test split and report metrics."""
    with _aborting():
        config = _load_config(config_path, **overrides)
        manifest = _load_manifest(config)
        out = _ensure_writable(config.output_dir)
        task = config.task
        k = task.class_count

        test_ids = [
            i for i in split_ids(load_splits(config.splits_path), Split.TEST) if i in manifest
        ]
        if not test_ids:
            raise ConfigError("Test split is empty")
        files = sorted(config.predictions_dir.glob("*.csv"))
        if not files:
            raise ConfigError(f"No prediction files in {config.predictions_dir}")

        records, rejected = [], 0
        for path in files:
            loaded = load_predictions(path, task, strict=False)
            records.extend(loaded.records)
            rejected += len(loaded.rejected)
        model_ids = sorted({r.model_id for r in records})
        grouped = group_predictions(records, test_ids)
        fused = fuse_batch(grouped, config.strategy)

        gaps = []
        for image_id, image_records in grouped.items():
            present = {r.model_id for r in image_records}
            absent = [m for m in model_ids if m not in present]
            if absent:
                gaps.append((image_id, ";".join(absent)))
        gap_frame = pd.DataFrame(gaps, columns=["image_id", "missing_models"])
        _write_frame(gap_frame, out / "coverage.csv")
        coverage = len(fused.diagnoses) / len(test_ids)
        if coverage < config.min_coverage:
            raise ConfigError(
                f"Only {len(fused.diagnoses)}/{len(test_ids)} test images have predictions "
                f"({coverage:.2%} < {config.min_coverage:.2%}); see coverage.csv"
            )

        labels = dict(zip(test_ids, _labels_for(test_ids, manifest, task)))
        ensemble = (
            _probability_matrix([d.fused_probs for d in fused.diagnoses], k),
            np.array([labels[d.image_id] for d in fused.diagnoses], dtype=np.int64),
        )
        members = {}
        for model_id in model_ids:
            rows = [
                (r.image_id, r.probs)
                for image_records in grouped.values()
                for r in image_records
                if r.model_id == model_id
            ]
            if rows:
                members[model_id] = (
                    _probability_matrix([p for _, p in rows], k),
                    np.array([labels[i] for i, _ in rows], dtype=np.int64),
                )

        comparison = compare_models(
            members,
            ensemble,
            task,
            config.target_specificity,
            ensemble_predicted=[d.predicted_class for d in fused.diagnoses],
        )
        report = comparison[-1][1]
        atomic_write_text(out / "metrics.json", report.model_dump_json(indent=2) + "\n")
        write_diagnoses(fused.diagnoses, out / "diagnoses.csv")
        cm = ConfusionMatrix(report.confusion_matrix)
        cm_frame = confusion_matrix_frame(cm, task.class_names)
        _write_frame(cm_frame, out / "confusion_matrix.csv", index=True)
        _write_frame(comparison_frame(comparison), out / "comparison.csv")
        _write_roc_plots(members, ensemble, task, out)
        plot_confusion(cm, task.class_names, out / "confusion_matrix.svg", title=task.value)

        table = Table(title=f"{task.value} ({config.strategy.value} fusion)")
        table.add_column("Model")
        table.add_column("Images", justify="right")
        table.add_column("Accuracy %", justify="right")
        table.add_column("AUC %", justify="right")
        table.add_column("Sensitivity %", justify="right")
        table.add_column("Specificity %", justify="right")
        for _, row in comparison_frame(comparison).iterrows():
            table.add_row(*(str(v) for v in row))
        console.print(table)
        if report.operating_point is not None:
            console.print(f"Operating point: {report.operating_point.description}")
        console.print(f"\n[green]Report saved to {out / 'metrics.json'}[/green]")

        if gaps or rejected:
            console.print(
                f"[yellow]{len(gaps)} test image(s) lack some model's prediction; "
                f"{rejected} row(s) rejected[/yellow]"
            )
            sys.exit(EXIT_PARTIAL)


if __name__ == "__main__":
    cli()
