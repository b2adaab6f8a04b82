"""Demo script showing how to use RetinaGrade programmatically on synthetic images."""

import sys
from pathlib import Path

import numpy as np

from backend.classifier import (
    PredictionRecord,
    featurize,
    predict_batch,
    stack_features,
    train_softmax,
)
from backend.dataset import (
    DatasetId,
    Manifest,
    ManifestEntry,
    Split,
    SplitPolicy,
    Task,
    check_merge_identities,
    class_distribution,
    make_splits,
    map_grade,
    merge_counts,
    split_ids,
)
from backend.ensemble import FusionStrategy, fuse_batch, group_predictions
from backend.imaging import PreprocessConfig, make_fundus, preprocess
from backend.logging_config import configure_logging
from backend.metrics import evaluate_task, format_percent

LESION_OFFSETS = [(0.35, -0.2), (-0.3, 0.3), (0.1, 0.45)]
SITE = "Lariboisière"


def build_dataset(count: int = 40) -> tuple[Manifest, dict]:
    """Half healthy, half with lesions; 12 images come from the test site."""
    entries, images = [], {}
    for i in range(count):
        image_id = f"syn{i:03d}"
        grade = 0 if i % 2 == 0 else 1 + (i // 2) % 3
        lesions = LESION_OFFSETS if grade else ()
        images[image_id] = make_fundus(128, 128, 50, lesions=lesions, lesion_radius=6, seed=i)
        entries.append(
            ManifestEntry(
                image_id=image_id,
                dataset=DatasetId.MESSIDOR,
                native_grade=grade,
                site=SITE if i < 12 else "Brest",
            )
        )
    return Manifest(entries), images


def demo_grade_reconciliation():
    """Demo: Rebuild coarser-task counts from quaternary counts."""
    print("=" * 60)
    print("DEMO: Grade reconciliation")
    print("=" * 60)

    eyepacs_test = [24741, 7196, 753, 733]
    messidor_test = [151, 30, 70, 149]
    for dataset, counts in ((DatasetId.EYEPACS, eyepacs_test), (DatasetId.MESSIDOR, messidor_test)):
        print(f"\n{dataset.value} quaternary test counts: {counts}")
        for task in (Task.BINARY_NORMAL_ABNORMAL, Task.BINARY_REFERABLE, Task.TERNARY):
            print(f"   {task.value:16s} -> {merge_counts(counts, dataset, task)}")


def demo_pipeline():
    """Demo: preprocess -> split -> train -> fuse -> evaluate."""
    print("\n" + "=" * 60)
    print("DEMO: Synthetic end-to-end run")
    print("=" * 60)

    task = Task.BINARY_NORMAL_ABNORMAL
    manifest, images = build_dataset()

    print("\n1. Preprocessing 40 synthetic fundus images...")
    config = PreprocessConfig(output_size=32)
    processed = {image_id: preprocess(image, config) for image_id, image in images.items()}

    print("\n2. Splitting (test = clinic site)...")
    policy = SplitPolicy(train_count=24, test_site=SITE)
    assignments = make_splits(manifest, DatasetId.MESSIDOR, seed=7, policy=policy)
    print(class_distribution(assignments, manifest, task).to_frame().to_string())
    checks = check_merge_identities(assignments, manifest, DatasetId.MESSIDOR)
    print(f"   Merge identities: {sum(c.passed for c in checks)}/{len(checks)} PASS")

    def label(image_id: str) -> int:
        entry = manifest[image_id]
        return map_grade(entry.dataset, entry.native_grade, task)

    print("\n3. Training softmax baseline...")
    train = [featurize(processed[i], 32, i) for i in split_ids(assignments, Split.TRAIN)]
    result = train_softmax(
        stack_features(train), [label(f.image_id) for f in train], task, epochs=500
    )
    print(f"   Loss {result.losses[0]:.4f} -> {result.final_loss:.4f}")

    print("\n4. Predicting the test split with two models...")
    test_ids = split_ids(assignments, Split.TEST)
    test = [featurize(processed[i], 32, i) for i in test_ids]
    records = predict_batch(result.model, test)
    # a second, deliberately noisy member so the ensemble has something to fuse
    rng = np.random.default_rng(3)
    for record in list(records):
        noisy = np.clip(np.array(record.probs) + rng.normal(0, 0.2, size=2), 0.01, None)
        records.append(
            PredictionRecord(
                image_id=record.image_id,
                model_id="noisy-member",
                probs=tuple((noisy / noisy.sum()).tolist()),
            )
        )

    print("\n5. Fusing and evaluating...")
    fused = fuse_batch(group_predictions(records, test_ids), FusionStrategy.MEAN_PROB)
    probs = np.array([d.fused_probs for d in fused.diagnoses])
    labels = [label(d.image_id) for d in fused.diagnoses]
    predicted = [d.predicted_class for d in fused.diagnoses]
    report = evaluate_task(probs, labels, task, target_specificity=0.9, predicted=predicted)
    print(f"   Accuracy:    {format_percent(report.accuracy)}%")
    print(f"   AUC:         {format_percent(report.auc)}%")
    print(f"   Sensitivity: {format_percent(report.sensitivity)}%")
    print(f"   Specificity: {format_percent(report.specificity)}%")
    if report.operating_point is not None:
        print(f"   {report.operating_point.description}")

    out = Path("reports")
    out.mkdir(exist_ok=True)
    (out / "demo_metrics.json").write_text(report.model_dump_json(indent=2), encoding="utf-8")
    print("\n   Full report saved to: reports/demo_metrics.json")


if __name__ == "__main__":
    configure_logging()

    print("\n" + "=" * 60)
    print("RetinaGrade - Demo Script")
    print("=" * 60)
    print("\nAvailable demos:")
    print("  1. Grade reconciliation")
    print("  2. Synthetic end-to-end run")
    print("  all. Run all demos")

    choice = sys.argv[1] if len(sys.argv) > 1 else input("\nEnter choice (1/2/all): ").strip()

    try:
        if choice == "1":
            demo_grade_reconciliation()
        elif choice == "2":
            demo_pipeline()
        elif choice == "all":
            demo_grade_reconciliation()
            demo_pipeline()
        else:
            print("Invalid choice")

        print("\n" + "=" * 60)
        print("Demo complete!")
        print("=" * 60)

    except Exception as e:
        print(f"\nError running demo: {str(e)}")
        import traceback
        traceback.print_exc()
