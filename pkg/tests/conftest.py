"""Shared fixtures: synthetic fundus images, manifests and run configs."""

import json
from pathlib import Path

import numpy as np
import pytest

from backend.dataset import DatasetId, Manifest, ManifestEntry
from backend.imaging import make_fundus
from backend.storage import save_png

LESION_OFFSETS = [(0.35, -0.2), (-0.3, 0.3), (0.1, 0.45)]
TEST_SITE = "Lariboisière"


@pytest.fixture
def rng():
    return np.random.default_rng(20190315)


def messidor_entries(site_grades: dict[str, list[int]], prefix: str = "m") -> list[ManifestEntry]:
    """Messidor entries with the given grades per site, ids numbered in order."""
    entries = []
    n = 0
    for site, grades in site_grades.items():
        for grade in grades:
            entries.append(
                ManifestEntry(
                    image_id=f"{prefix}{n:05d}",
                    dataset=DatasetId.MESSIDOR,
                    native_grade=grade,
                    site=site,
                )
            )
            n += 1
    return entries


@pytest.fixture
def messidor_manifest() -> Manifest:
    """1200 Messidor images; the 400 test-site images have quaternary counts 151/30/70/149."""
    test_grades = [0] * 151 + [1] * 30 + [2] * 70 + [3] * 149
    other_grades = [0] * 395 + [1] * 123 + [2] * 177 + [3] * 105
    return Manifest(
        messidor_entries({TEST_SITE: test_grades, "Brest": other_grades[:400],
                          "CHU de St Etienne": other_grades[400:]})
    )


@pytest.fixture
def eyepacs_manifest() -> Manifest:
    """34469 training-partition images plus a test partition with 24741/7196/753/733."""
    entries = []
    train_grades = [0] * 25000 + [1] * 2500 + [2] * 5000 + [3] * 1000 + [4] * 969
    for i, grade in enumerate(train_grades):
        entries.append(
            ManifestEntry(
                image_id=f"tr{i:05d}",
                dataset=DatasetId.EYEPACS,
                native_grade=grade,
                source_partition="train",
            )
        )
    # native grades 1 and 2 both land in quaternary class 1
    test_grades = [0] * 24741 + [1] * 3000 + [2] * 4196 + [3] * 753 + [4] * 733
    for i, grade in enumerate(test_grades):
        entries.append(
            ManifestEntry(
                image_id=f"te{i:05d}",
                dataset=DatasetId.EYEPACS,
                native_grade=grade,
                source_partition="test",
            )
        )
    return Manifest(entries)


def synthetic_fundus(index: int, abnormal: bool):
    lesions = LESION_OFFSETS if abnormal else ()
    return make_fundus(128, 128, 50, lesions=lesions, lesion_radius=6, seed=index)


@pytest.fixture
def synthetic_study(tmp_path: Path) -> dict:
    """
    40 synthetic fundus images on disk with a manifest and a run config.

    Even-numbered images are healthy (grade 0), odd-numbered ones carry
    lesions (grades 1-3). The first 12 come from the test site.
    """
    images_dir = tmp_path / "images"
    images_dir.mkdir()
    rows = ["image_id,dataset,native_grade,source_partition,site"]
    for i in range(40):
        image_id = f"syn{i:03d}"
        grade = 0 if i % 2 == 0 else 1 + (i // 2) % 3
        save_png(synthetic_fundus(i, grade > 0), images_dir / f"{image_id}.png")
        site = TEST_SITE if i < 12 else "Brest"
        rows.append(f"{image_id},Messidor,{grade},none,{site}")
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")

    out = tmp_path / "out"
    config = {
        "paths": {
            "manifest": str(manifest),
            "images_dir": str(images_dir),
            "output_dir": str(out),
        },
        "task": "normal-abnormal",
        "seed": 7,
        "preprocess": {"output_size": 32},
        "split_policies": {"Messidor": {"train_count": 24, "test_site": TEST_SITE}},
        "baseline": {"side": 32, "epochs": 500},
        "workers": 2,
    }
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return {
        "root": tmp_path,
        "images_dir": images_dir,
        "manifest": manifest,
        "config": config_path,
        "out": out,
    }
