"""Tests for features, the softmax baseline and prediction files."""

import math

import numpy as np
import pytest

from backend.classifier import (
    ClassifierError,
    FeatureVector,
    PredictionFileError,
    PredictionRecord,
    SoftmaxModel,
    TrainingDivergedError,
    accuracy_of,
    featurize,
    load_model,
    load_predictions,
    loss_and_gradient,
    predict,
    predict_batch,
    save_model,
    softmax,
    stack_features,
    train_softmax,
    write_predictions,
)
from backend.dataset import Task
from backend.imaging import RasterImage


def two_clusters(n: int = 20) -> tuple[np.ndarray, np.ndarray]:
    left = np.linspace(-2.0, -1.0, n)
    right = np.linspace(1.0, 2.0, n)
    x = np.concatenate([left, right])[:, None]
    y = np.array([0] * n + [1] * n)
    return x, y


class TestFeatures:
    def test_black_image(self):
        feature = featurize(RasterImage.rgb(np.zeros((10, 10, 3))), side=4)
        assert feature.dimension == 48
        assert (feature.values == 0).all()

    def test_white_image(self):
        feature = featurize(RasterImage.rgb(np.full((10, 10, 3), 255)), side=4)
        assert (feature.values == 1).all()

    def test_checkerboard_keeps_exact_values(self):
        data = np.zeros((2, 2, 3), dtype=np.uint8)
        data[0, 0] = data[1, 1] = 255
        feature = featurize(RasterImage.rgb(data), side=2, image_id="chk")
        assert feature.image_id == "chk"
        assert feature.values.tolist() == [1.0] * 3 + [0.0] * 6 + [1.0] * 3

    def test_stack_needs_one_dimension(self):
        with pytest.raises(ClassifierError):
            stack_features([FeatureVector("a", np.zeros(3)), FeatureVector("b", np.zeros(4))])


class TestTraining:
    def test_separable_clusters(self):
        x, y = two_clusters()
        result = train_softmax(x, y, Task.BINARY_REFERABLE, lr=0.1, epochs=200, l2=0.0)
        assert accuracy_of(result.model, x, y) == 1.0

    def test_strong_penalty_gives_uniform_predictions(self):
        x, y = two_clusters()
        result = train_softmax(x, y, Task.BINARY_REFERABLE, lr=1e-6, epochs=100, l2=1e6)
        assert np.abs(result.model.weights).max() < 1e-5
        for value in (-2.0, 0.0, 2.0):
            record = predict(result.model, FeatureVector("x", np.array([value])))
            assert record.probs == pytest.approx((0.5, 0.5), abs=1e-4)

    def test_gradient_matches_finite_differences(self, rng):
        eps = 1e-6
        for _ in range(5):
            weights = rng.normal(size=(3, 4))
            bias = rng.normal(size=3)
            features = rng.normal(size=(6, 4))
            labels = rng.integers(0, 3, size=6)
            _, grad_w, grad_b = loss_and_gradient(weights, bias, features, labels, l2=0.1)

            numeric_w = np.zeros_like(weights)
            for index in np.ndindex(weights.shape):
                step = np.zeros_like(weights)
                step[index] = eps
                up, _, _ = loss_and_gradient(weights + step, bias, features, labels, 0.1)
                down, _, _ = loss_and_gradient(weights - step, bias, features, labels, 0.1)
                numeric_w[index] = (up - down) / (2 * eps)
            numeric_b = np.zeros_like(bias)
            for k in range(3):
                step = np.zeros_like(bias)
                step[k] = eps
                up, _, _ = loss_and_gradient(weights, bias + step, features, labels, 0.1)
                down, _, _ = loss_and_gradient(weights, bias - step, features, labels, 0.1)
                numeric_b[k] = (up - down) / (2 * eps)

            for analytic, numeric in ((grad_w, numeric_w), (grad_b, numeric_b)):
                scale = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
                assert (np.abs(analytic - numeric) / scale).max() < 1e-4

    def test_loss_does_not_increase(self, rng):
        features = rng.random((30, 48))
        labels = np.arange(30) % 3
        result = train_softmax(features, labels, Task.TERNARY, lr=1e-3, epochs=50)
        assert all(b <= a + 1e-12 for a, b in zip(result.losses, result.losses[1:]))
        assert result.final_loss <= result.losses[-1]
        assert result.losses[0] == pytest.approx(math.log(3))

    def test_empty_class(self):
        x, y = two_clusters()
        with pytest.raises(ClassifierError, match="class"):
            train_softmax(x, y, Task.TERNARY)

    def test_divergence(self):
        x, y = two_clusters()
        with pytest.raises(TrainingDivergedError, match="diverged") as excinfo:
            train_softmax(x * 1e3, y, Task.BINARY_REFERABLE, lr=1e300, epochs=50)
        assert excinfo.value.epoch >= 1

    def test_epoch_callback(self):
        x, y = two_clusters(5)
        seen = []
        train_softmax(
            x, y, Task.BINARY_REFERABLE, epochs=3,
            on_epoch=lambda epoch, loss, model: seen.append((epoch, model.dimension)),
        )
        assert seen == [(1, 1), (2, 1), (3, 1)]

    def test_shuffle_is_seeded(self):
        x, y = two_clusters(8)
        first = train_softmax(x, y, Task.BINARY_REFERABLE, epochs=5, seed=4, shuffle=True)
        second = train_softmax(x, y, Task.BINARY_REFERABLE, epochs=5, seed=4, shuffle=True)
        assert np.array_equal(first.model.weights, second.model.weights)


class TestPredict:
    def model(self, k: int, d: int, bias=None) -> SoftmaxModel:
        task = {2: Task.BINARY_REFERABLE, 3: Task.TERNARY, 4: Task.QUATERNARY}[k]
        return SoftmaxModel(np.zeros((k, d)), np.zeros(k) if bias is None else bias, task)

    def test_zero_model_is_uniform(self):
        record = predict(self.model(4, 5), FeatureVector("img", np.ones(5)))
        assert record.probs == pytest.approx((0.25,) * 4)
        assert record.image_id == "img"

    def test_bias_closed_form(self):
        record = predict(self.model(3, 2, np.array([10.0, 0, 0])), FeatureVector("a", np.ones(2)))
        assert record.probs[0] == pytest.approx(math.exp(10) / (math.exp(10) + 2), rel=1e-12)

    def test_shift_invariance(self, rng):
        logits = rng.normal(size=(5, 4))
        assert np.allclose(softmax(logits), softmax(logits + 123.0), atol=1e-12)

    def test_extreme_logits_stay_on_simplex(self):
        probs = softmax(np.array([[1e4, -1e4, 0.0]]))
        assert np.isfinite(probs).all()
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ClassifierError):
            predict(self.model(2, 3), FeatureVector("a", np.ones(4)))

    def test_batch_keeps_order(self):
        features = [FeatureVector(f"i{n}", np.ones(2)) for n in range(3)]
        records = predict_batch(self.model(2, 2), features)
        assert [r.image_id for r in records] == ["i0", "i1", "i2"]

    def test_model_checks_class_count(self):
        with pytest.raises(ClassifierError):
            SoftmaxModel(np.zeros((3, 2)), np.zeros(3), Task.BINARY_REFERABLE)

    def test_save_and_load(self, tmp_path, rng):
        model = SoftmaxModel(rng.normal(size=(3, 4)), rng.normal(size=3), Task.TERNARY, "m1")
        loaded = load_model(save_model(model, tmp_path / "model.json"))
        assert np.array_equal(loaded.weights, model.weights)
        assert np.array_equal(loaded.bias, model.bias)
        assert (loaded.task, loaded.model_id) == (Task.TERNARY, "m1")

    def test_load_rejects_other_formats(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"format": "other"}', encoding="utf-8")
        with pytest.raises(ClassifierError):
            load_model(path)


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestPredictionFiles:
    def test_valid_row(self, tmp_path):
        path = write_csv(tmp_path / "p.csv", ["image_id,model_id,p0,p1", "img1,ntsnet,0.7,0.3"])
        result = load_predictions(path, Task.BINARY_REFERABLE)
        assert len(result.records) == 1
        assert result.records[0].probs == (0.7, 0.3)
        assert result.model_ids == ["ntsnet"]

    def test_sum_violation_names_line(self, tmp_path):
        path = write_csv(
            tmp_path / "p.csv",
            ["image_id,model_id,p0,p1", "img1,ntsnet,0.7,0.3", "img2,ntsnet,0.5,0.3"],
        )
        with pytest.raises(PredictionFileError) as excinfo:
            load_predictions(path, Task.BINARY_REFERABLE)
        assert excinfo.value.line == 3

    def test_lenient_mode_collects_rejections(self, tmp_path):
        path = write_csv(
            tmp_path / "p.csv",
            [
                "image_id,model_id,p0,p1",
                "img1,m,0.5,0.3",
                "img2,m,-0.1,1.1",
                "img3,m,0.25,0.75",
                "img3,m,0.25,0.75",
            ],
        )
        result = load_predictions(path, Task.BINARY_REFERABLE, strict=False)
        assert [r.image_id for r in result.records] == ["img3"]
        assert [line for line, _ in result.rejected] == [2, 3, 5]

    def test_lines_after_a_blank_line_keep_their_numbers(self, tmp_path):
        path = write_csv(
            tmp_path / "p.csv",
            [
                "image_id,model_id,p0,p1",
                "img1,m,0.5,0.5",
                "",
                "img2,m,0.5,0.5",
                "img3,m,0.9,0.3",
            ],
        )
        result = load_predictions(path, Task.BINARY_REFERABLE, strict=False)
        assert [r.image_id for r in result.records] == ["img1", "img2"]
        assert [line for line, _ in result.rejected] == [3, 5]
        assert result.rejected[0][1] == "blank line"
        with pytest.raises(PredictionFileError) as excinfo:
            load_predictions(path, Task.BINARY_REFERABLE)
        assert excinfo.value.line == 3

    def test_coverage_report(self, tmp_path):
        ids = [f"im{i:03d}" for i in range(400)]
        missing = {"im007", "im123", "im399"}
        records = [
            PredictionRecord(image_id=i, model_id="m", probs=(0.5, 0.5))
            for i in ids
            if i not in missing
        ]
        records.append(PredictionRecord(image_id="stray", model_id="m", probs=(1.0, 0.0)))
        path = write_predictions(records, tmp_path / "p.csv")
        result = load_predictions(path, Task.BINARY_REFERABLE, expected_ids=ids)
        assert result.missing_ids == sorted(missing)
        assert result.extra_ids == ["stray"]

    def test_wrong_class_count(self, tmp_path):
        path = write_csv(tmp_path / "p.csv", ["image_id,model_id,p0,p1", "img1,m,0.7,0.3"])
        with pytest.raises(PredictionFileError, match="p2"):
            load_predictions(path, Task.TERNARY)

    def test_write_then_load(self, tmp_path, rng):
        raw = rng.dirichlet(np.ones(4), size=10)
        records = [
            PredictionRecord(image_id=f"i{n}", model_id="m", probs=tuple(row.tolist()))
            for n, row in enumerate(raw)
        ]
        path = write_predictions(records, tmp_path / "p.csv")
        loaded = load_predictions(path, Task.QUATERNARY).records
        assert sorted(loaded, key=lambda r: r.image_id) == sorted(records, key=lambda r: r.image_id)
