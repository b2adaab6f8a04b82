"""Tests for grade harmonization, manifests, pruning and splits."""

import pytest

from backend.dataset import (
    DatasetError,
    DatasetId,
    GradeMap,
    Manifest,
    ManifestEntry,
    ManifestError,
    Partition,
    Split,
    SplitAssignment,
    SplitMix64,
    SplitPolicy,
    SplitPolicyError,
    Task,
    check_merge_identities,
    class_distribution,
    grade_map,
    load_exclusion_list,
    load_manifest,
    load_splits,
    make_splits,
    map_grade,
    merge_counts,
    prune,
    split_ids,
    write_manifest,
    write_splits,
)

from .conftest import TEST_SITE, messidor_entries


class TestGrades:
    def test_eyepacs_grade_four_is_quaternary_three(self):
        assert map_grade(DatasetId.EYEPACS, 4, Task.QUATERNARY) == 3

    @pytest.mark.parametrize("task", list(Task))
    def test_healthy_is_always_class_zero(self, task):
        assert map_grade(DatasetId.MESSIDOR, 0, task) == 0
        assert map_grade(DatasetId.EYEPACS, 0, task) == 0

    def test_messidor_ternary(self):
        assert map_grade(DatasetId.MESSIDOR, 2, Task.TERNARY) == 2
        assert map_grade(DatasetId.MESSIDOR, 3, Task.TERNARY) == 2

    @pytest.mark.parametrize(
        "task,expected",
        [
            (Task.QUATERNARY, [0, 1, 1, 2, 3]),
            (Task.TERNARY, [0, 1, 1, 2, 2]),
            (Task.BINARY_REFERABLE, [0, 0, 0, 1, 1]),
            (Task.BINARY_NORMAL_ABNORMAL, [0, 1, 1, 1, 1]),
        ],
    )
    def test_eyepacs_maps(self, task, expected):
        assert [map_grade(DatasetId.EYEPACS, g, task) for g in range(5)] == expected

    @pytest.mark.parametrize("dataset", list(DatasetId))
    @pytest.mark.parametrize("task", list(Task))
    def test_maps_are_total_and_onto(self, dataset, task):
        classes = {map_grade(dataset, g, task) for g in dataset.grades}
        assert classes == set(range(task.class_count))

    @pytest.mark.parametrize("dataset,grade", [(DatasetId.EYEPACS, 5), (DatasetId.MESSIDOR, 4)])
    def test_out_of_range_grade(self, dataset, grade):
        with pytest.raises(DatasetError):
            map_grade(dataset, grade, Task.QUATERNARY)

    def test_grade_map_must_be_onto(self):
        with pytest.raises(DatasetError):
            GradeMap(DatasetId.MESSIDOR, Task.TERNARY, (0, 0, 1, 1))

    def test_classes_of(self):
        assert grade_map(DatasetId.EYEPACS, Task.TERNARY).classes_of(2) == [3, 4]

    def test_dataset_tag_is_case_insensitive(self):
        assert DatasetId.parse(" messidor ") is DatasetId.MESSIDOR
        with pytest.raises(DatasetError):
            DatasetId.parse("APTOS")

    def test_task_class_names(self):
        assert Task.BINARY_REFERABLE.class_names == ["Non-Referable", "Referable"]
        assert Task.TERNARY.class_count == 3 and not Task.TERNARY.is_binary


class TestMergeCounts:
    def test_eyepacs_test_partition(self):
        counts = [24741, 7196, 753, 733]
        assert merge_counts(counts, DatasetId.EYEPACS, Task.BINARY_REFERABLE) == [31937, 1486]
        assert merge_counts(counts, DatasetId.EYEPACS, Task.BINARY_NORMAL_ABNORMAL) == [
            24741,
            8682,
        ]
        assert merge_counts(counts, DatasetId.EYEPACS, Task.TERNARY) == [24741, 7196, 1486]

    def test_messidor_test_site(self):
        counts = [151, 30, 70, 149]
        assert merge_counts(counts, DatasetId.MESSIDOR, Task.BINARY_NORMAL_ABNORMAL) == [151, 249]
        assert merge_counts(counts, DatasetId.MESSIDOR, Task.BINARY_REFERABLE) == [181, 219]
        assert merge_counts(counts, DatasetId.MESSIDOR, Task.TERNARY) == [151, 30, 219]

    def test_quaternary_is_identity(self):
        assert merge_counts([1, 2, 3, 4], DatasetId.MESSIDOR, Task.QUATERNARY) == [1, 2, 3, 4]

    def test_needs_four_counts(self):
        with pytest.raises(DatasetError):
            merge_counts([1, 2, 3], DatasetId.MESSIDOR, Task.TERNARY)


def eyepacs_train_manifest(size: int) -> Manifest:
    return Manifest(
        ManifestEntry(
            image_id=f"e{i:05d}",
            dataset=DatasetId.EYEPACS,
            native_grade=i % 5,
            source_partition=Partition.TRAIN,
        )
        for i in range(size)
    )


class TestPrune:
    def test_empty_exclusion_list(self):
        manifest = eyepacs_train_manifest(20)
        report = prune(manifest, [])
        assert report.manifest.ids == manifest.ids and report.removed == 0

    def test_removes_uninterpretable_images(self):
        manifest = eyepacs_train_manifest(35783)
        excluded = [f"e{i:05d}" for i in range(0, 35783, 50)][:657]
        report = prune(manifest, excluded)
        assert len(report.manifest) == 35126
        assert report.removed == 657
        assert not set(excluded) & set(report.manifest.ids)

    def test_duplicate_exclusion(self):
        with pytest.raises(DatasetError, match="e00001"):
            prune(eyepacs_train_manifest(5), ["e00001", "e00002", "e00001"])

    def test_absent_ids_are_reported_not_raised(self):
        report = prune(eyepacs_train_manifest(5), ["e00001", "ghost"])
        assert report.removed == 1
        assert report.missing_ids == ["ghost"]

    def test_removes_exactly_the_intersection(self, rng):
        manifest = eyepacs_train_manifest(200)
        excluded = [f"e{i:05d}" for i in rng.choice(300, size=80, replace=False)]
        report = prune(manifest, excluded)
        assert set(report.manifest.ids) == set(manifest.ids) - set(excluded)

    def test_exclusion_list_file(self, tmp_path):
        path = tmp_path / "exclude.txt"
        path.write_text("a\n\n b \nc\n", encoding="utf-8")
        assert load_exclusion_list(path) == ["a", "b", "c"]


class TestManifestFiles:
    def fixture_rows(self) -> Manifest:
        entries = messidor_entries({TEST_SITE: [0, 1, 2, 3], "Brest": [3, 2]})
        entries += [
            ManifestEntry(
                image_id=f"e{i}",
                dataset=DatasetId.EYEPACS,
                native_grade=i,
                source_partition="test" if i % 2 else "train",
            )
            for i in range(4)
        ]
        return Manifest(entries)

    def test_round_trip(self, tmp_path):
        manifest = self.fixture_rows()
        first = write_manifest(manifest, tmp_path / "a.csv")
        loaded = load_manifest(first)
        second = write_manifest(loaded, tmp_path / "b.csv")
        assert len(loaded) == 10
        assert loaded.entries == manifest.entries
        assert first.read_bytes() == second.read_bytes()
        assert b"\r\n" not in first.read_bytes()

    def test_grade_out_of_range_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "image_id,dataset,native_grade,source_partition,site\n"
            "a,EyePACS,0,train,\n"
            "b,EyePACS,4,train,\n"
            "c,EyePACS,5,train,\n",
            encoding="utf-8",
        )
        with pytest.raises(ManifestError) as excinfo:
            load_manifest(path)
        assert excinfo.value.line == 4
        assert "line 4" in str(excinfo.value)

    def test_blank_line_is_rejected_at_its_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "image_id,dataset,native_grade,source_partition,site\n"
            "a,EyePACS,0,train,\n"
            "\n"
            "c,EyePACS,5,train,\n",
            encoding="utf-8",
        )
        with pytest.raises(ManifestError, match="blank line") as excinfo:
            load_manifest(path)
        assert excinfo.value.line == 3

    def test_unknown_dataset_tag(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "image_id,dataset,native_grade,source_partition,site\nx,IDRiD,1,none,\n",
            encoding="utf-8",
        )
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(path)

    def test_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("image_id,dataset,native_grade,source_partition,site\n", encoding="utf-8")
        assert len(load_manifest(path)) == 0

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,grade\n1,2\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="expected header"):
            load_manifest(path)

    def test_duplicate_id(self):
        with pytest.raises(DatasetError):
            Manifest(messidor_entries({"Brest": [0]}) * 2)


class TestSplits:
    def test_same_seed_same_assignment(self, messidor_manifest):
        first = make_splits(messidor_manifest, DatasetId.MESSIDOR, seed=42)
        second = make_splits(messidor_manifest, DatasetId.MESSIDOR, seed=42)
        assert first == second

    def test_different_seed_changes_assignment(self, messidor_manifest):
        first = make_splits(messidor_manifest, DatasetId.MESSIDOR, seed=1)
        second = make_splits(messidor_manifest, DatasetId.MESSIDOR, seed=2)
        assert split_ids(first, Split.TRAIN) != split_ids(second, Split.TRAIN)

    def test_row_order_does_not_matter(self, messidor_manifest):
        reordered = Manifest(reversed(messidor_manifest.entries))
        assert make_splits(messidor_manifest, DatasetId.MESSIDOR, 9) == make_splits(
            reordered, DatasetId.MESSIDOR, 9
        )

    def test_messidor_test_site(self, messidor_manifest):
        assignments = make_splits(messidor_manifest, DatasetId.MESSIDOR, seed=0)
        test = split_ids(assignments, Split.TEST)
        assert len(test) == 400
        assert {messidor_manifest[i].site for i in test} == {TEST_SITE}
        assert len(split_ids(assignments, Split.TRAIN)) == 700
        assert len(split_ids(assignments, Split.VALIDATE)) == 100

        quaternary = class_distribution(assignments, messidor_manifest, Task.QUATERNARY)
        assert quaternary.column(Split.TEST) == [151, 30, 70, 149]
        ternary = class_distribution(assignments, messidor_manifest, Task.TERNARY)
        assert ternary.column(Split.TEST) == [151, 30, 219]
        binary = class_distribution(assignments, messidor_manifest, Task.BINARY_NORMAL_ABNORMAL)
        assert binary.column(Split.TEST) == [151, 249]

    def test_site_match_ignores_accents_and_case(self, messidor_manifest):
        policy = SplitPolicy(train_count=700, test_site="LARIBOISIERE")
        assignments = make_splits(messidor_manifest, DatasetId.MESSIDOR, 0, policy)
        assert len(split_ids(assignments, Split.TEST)) == 400

    def test_eyepacs_partition(self, eyepacs_manifest):
        assignments = make_splits(eyepacs_manifest, DatasetId.EYEPACS, seed=2019)
        train = split_ids(assignments, Split.TRAIN)
        validate = split_ids(assignments, Split.VALIDATE)
        test = split_ids(assignments, Split.TEST)
        assert (len(train), len(validate), len(test)) == (30000, 4469, 33423)
        assert not set(train) & set(validate)
        pool = {e.image_id for e in eyepacs_manifest if e.source_partition is Partition.TRAIN}
        assert set(train) | set(validate) == pool

        referable = class_distribution(assignments, eyepacs_manifest, Task.BINARY_REFERABLE)
        assert referable.column(Split.TEST) == [31937, 1486]
        quaternary = class_distribution(assignments, eyepacs_manifest, Task.QUATERNARY)
        assert quaternary.column(Split.TEST) == [24741, 7196, 753, 733]

        checks = check_merge_identities(assignments, eyepacs_manifest, DatasetId.EYEPACS)
        assert all(check.passed for check in checks)
        descriptions = {check.description for check in checks}
        assert "test referable[Non-Referable]: 24741 + 7196 == 31937" in descriptions

    def test_pool_too_small(self, messidor_manifest):
        with pytest.raises(SplitPolicyError):
            make_splits(
                messidor_manifest, DatasetId.MESSIDOR, 0, SplitPolicy(train_count=900)
            )
        with pytest.raises(SplitPolicyError):
            make_splits(
                messidor_manifest,
                DatasetId.MESSIDOR,
                0,
                SplitPolicy(train_count=10, test_count=401, test_site=TEST_SITE),
            )

    @pytest.mark.parametrize("dataset", [DatasetId.MESSIDOR, DatasetId.EYEPACS])
    def test_identities_hold_for_random_manifests(self, rng, dataset):
        for trial in range(20):
            size = int(rng.integers(30, 120))
            if dataset is DatasetId.MESSIDOR:
                grades = rng.integers(0, 4, size=size).tolist()
                sites = {TEST_SITE: grades[:20], "Brest": grades[20:]}
                manifest = Manifest(messidor_entries(sites, prefix=f"r{trial}_"))
                policy = SplitPolicy(train_count=5, test_site=TEST_SITE)
            else:
                grades = rng.integers(0, 5, size=size).tolist()
                manifest = Manifest(
                    [
                        ManifestEntry(
                            image_id=f"e{trial}_{i:03d}",
                            dataset=DatasetId.EYEPACS,
                            native_grade=grade,
                            source_partition="test" if i < 20 else "train",
                        )
                        for i, grade in enumerate(grades)
                    ]
                )
                policy = SplitPolicy(train_count=5)
            assignments = make_splits(manifest, dataset, trial, policy)
            checks = check_merge_identities(assignments, manifest, dataset)
            assert checks and all(check.passed for check in checks)

    def test_shuffle_is_a_permutation(self):
        items = list(range(100))
        SplitMix64(12345).shuffle(items)
        assert sorted(items) == list(range(100))
        assert items != list(range(100))

    def test_generator_stays_in_64_bits(self):
        rng = SplitMix64(2**64 - 1)
        assert all(0 <= rng.next_u64() < 2**64 for _ in range(1000))


class TestDistribution:
    def test_empty_split_is_all_zero(self, messidor_manifest):
        distribution = class_distribution([], messidor_manifest, Task.QUATERNARY)
        assert distribution.column(Split.TRAIN) == [0, 0, 0, 0]
        assert distribution.totals() == {"train": 0, "validate": 0, "test": 0}
        assert (distribution.percentages().to_numpy() == 0).all()

    def test_dangling_id(self, messidor_manifest):
        with pytest.raises(DatasetError, match="ghost"):
            class_distribution(
                [SplitAssignment("ghost", Split.TEST)], messidor_manifest, Task.TERNARY
            )

    def test_total_row_and_percentages(self, messidor_manifest):
        assignments = make_splits(messidor_manifest, DatasetId.MESSIDOR, seed=3)
        distribution = class_distribution(
            assignments, messidor_manifest, Task.BINARY_NORMAL_ABNORMAL
        )
        frame = distribution.to_frame()
        assert frame.loc["Total", "test"] == 400
        assert distribution.percentages().loc["Normal", "test"] == pytest.approx(37.75)


class TestSplitFiles:
    def test_write_then_load(self, tmp_path, messidor_manifest):
        assignments = make_splits(messidor_manifest, DatasetId.MESSIDOR, seed=5)
        path = write_splits(assignments, tmp_path / "splits.csv")
        assert load_splits(path) == assignments

    def test_unknown_split(self, tmp_path):
        path = tmp_path / "splits.csv"
        path.write_text("image_id,split\na,train\nb,holdout\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="line 3"):
            load_splits(path)

    def test_blank_line_in_split_file(self, tmp_path):
        path = tmp_path / "splits.csv"
        path.write_text("image_id,split\na,train\n\nb,test\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="line 3"):
            load_splits(path)

    def test_duplicate_assignment(self, tmp_path):
        path = tmp_path / "splits.csv"
        path.write_text("image_id,split\na,train\na,test\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="assigned twice"):
            load_splits(path)
