import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsfusion import data
from dsfusion.data import Dataset, add_noise, imbalance_ratio, load_csv, stratified_split
from dsfusion.errors import (
    ClassTooSmallError,
    InvalidFractionsError,
    ParseError,
    SingleClassError,
)


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_small_file(self, tmp_path):
        path = write_csv(tmp_path, "f1,f2,label\n1,2,g\n3,4,g\n5,6,b\n7,8,b\n")
        ds, report = load_csv(path, label_column="label", positive_label="g")
        assert ds.n_samples == 4
        assert ds.n_features == 2
        assert ds.labels.tolist() == [0, 0, 1, 1]
        assert report.rows_rejected == 0

    def test_single_class_rejected(self, tmp_path):
        path = write_csv(tmp_path, "f1,label\n1,g\n2,g\n")
        with pytest.raises(SingleClassError):
            load_csv(path, label_column="label", positive_label="g")

    def test_missing_positive_label_rejected(self, tmp_path):
        path = write_csv(tmp_path, "f1,label\n1,a\n2,b\n")
        with pytest.raises(SingleClassError):
            load_csv(path, label_column="label", positive_label="g")

    def test_blank_cell_drops_row_and_reports(self, tmp_path):
        path = write_csv(tmp_path, "f1,f2,label\n1,2,g\n3,,g\n5,6,b\n")
        ds, report = load_csv(path, label_column="label", positive_label="g")
        assert ds.n_samples == 2
        assert report.rows_rejected == 1
        assert "1 rows rejected" in str(report)

    def test_non_numeric_cell_drops_row(self, tmp_path):
        path = write_csv(tmp_path, "f1,label\n1,g\noops,g\n2,b\n")
        ds, report = load_csv(path, label_column="label", positive_label="g")
        assert ds.n_samples == 2
        assert report.rows_rejected == 1

    def test_unknown_label_column(self, tmp_path):
        path = write_csv(tmp_path, "f1,label\n1,g\n")
        with pytest.raises(ParseError):
            load_csv(path, label_column="target", positive_label="g")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(tmp_path / "absent.csv", label_column="label", positive_label="g")

    def test_extra_label_values_collapse_to_negative(self, tmp_path):
        path = write_csv(tmp_path, "f1,label\n1,g\n2,b\n3,c\n")
        ds, _ = load_csv(path, label_column="label", positive_label="g")
        assert ds.labels.tolist() == [0, 1, 1]


class TestImbalanceRatio:
    def test_balanced(self):
        ds = Dataset(np.zeros((200, 1)), np.repeat([0, 1], 100), 2)
        assert imbalance_ratio(ds) == pytest.approx(1.00, abs=1e-12)

    def test_moderate_imbalance(self):
        ds = Dataset(np.zeros((683, 1)), np.repeat([0, 1], [239, 444]), 2)
        assert round(imbalance_ratio(ds), 2) == 1.86

    def test_two_to_one(self):
        ds = Dataset(np.zeros((15, 1)), np.repeat([0, 1], [10, 5]), 2)
        assert imbalance_ratio(ds) == 2.0

    def test_single_class(self):
        ds = Dataset(np.zeros((4, 1)), np.zeros(4, dtype=int), 2)
        with pytest.raises(SingleClassError):
            imbalance_ratio(ds)


class TestStratifiedSplit:
    def test_exact_division(self):
        ds = Dataset(np.zeros((200, 1)), np.repeat([0, 1], 100), 2)
        splits = stratified_split(ds, (0.5, 0.25, 0.25), seed=3)
        assert splits.sizes() == {"train": 100, "valid": 50, "test": 50}
        for cls in (0, 1):
            assert np.sum(ds.labels[splits.train] == cls) == 50
            assert np.sum(ds.labels[splits.validation] == cls) == 25
            assert np.sum(ds.labels[splits.test] == cls) == 25

    def test_deterministic_per_seed(self):
        ds = Dataset(np.zeros((57, 1)), np.repeat([0, 1], [30, 27]), 2)
        a = stratified_split(ds, (0.5, 0.25, 0.25), seed=9)
        b = stratified_split(ds, (0.5, 0.25, 0.25), seed=9)
        np.testing.assert_array_equal(a.train, b.train)
        np.testing.assert_array_equal(a.validation, b.validation)
        np.testing.assert_array_equal(a.test, b.test)

    def test_small_minority_boundary_rounding(self):
        ds = Dataset(np.zeros((10, 1)), np.repeat([0, 1], [7, 3]), 2)
        splits = stratified_split(ds, (0.5, 0.25, 0.25), seed=0)
        minority = lambda idx: int(np.sum(ds.labels[idx] == 1))
        assert (minority(splits.train), minority(splits.validation), minority(splits.test)) == (2, 0, 1)

    def test_invalid_fractions(self):
        ds = Dataset(np.zeros((10, 1)), np.repeat([0, 1], 5), 2)
        with pytest.raises(InvalidFractionsError):
            stratified_split(ds, (0.5, 0.6, 0.4), seed=0)
        with pytest.raises(InvalidFractionsError):
            stratified_split(ds, (1.0, 0.0, 0.0), seed=0)

    def test_class_too_small(self):
        ds = Dataset(np.zeros((101, 1)), np.repeat([0, 1], [100, 1]), 2)
        with pytest.raises(ClassTooSmallError):
            stratified_split(ds, (0.1, 0.45, 0.45), seed=0)

    @given(
        st.integers(min_value=2, max_value=80),
        st.integers(min_value=2, max_value=80),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    @settings(max_examples=200, deadline=None)
    def test_partition_and_proportion_properties(self, n0, n1, seed):
        ds = Dataset(np.zeros((n0 + n1, 1)), np.repeat([0, 1], [n0, n1]), 2)
        fractions = (0.5, 0.25, 0.25)
        splits = stratified_split(ds, fractions, seed=seed)
        merged = np.concatenate([splits.train, splits.validation, splits.test])
        assert merged.size == ds.n_samples
        np.testing.assert_array_equal(np.sort(merged), np.arange(ds.n_samples))
        for cls, n_cls in ((0, n0), (1, n1)):
            assert np.sum(ds.labels[splits.train] == cls) >= 1
            for part, frac in ((splits.train, 0.5), (splits.validation, 0.25), (splits.test, 0.25)):
                got = np.sum(ds.labels[part] == cls)
                assert abs(got - n_cls * frac) <= 1.0


class TestAddNoise:
    def test_zero_level_is_identical(self):
        ds = data.make_two_gaussians(50, seed=1)
        out = add_noise(ds, 0.0, seed=99)
        assert out.features is ds.features

    def test_zero_column_unchanged(self):
        features = np.column_stack([np.zeros(40), np.ones(40)])
        ds = Dataset(features, np.repeat([0, 1], 20), 2)
        out = add_noise(ds, 0.05, seed=4)
        np.testing.assert_array_equal(out.features[:, 0], 0.0)
        assert not np.array_equal(out.features[:, 1], ds.features[:, 1])

    def test_noise_scale_follows_column_rms(self):
        # column values 3 and 4 -> rms = sqrt((9 + 16) / 2) = sqrt(12.5)
        expected_std = 0.01 * np.sqrt(12.5)
        assert expected_std == pytest.approx(0.03536, abs=1e-5)
        reps = 100_000
        features = np.tile([[3.0], [4.0]], (reps // 2, 1))
        ds = Dataset(features, np.tile([0, 1], reps // 2), 2)
        out = add_noise(ds, 0.01, seed=7)
        observed = np.std(out.features - ds.features)
        assert observed == pytest.approx(expected_std, rel=0.02)

    def test_deterministic_per_seed(self):
        ds = data.make_two_gaussians(30, seed=2)
        a = add_noise(ds, 0.05, seed=5)
        b = add_noise(ds, 0.05, seed=5)
        np.testing.assert_array_equal(a.features, b.features)

    def test_negative_level_rejected(self):
        ds = data.make_two_gaussians(10, seed=0)
        with pytest.raises(ValueError):
            add_noise(ds, -0.1, seed=0)


class TestMakeTwoGaussians:
    def test_balanced_and_deterministic(self):
        a = data.make_two_gaussians(100, seed=5)
        b = data.make_two_gaussians(100, seed=5)
        assert np.bincount(a.labels).tolist() == [50, 50]
        np.testing.assert_array_equal(a.features, b.features)

    def test_class_zero_sits_on_positive_side(self):
        ds = data.make_two_gaussians(400, center=3.0, sigma=0.3, seed=8)
        assert ds.features[ds.labels == 0].mean() > 2.0
        assert ds.features[ds.labels == 1].mean() < -2.0
