import numpy as np
import pytest

from dsfusion import data
from dsfusion.baselearners import (
    DecisionTree,
    GaussianNaiveBayes,
    KNearestNeighbors,
    LearnerSpec,
    LinearDiscriminant,
    ScoreMatrix,
    builtin_pool,
    default_pool,
    fit,
    load_external_scores,
)
from dsfusion.errors import (
    ExternalScoresMissingError,
    NonStochasticRowError,
    ParseError,
    RowCountMismatchError,
    TooFewSamplesError,
    WidthMismatchError,
)


def toy_dataset(n=60, seed=0):
    return data.make_two_gaussians(n, center=2.0, sigma=0.6, seed=seed)


class TestScoreMatrix:
    def test_rejects_non_stochastic_rows(self):
        with pytest.raises(NonStochasticRowError):
            ScoreMatrix(np.array([[0.7, 0.7]]))

    def test_accepts_within_tolerance(self):
        sm = ScoreMatrix(np.array([[0.5, 0.5], [1.0, 0.0]]))
        assert sm.hard_labels().tolist() == [0, 0]


class TestKNearestNeighbors:
    def test_one_nn_reproduces_training_labels(self):
        ds = toy_dataset()
        model = KNearestNeighbors(1).fit(ds.features, ds.labels, 2)
        scores = model.predict_scores(ds.features)
        assert np.array_equal(np.argmax(scores, axis=1), ds.labels)

    def test_two_point_set_decides_by_distance(self):
        model = KNearestNeighbors(1).fit(np.array([[0.0], [1.0]]), np.array([0, 1]), 2)
        scores = model.predict_scores(np.array([[0.1]]))
        np.testing.assert_array_equal(scores, [[1.0, 0.0]])

    def test_neighbor_class_fractions(self):
        x = np.array([[1.0], [2.0], [3.0], [4.0], [5.0]])
        y = np.array([0, 0, 0, 1, 1])
        model = KNearestNeighbors(5).fit(x, y, 2)
        scores = model.predict_scores(np.array([[2.5]]))
        np.testing.assert_allclose(scores, [[0.6, 0.4]])

    def test_width_mismatch(self):
        ds = toy_dataset()
        model = KNearestNeighbors(3).fit(ds.features, ds.labels, 2)
        with pytest.raises(WidthMismatchError):
            model.predict_scores(np.zeros((2, 5)))


class TestGaussianNaiveBayes:
    def test_symmetric_classes_give_even_scores(self):
        x = np.array([[0.5], [1.5], [-0.5], [-1.5]])
        y = np.array([0, 0, 1, 1])
        model = GaussianNaiveBayes().fit(x, y, 2)
        scores = model.predict_scores(np.array([[0.0]]))
        np.testing.assert_allclose(scores, [[0.5, 0.5]], atol=1e-12)

    def test_affine_feature_rescaling_is_invariant(self):
        ds = toy_dataset(seed=3)
        model = GaussianNaiveBayes().fit(ds.features, ds.labels, 2)
        base = model.predict_scores(ds.features)
        rescaled = ds.features.copy()
        rescaled[:, 1] = rescaled[:, 1] * 3.7 - 2.1
        other = GaussianNaiveBayes().fit(rescaled, ds.labels, 2)
        query = ds.features.copy()
        query[:, 1] = query[:, 1] * 3.7 - 2.1
        np.testing.assert_allclose(other.predict_scores(query), base, atol=1e-9)


class TestLinearDiscriminant:
    def test_separable_blobs_classified(self):
        ds = toy_dataset(seed=5)
        model = LinearDiscriminant().fit(ds.features, ds.labels, 2)
        scores = model.predict_scores(ds.features)
        assert np.mean(np.argmax(scores, axis=1) == ds.labels) == 1.0

    def test_affine_feature_rescaling_is_invariant(self):
        ds = toy_dataset(seed=4)
        model = LinearDiscriminant().fit(ds.features, ds.labels, 2)
        base = model.predict_scores(ds.features)
        rescaled = ds.features.copy()
        rescaled[:, 0] = rescaled[:, 0] * -1.9 + 0.4
        other = LinearDiscriminant().fit(rescaled, ds.labels, 2)
        query = ds.features.copy()
        query[:, 0] = query[:, 0] * -1.9 + 0.4
        np.testing.assert_allclose(other.predict_scores(query), base, atol=1e-9)

    def test_duplicate_feature_columns_survive_regularization(self):
        ds = toy_dataset(seed=6)
        doubled = np.hstack([ds.features, ds.features[:, :1]])
        model = LinearDiscriminant().fit(doubled, ds.labels, 2)
        scores = model.predict_scores(doubled)
        assert np.all(np.isfinite(scores))


class TestDecisionTree:
    def test_pure_leaf_scores(self):
        x = np.array([[0.0], [0.1], [1.0], [1.1]])
        y = np.array([0, 0, 1, 1])
        model = DecisionTree(min_leaf=1).fit(x, y, 2)
        np.testing.assert_array_equal(model.predict_scores(np.array([[1.05]])), [[0.0, 1.0]])

    def test_threshold_is_midpoint(self):
        x = np.array([[0.0], [0.2], [1.0], [1.2]])
        y = np.array([0, 0, 1, 1])
        model = DecisionTree().fit(x, y, 2)
        assert model.root_["threshold"] == pytest.approx(0.6)

    def test_constant_labels_become_single_leaf(self):
        x = np.arange(10.0).reshape(-1, 1)
        model = DecisionTree().fit(x, np.zeros(10, dtype=int), 2)
        assert "scores" in model.root_
        np.testing.assert_array_equal(model.predict_scores(x), np.tile([1.0, 0.0], (10, 1)))

    def test_depth_limit_respected(self):
        rng = np.random.default_rng(0)
        x = rng.random((300, 3))
        y = (rng.random(300) > 0.5).astype(int)
        model = DecisionTree(max_depth=2).fit(x, y, 2)

        def depth(node):
            if "scores" in node:
                return 0
            return 1 + max(depth(node["left"]), depth(node["right"]))

        assert depth(model.root_) <= 2


class TestFitPool:
    def test_constant_labels_predict_that_label(self):
        x = np.arange(20.0).reshape(-1, 1)
        y = np.zeros(20, dtype=int)
        trained = fit(builtin_pool(), x, y, seed=1)
        for clf in trained:
            labels = clf.predict_scores(x).hard_labels()
            assert np.all(labels == 0), clf.name

    def test_cv_confusion_filled(self):
        ds = toy_dataset(n=80, seed=7)
        trained = fit(builtin_pool(), ds.features, ds.labels, seed=2)
        for clf in trained:
            assert clf.cv_confusion.total == ds.n_samples

    def test_deterministic_per_seed(self):
        ds = toy_dataset(n=60, seed=8)
        a = fit(builtin_pool(), ds.features, ds.labels, seed=5)
        b = fit(builtin_pool(), ds.features, ds.labels, seed=5)
        for ca, cb in zip(a, b):
            np.testing.assert_array_equal(
                ca.predict_scores(ds.features).values, cb.predict_scores(ds.features).values
            )
            assert ca.cv_confusion == cb.cv_confusion

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamplesError):
            fit(builtin_pool(), np.zeros((5, 1)), np.array([0, 1, 0, 1, 0]), seed=0)

    def test_scores_are_row_stochastic(self):
        ds = toy_dataset(n=50, seed=9)
        trained = fit(builtin_pool(), ds.features, ds.labels, seed=3)
        for clf in trained:
            sums = clf.predict_scores(ds.features).values.sum(axis=1)
            np.testing.assert_allclose(sums, 1.0, atol=1e-6)

    def test_missing_external_file_rejected(self):
        ds = toy_dataset(n=40, seed=1)
        pool = [LearnerSpec("external", "mcs", path=None)]
        with pytest.raises(ExternalScoresMissingError):
            fit(pool, ds.features, ds.labels, seed=0)

    def test_zero_variance_feature_is_harmless(self):
        ds = toy_dataset(n=40, seed=12)
        features = np.hstack([ds.features, np.full((ds.n_samples, 1), 7.0)])
        trained = fit(builtin_pool(), features, ds.labels, seed=1)
        for clf in trained:
            scores = clf.predict_scores(features).values
            assert np.all(np.isfinite(scores)), clf.name


def write_scores(tmp_path, lines, name="scores.csv"):
    path = tmp_path / name
    path.write_text("split,row,score_0,score_1\n" + "\n".join(lines) + "\n")
    return path


class TestExternalScores:
    sizes = {"train": 2, "valid": 1, "test": 1}

    def test_well_formed_file(self, tmp_path):
        path = write_scores(
            tmp_path,
            ["train,0,0.9,0.1", "train,1,0.2,0.8", "valid,0,0.6,0.4", "test,0,0.3,0.7"],
        )
        out = load_external_scores(path, self.sizes)
        assert set(out) == {"train", "valid", "test"}
        np.testing.assert_allclose(out["train"].values, [[0.9, 0.1], [0.2, 0.8]])

    def test_non_stochastic_row_rejected(self, tmp_path):
        path = write_scores(
            tmp_path,
            ["train,0,0.7,0.7", "train,1,0.2,0.8", "valid,0,0.6,0.4", "test,0,0.3,0.7"],
        )
        with pytest.raises(NonStochasticRowError):
            load_external_scores(path, self.sizes)

    def test_near_stochastic_row_renormalized(self, tmp_path):
        path = write_scores(
            tmp_path,
            ["train,0,0.69999,0.30002", "train,1,0.2,0.8", "valid,0,0.6,0.4", "test,0,1,0"],
        )
        out = load_external_scores(path, self.sizes)
        assert out["train"].values[0].sum() == pytest.approx(1.0, abs=1e-12)
        assert out["train"].values[0][0] == pytest.approx(0.69999 / 1.00001, abs=1e-9)

    def test_row_count_mismatch(self, tmp_path):
        path = write_scores(tmp_path, ["train,0,1,0", "valid,0,1,0", "test,0,1,0"])
        with pytest.raises(RowCountMismatchError):
            load_external_scores(path, self.sizes)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ParseError):
            load_external_scores(path, self.sizes)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ExternalScoresMissingError):
            load_external_scores(tmp_path / "none.csv", self.sizes)

    def test_fit_with_external_slot(self, tmp_path):
        ds = toy_dataset(n=20, seed=11)
        lines = [f"train,{i},1,0" if ds.labels[i] == 0 else f"train,{i},0,1" for i in range(20)]
        lines += ["valid,0,0.5,0.5", "test,0,0.5,0.5"]
        path = write_scores(tmp_path, lines)
        pool = builtin_pool() + [LearnerSpec("external", "svm", path=str(path))]
        trained = fit(
            pool,
            ds.features,
            ds.labels,
            seed=0,
            split_sizes={"train": 20, "valid": 1, "test": 1},
        )
        external = trained[-1]
        assert external.cv_confusion.tp + external.cv_confusion.tn == 20
        scores = external.predict_scores(split="train")
        assert np.array_equal(scores.hard_labels(), ds.labels)

    def test_default_pool_shape(self):
        pool = default_pool()
        assert len(pool) == 11
        assert [s.kind for s in pool[:6]] == ["dt", "nb", "lda", "knn", "knn", "knn"]
        assert all(s.kind == "external" for s in pool[6:])
