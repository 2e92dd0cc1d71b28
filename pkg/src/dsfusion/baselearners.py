"""Pool of base classifiers and their cross-validated confusion matrices.

Four learner families are built in: CART decision tree, Gaussian naive
Bayes, linear discriminant, and k-nearest neighbors.  Anything more
exotic enters the pool as an external score file: the pipeline only ever
consumes per-classifier score matrices, so the provenance of the scores
does not matter.

Every learner emits row-stochastic class-membership scores; the hard
label of a sample is the argmax of its score row.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import csv

import numpy as np
from scipy.spatial.distance import cdist

from . import metrics
from .errors import (
    ExternalScoresMissingError,
    NonStochasticRowError,
    ParseError,
    RowCountMismatchError,
    TooFewSamplesError,
    WidthMismatchError,
)
from .metrics import ConfusionMatrix

ROW_SUM_TOL = 1e-6          # built-in learners must hit this
EXTERNAL_REPAIR_TOL = 1e-3  # external rows further off than this are rejected

SPLIT_NAMES = ("train", "valid", "test")


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Per-sample class-membership scores; rows sum to 1."""

    values: np.ndarray
    classifier_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise NonStochasticRowError(f"scores must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonStochasticRowError("scores contain non-finite entries")
        sums = arr.sum(axis=1)
        if arr.shape[0] and np.max(np.abs(sums - 1.0)) > ROW_SUM_TOL:
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise NonStochasticRowError(
                f"row {worst} sums to {sums[worst]!r}, expected 1 within {ROW_SUM_TOL}"
            )
        object.__setattr__(self, "values", arr)

    @property
    def n_samples(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.values.shape[1])

    def hard_labels(self) -> np.ndarray:
        return np.argmax(self.values, axis=1)


def hard_labels(scores) -> np.ndarray:
    values = scores.values if isinstance(scores, ScoreMatrix) else np.asarray(scores)
    return np.argmax(values, axis=1)


class Standardizer:
    """Zero-mean unit-variance transform fitted on training features."""

    def fit(self, features: np.ndarray) -> "Standardizer":
        self.mean_ = features.mean(axis=0)
        std = features.std(axis=0)
        std[std == 0.0] = 1.0  # constant columns pass through unscaled
        self.std_ = std
        return self

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean_) / self.std_


def _check_width(features: np.ndarray, expected: int) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != expected:
        raise WidthMismatchError(
            f"feature matrix has width {features.shape[-1] if features.ndim == 2 else '?'}, "
            f"fit saw {expected}"
        )
    return features


class KNearestNeighbors:
    """Standardized Euclidean k-NN; scores are neighbor class fractions."""

    def __init__(self, k: int):
        self.k = k

    def fit(self, features, labels, n_classes: int):
        features = np.asarray(features, dtype=np.float64)
        self.n_features_ = features.shape[1]
        self.n_classes_ = n_classes
        self.scaler_ = Standardizer().fit(features)
        self.train_ = self.scaler_.transform(features)
        self.labels_ = np.asarray(labels, dtype=np.int64)
        return self

    def predict_scores(self, features) -> np.ndarray:
        features = _check_width(features, self.n_features_)
        query = self.scaler_.transform(features)
        distances = cdist(query, self.train_, metric="sqeuclidean")
        k = min(self.k, self.train_.shape[0])
        neighbors = np.argsort(distances, axis=1, kind="stable")[:, :k]
        neighbor_labels = self.labels_[neighbors]
        scores = np.zeros((features.shape[0], self.n_classes_))
        for cls in range(self.n_classes_):
            scores[:, cls] = np.sum(neighbor_labels == cls, axis=1) / k
        return scores


class GaussianNaiveBayes:
    """Per-class diagonal Gaussians on standardized features."""

    VAR_FLOOR = 1e-9  # variances are O(1) after standardization

    def fit(self, features, labels, n_classes: int):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        self.n_features_ = features.shape[1]
        self.n_classes_ = n_classes
        self.scaler_ = Standardizer().fit(features)
        x = self.scaler_.transform(features)
        self.present_ = np.array([np.any(labels == c) for c in range(n_classes)])
        self.priors_ = np.array([np.mean(labels == c) for c in range(n_classes)])
        self.means_ = np.zeros((n_classes, self.n_features_))
        self.vars_ = np.ones((n_classes, self.n_features_))
        for cls in np.flatnonzero(self.present_):
            rows = x[labels == cls]
            self.means_[cls] = rows.mean(axis=0)
            self.vars_[cls] = rows.var(axis=0) + self.VAR_FLOOR
        return self

    def predict_scores(self, features) -> np.ndarray:
        features = _check_width(features, self.n_features_)
        x = self.scaler_.transform(features)
        log_post = np.full((x.shape[0], self.n_classes_), -np.inf)
        for cls in np.flatnonzero(self.present_):
            diff = x - self.means_[cls]
            log_lik = -0.5 * np.sum(
                np.log(2.0 * np.pi * self.vars_[cls]) + diff**2 / self.vars_[cls], axis=1
            )
            log_post[:, cls] = log_lik + np.log(self.priors_[cls])
        return _softmax_rows(log_post)


class LinearDiscriminant:
    """Shared-covariance Gaussian discriminant on standardized features.

    The pooled covariance gets a ridge of 1e-6 * trace / n_features on its
    diagonal so near-singular small-sample estimates stay invertible.
    """

    RIDGE = 1e-6

    def fit(self, features, labels, n_classes: int):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        self.n_features_ = features.shape[1]
        self.n_classes_ = n_classes
        self.scaler_ = Standardizer().fit(features)
        x = self.scaler_.transform(features)
        d = self.n_features_
        self.present_ = np.array([np.any(labels == c) for c in range(n_classes)])
        self.priors_ = np.array([np.mean(labels == c) for c in range(n_classes)])
        self.means_ = np.zeros((n_classes, d))
        pooled = np.zeros((d, d))
        for cls in np.flatnonzero(self.present_):
            rows = x[labels == cls]
            self.means_[cls] = rows.mean(axis=0)
            centered = rows - self.means_[cls]
            pooled += centered.T @ centered
        denom = max(x.shape[0] - int(self.present_.sum()), 1)
        pooled /= denom
        ridge = self.RIDGE * np.trace(pooled) / d
        if ridge <= 0.0:
            ridge = self.RIDGE
        pooled[np.diag_indices(d)] += ridge
        self.precision_ = np.linalg.inv(pooled)
        return self

    def predict_scores(self, features) -> np.ndarray:
        features = _check_width(features, self.n_features_)
        x = self.scaler_.transform(features)
        log_post = np.full((x.shape[0], self.n_classes_), -np.inf)
        for cls in np.flatnonzero(self.present_):
            mu = self.means_[cls]
            w = self.precision_ @ mu
            log_post[:, cls] = x @ w - 0.5 * mu @ w + np.log(self.priors_[cls])
        return _softmax_rows(log_post)


def _softmax_rows(log_values: np.ndarray) -> np.ndarray:
    peak = log_values.max(axis=1, keepdims=True)
    shifted = np.where(np.isfinite(log_values), log_values - peak, -np.inf)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


class DecisionTree:
    """Binary CART with Gini impurity and deterministic midpoint thresholds."""

    def __init__(self, max_depth: int = 8, min_leaf: int = 2):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def fit(self, features, labels, n_classes: int):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        self.n_features_ = features.shape[1]
        self.n_classes_ = n_classes
        self.root_ = self._grow(features, labels, depth=0)
        return self

    def _leaf(self, labels):
        counts = np.bincount(labels, minlength=self.n_classes_)
        return {"scores": counts / counts.sum()}

    def _grow(self, features, labels, depth):
        n = labels.size
        if depth >= self.max_depth or n < 2 * self.min_leaf or np.all(labels == labels[0]):
            return self._leaf(labels)
        split = self._best_split(features, labels)
        if split is None:
            return self._leaf(labels)
        feature, threshold = split
        mask = features[:, feature] <= threshold
        return {
            "feature": feature,
            "threshold": threshold,
            "left": self._grow(features[mask], labels[mask], depth + 1),
            "right": self._grow(features[~mask], labels[~mask], depth + 1),
        }

    def _best_split(self, features, labels):
        n = labels.size
        onehot = np.zeros((n, self.n_classes_))
        onehot[np.arange(n), labels] = 1.0
        total = onehot.sum(axis=0)
        parent_gini = 1.0 - np.sum((total / n) ** 2)
        best = None
        best_gain = 1e-12  # require a strict impurity decrease
        positions = np.arange(1, n)
        for feature in range(features.shape[1]):
            order = np.argsort(features[:, feature], kind="stable")
            xs = features[order, feature]
            left = np.cumsum(onehot[order], axis=0)[:-1]
            left_n = positions
            right = total - left
            right_n = n - left_n
            gini_left = 1.0 - np.sum((left / left_n[:, None]) ** 2, axis=1)
            gini_right = 1.0 - np.sum((right / right_n[:, None]) ** 2, axis=1)
            weighted = (left_n * gini_left + right_n * gini_right) / n
            gain = parent_gini - weighted
            valid = (xs[1:] != xs[:-1]) & (left_n >= self.min_leaf) & (right_n >= self.min_leaf)
            if not np.any(valid):
                continue
            gain = np.where(valid, gain, -np.inf)
            pick = int(np.argmax(gain))
            if gain[pick] > best_gain:
                best_gain = gain[pick]
                best = (feature, (xs[pick] + xs[pick + 1]) / 2.0)
        return best

    def predict_scores(self, features) -> np.ndarray:
        features = _check_width(features, self.n_features_)
        out = np.zeros((features.shape[0], self.n_classes_))
        self._route(self.root_, features, np.arange(features.shape[0]), out)
        return out

    def _route(self, node, features, idx, out):
        if "scores" in node:
            out[idx] = node["scores"]
            return
        mask = features[idx, node["feature"]] <= node["threshold"]
        self._route(node["left"], features, idx[mask], out)
        self._route(node["right"], features, idx[~mask], out)


class ExternalScores:
    """Score matrices ingested from a file, one block per data split."""

    def __init__(self, by_split: dict[str, np.ndarray], classifier_id: str):
        self.by_split = by_split
        self.classifier_id = classifier_id

    def scores_for(self, split: str) -> np.ndarray:
        if split not in self.by_split:
            raise ExternalScoresMissingError(
                f"{self.classifier_id}: no scores for split {split!r}"
            )
        return self.by_split[split]


BUILTIN_KINDS = ("dt", "nb", "lda", "knn")


@dataclass(frozen=True)
class LearnerSpec:
    """One pool slot: a built-in learner config or an external score file."""

    kind: str
    name: str
    k: int = 0
    path: str | None = None


def builtin_pool(knn_ks=(5, 10, 15)) -> list[LearnerSpec]:
    pool = [
        LearnerSpec("dt", "dt"),
        LearnerSpec("nb", "nb"),
        LearnerSpec("lda", "lda"),
    ]
    pool += [LearnerSpec("knn", f"{k}nn", k=k) for k in knn_ks]
    return pool


EXTERNAL_SLOT_NAMES = ("mcs", "svd1", "svd5", "svm", "nn")


def default_pool(external_paths: dict[str, str] | None = None, knn_ks=(5, 10, 15)) -> list[LearnerSpec]:
    """The standard 11-slot pool: 6 built-ins plus 5 external score slots."""
    external_paths = external_paths or {}
    pool = builtin_pool(knn_ks)
    pool += [
        LearnerSpec("external", name, path=external_paths.get(name))
        for name in EXTERNAL_SLOT_NAMES
    ]
    return pool


@dataclass(eq=False)
class TrainedClassifier:
    spec: LearnerSpec
    model: object
    cv_confusion: ConfusionMatrix
    n_features: int

    @property
    def name(self) -> str:
        return self.spec.name

    def predict_scores(self, features=None, split: str | None = None) -> ScoreMatrix:
        """Scores for a feature matrix (built-ins) or a named split (externals).

        External slots carry fixed per-split matrices.  When ``split`` is
        omitted for one, the row count of ``features`` must match exactly
        one stored split.
        """
        if isinstance(self.model, ExternalScores):
            if split is None:
                if features is None:
                    raise ExternalScoresMissingError(
                        f"{self.name}: need a split name or features to match against"
                    )
                n = np.asarray(features).shape[0]
                hits = [s for s, v in self.model.by_split.items() if v.shape[0] == n]
                if len(hits) != 1:
                    raise RowCountMismatchError(
                        f"{self.name}: {n} rows match splits {hits}; pass split= explicitly"
                    )
                split = hits[0]
            return ScoreMatrix(self.model.scores_for(split), self.name)
        if features is None:
            raise WidthMismatchError(f"{self.name}: features are required")
        return ScoreMatrix(self.model.predict_scores(features), self.name)


def _make_model(spec: LearnerSpec):
    if spec.kind == "dt":
        return DecisionTree()
    if spec.kind == "nb":
        return GaussianNaiveBayes()
    if spec.kind == "lda":
        return LinearDiscriminant()
    if spec.kind == "knn":
        return KNearestNeighbors(spec.k)
    raise ValueError(f"unknown learner kind {spec.kind!r}")


def stratified_fold_assignment(labels: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Per-class round-robin fold labels, shuffled deterministically."""
    rng = np.random.default_rng(seed)
    folds = np.empty(labels.size, dtype=np.int64)
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        folds[idx] = np.arange(idx.size) % n_folds
    return folds


def out_of_fold_labels(
    spec: LearnerSpec, features, labels, n_classes: int, folds: np.ndarray
) -> np.ndarray:
    """Hard labels for every sample, predicted by a model that never saw it."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.empty(labels.size, dtype=np.int64)
    for fold in np.unique(folds):
        held = folds == fold
        model = _make_model(spec).fit(features[~held], labels[~held], n_classes)
        predictions[held] = hard_labels(model.predict_scores(features[held]))
    return predictions


def fit(
    pool: list[LearnerSpec],
    train_features,
    train_labels,
    seed: int = 0,
    n_folds: int = 10,
    split_sizes: dict[str, int] | None = None,
) -> list[TrainedClassifier]:
    """Fit every pool slot and attach its out-of-fold confusion matrix.

    Built-ins are fitted on the full training split; their confusion
    matrices come from ``n_folds``-fold out-of-fold predictions.  External
    slots are loaded from their score files (training-split scores stand in
    for out-of-fold predictions, since the file carries no fold structure).
    """
    features = np.asarray(train_features, dtype=np.float64)
    labels = np.asarray(train_labels, dtype=np.int64)
    if labels.size < n_folds:
        raise TooFewSamplesError(
            f"{labels.size} training samples cannot support {n_folds}-fold CV"
        )
    n_classes = int(labels.max()) + 1 if labels.size else 2
    n_classes = max(n_classes, 2)
    folds = stratified_fold_assignment(labels, n_folds, seed)
    trained = []
    for spec in pool:
        if spec.kind == "external":
            if spec.path is None or not Path(spec.path).exists():
                raise ExternalScoresMissingError(
                    f"pool slot {spec.name!r} needs a score file, got {spec.path!r}"
                )
            if split_sizes is None:
                raise RowCountMismatchError(
                    f"pool slot {spec.name!r}: split sizes are required to load scores"
                )
            by_split = load_external_scores(spec.path, split_sizes)
            model = ExternalScores(
                {s: m.values for s, m in by_split.items()}, spec.name
            )
            cv_pred = hard_labels(model.scores_for("train"))
        else:
            model = _make_model(spec).fit(features, labels, n_classes)
            cv_pred = out_of_fold_labels(spec, features, labels, n_classes, folds)
        cm = metrics.confusion(cv_pred, labels, positive_class=0)
        trained.append(
            TrainedClassifier(spec, model, cm, n_features=features.shape[1])
        )
    return trained


def load_external_scores(path, split_sizes: dict[str, int]) -> dict[str, ScoreMatrix]:
    """Parse a per-split score file.

    Format: header ``split,row,score_0,...,score_{K-1}``; ``split`` one of
    train/valid/test; ``row`` indices 0-based and contiguous within each
    split.  Rows off stochastic by more than ``EXTERNAL_REPAIR_TOL`` are
    rejected; smaller drift is renormalized away.
    """
    path = Path(path)
    if not path.exists():
        raise ExternalScoresMissingError(f"score file {path} does not exist")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        if header[:2] != ["split", "row"] or len(header) < 4:
            raise ParseError(f"{path}: expected header split,row,score_0,..., got {header}")
        n_classes = len(header) - 2
        rows: dict[str, dict[int, np.ndarray]] = {s: {} for s in SPLIT_NAMES}
        for line_no, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise ParseError(f"{path}:{line_no}: expected {len(header)} cells")
            split = cells[0].strip()
            if split not in rows:
                raise ParseError(f"{path}:{line_no}: unknown split {split!r}")
            try:
                row = int(cells[1])
                scores = np.array([float(c) for c in cells[2:]])
            except ValueError as err:
                raise ParseError(f"{path}:{line_no}: {err}") from None
            if row in rows[split]:
                raise ParseError(f"{path}:{line_no}: duplicate row {row} in {split}")
            if np.any(scores < 0) or abs(scores.sum() - 1.0) > EXTERNAL_REPAIR_TOL:
                raise NonStochasticRowError(
                    f"{path}:{line_no}: row sums to {scores.sum()!r}"
                )
            rows[split][row] = scores / scores.sum()

    out = {}
    for split, expected in split_sizes.items():
        got = rows.get(split, {})
        if len(got) != expected:
            raise RowCountMismatchError(
                f"{path}: split {split!r} has {len(got)} rows, expected {expected}"
            )
        if got and (min(got) != 0 or max(got) != expected - 1):
            raise ParseError(f"{path}: split {split!r} rows are not contiguous from 0")
        matrix = np.zeros((expected, n_classes))
        for row, scores in got.items():
            matrix[row] = scores
        out[split] = ScoreMatrix(matrix, path.stem)
    return out
