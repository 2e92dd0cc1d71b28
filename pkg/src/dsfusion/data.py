"""Dataset ingestion, stratified splitting, and feature-noise pollution.

Binary convention throughout: class 0 is the positive/"good" class and
class 1 the negative one.  CSV loading binarizes the label column around
a caller-chosen positive value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ClassTooSmallError,
    InvalidFractionsError,
    ParseError,
    SingleClassError,
)


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint train/validation/test index arrays covering all samples."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def sizes(self) -> dict[str, int]:
        return {
            "train": int(self.train.size),
            "valid": int(self.validation.size),
            "test": int(self.test.size),
        }


@dataclass(frozen=True)
class CsvLoadReport:
    rows_read: int
    rows_rejected: int

    def __str__(self) -> str:
        return f"{self.rows_read} rows read, {self.rows_rejected} rows rejected"


def load_csv(
    path, label_column: str, positive_label: str
) -> tuple[Dataset, CsvLoadReport]:
    """Load a CSV with one label column and numeric features elsewhere.

    Rows with blank or non-numeric feature cells are dropped and counted
    in the returned report.  Labels equal to ``positive_label`` map to
    class 0, everything else to class 1.
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as err:
        raise ParseError(f"cannot open {path}: {err}") from err
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ParseError(f"label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        feature_idx = [i for i in range(len(header)) if i != label_idx]
        if not feature_idx:
            raise ParseError("no feature columns besides the label")

        rows, labels = [], []
        rejected = 0
        total = 0
        for line_no, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            total += 1
            if len(cells) != len(header):
                rejected += 1
                continue
            try:
                values = [float(cells[i]) for i in feature_idx]
            except ValueError:
                rejected += 1
                continue
            if not all(np.isfinite(values)):
                rejected += 1
                continue
            rows.append(values)
            labels.append(cells[label_idx].strip())

    if not rows:
        raise ParseError(f"{path}: no usable rows ({rejected} rejected)")
    distinct = set(labels)
    if positive_label not in distinct or len(distinct) < 2:
        raise SingleClassError(
            f"{path}: need the positive label {positive_label!r} plus at least one other, "
            f"found {sorted(distinct)}"
        )
    mapped = np.array([0 if lab == positive_label else 1 for lab in labels], dtype=np.int64)
    dataset = Dataset(np.array(rows), mapped, n_classes=2, name=path.stem)
    return dataset, CsvLoadReport(rows_read=total, rows_rejected=rejected)


def imbalance_ratio(ds: Dataset) -> float:
    """Majority-class count over minority-class count."""
    counts = np.bincount(ds.labels, minlength=ds.n_classes)
    if np.any(counts == 0):
        raise SingleClassError(f"class counts {counts.tolist()} include an empty class")
    return float(counts.max() / counts.min())


def stratified_split(ds: Dataset, fractions, seed: int) -> SplitIndices:
    """Shuffle each class and cut it at the rounded cumulative boundaries.

    Every class contributes to each split in proportion to the requested
    fractions (off by at most one sample from the exact share); the train
    boundary absorbs rounding leftovers first.  Deterministic per seed.
    """
    f_train, f_valid, f_test = (float(f) for f in fractions)
    if min(f_train, f_valid, f_test) <= 0 or abs(f_train + f_valid + f_test - 1.0) > 1e-9:
        raise InvalidFractionsError(f"fractions {fractions} must be positive and sum to 1")
    rng = np.random.default_rng(seed)
    train, valid, test = [], [], []
    for cls in range(ds.n_classes):
        idx = np.flatnonzero(ds.labels == cls)
        idx = rng.permutation(idx)
        n = idx.size
        cut1 = int(round(n * f_train))
        cut2 = int(round(n * (f_train + f_valid)))
        cut1 = min(cut1, n)
        cut2 = min(max(cut2, cut1), n)
        if cut1 == 0:
            raise ClassTooSmallError(
                f"class {cls} has {n} samples; none would reach the training split"
            )
        train.append(idx[:cut1])
        valid.append(idx[cut1:cut2])
        test.append(idx[cut2:])
    return SplitIndices(
        train=np.sort(np.concatenate(train)),
        validation=np.sort(np.concatenate(valid)),
        test=np.sort(np.concatenate(test)),
    )


def add_noise(ds: Dataset, nsr: float, seed: int) -> Dataset:
    """Pollute every feature with Gaussian noise scaled to its RMS value.

    Noise for column ``f`` has standard deviation ``nsr * rms(f)`` with
    ``rms(f) = sqrt(mean(f^2))`` taken over the clean column, so constant
    zero columns stay untouched.  ``nsr = 0`` returns the dataset as is.
    """
    if nsr < 0:
        raise ValueError(f"noise-to-signal ratio must be >= 0, got {nsr}")
    if nsr == 0.0:
        return ds
    rng = np.random.default_rng(seed)
    rms = np.sqrt(np.mean(ds.features**2, axis=0))
    noise = rng.standard_normal(ds.features.shape) * (nsr * rms)[None, :]
    return Dataset(ds.features + noise, ds.labels, ds.n_classes, ds.name)


def make_two_gaussians(
    n_samples: int,
    center: float = 1.5,
    sigma: float = 1.0,
    n_features: int = 2,
    seed: int = 0,
    name: str = "two-gaussians",
) -> Dataset:
    """Balanced binary blobs at +-center on every axis; class 0 on the + side."""
    rng = np.random.default_rng(seed)
    half = n_samples // 2
    pos = rng.normal(center, sigma, size=(half, n_features))
    neg = rng.normal(-center, sigma, size=(n_samples - half, n_features))
    features = np.vstack([pos, neg])
    labels = np.concatenate([np.zeros(half, dtype=np.int64), np.ones(n_samples - half, dtype=np.int64)])
    order = rng.permutation(n_samples)
    return Dataset(features[order], labels[order], n_classes=2, name=name)
