"""Binary confusion matrix and the scalar rates derived from it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatchError, NonBinaryTaskError, UndefinedRateError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with the positive ("good") class on the first axis cell."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(pred, truth, positive_class: int = 0) -> ConfusionMatrix:
    """Count TP/FP/FN/TN for a binary task.

    ``positive_class`` selects which label index counts as positive;
    class 0 is the conventional "good" outcome.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise LengthMismatchError(f"pred has {pred.size} labels, truth has {truth.size}")
    labels = np.union1d(pred, truth)
    if labels.size and (labels.min() < 0 or labels.max() > 1):
        raise NonBinaryTaskError(f"labels outside {{0, 1}}: {labels.tolist()}")
    pred_pos = pred == positive_class
    truth_pos = truth == positive_class
    return ConfusionMatrix(
        tp=int(np.sum(pred_pos & truth_pos)),
        fp=int(np.sum(pred_pos & ~truth_pos)),
        fn=int(np.sum(~pred_pos & truth_pos)),
        tn=int(np.sum(~pred_pos & ~truth_pos)),
    )


def _rate(numerator: int, denominator: int, name: str) -> float:
    if denominator == 0:
        raise UndefinedRateError(f"{name} undefined: zero denominator")
    return numerator / denominator


def accuracy(cm: ConfusionMatrix) -> float:
    """Fraction of samples classified correctly."""
    return _rate(cm.tp + cm.tn, cm.total, "accuracy")


def sensitivity(cm: ConfusionMatrix) -> float:
    """Accuracy on the positive class: TP / (TP + FN)."""
    return _rate(cm.tp, cm.tp + cm.fn, "sensitivity")


def specificity(cm: ConfusionMatrix) -> float:
    """Accuracy on the negative class: TN / (TN + FP)."""
    return _rate(cm.tn, cm.tn + cm.fp, "specificity")


def ppv(cm: ConfusionMatrix) -> float:
    """Positive predictive value: TP / (TP + FP)."""
    return _rate(cm.tp, cm.tp + cm.fp, "ppv")


def npv(cm: ConfusionMatrix) -> float:
    """Negative predictive value: TN / (TN + FN)."""
    return _rate(cm.tn, cm.tn + cm.fn, "npv")
