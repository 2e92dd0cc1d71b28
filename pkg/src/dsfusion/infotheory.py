"""Discrete entropy, conditional entropy, and mutual information in bits.

Mutual information between a classifier's predicted labels and the true
labels ("relevancy") is the ranking criterion for pool members.  All
quantities use the empirical plug-in estimate with base-2 logarithms;
the base cancels in the ranking anyway.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyInputError, LengthMismatchError


def _check_labels(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.size == 0:
        raise EmptyInputError("need at least one label")
    return arr


def entropy(labels) -> float:
    """Shannon entropy H = -sum p log2 p of the empirical label distribution."""
    arr = _check_labels(labels)
    _, counts = np.unique(arr, return_counts=True)
    p = counts / arr.size
    return float(-(p * np.log2(p)).sum())


def joint_counts(x, z) -> np.ndarray:
    """Empirical joint count table over (x value, z value)."""
    x = _check_labels(x)
    z = _check_labels(z)
    if x.shape != z.shape:
        raise LengthMismatchError(f"x has {x.size} labels, z has {z.size}")
    _, xi = np.unique(x, return_inverse=True)
    _, zi = np.unique(z, return_inverse=True)
    table = np.zeros((xi.max() + 1, zi.max() + 1), dtype=np.int64)
    np.add.at(table, (xi, zi), 1)
    return table


def conditional_entropy(z, x) -> float:
    """H(Z | X) from the empirical joint: -sum p(x,z) log2 p(z|x)."""
    table = joint_counts(x, z)
    n = table.sum()
    joint = table / n
    marginal_x = joint.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(marginal_x > 0, joint / marginal_x, 0.0)
        terms = np.where(joint > 0, joint * np.log2(cond), 0.0)
    return float(-terms.sum())


def mutual_information(pred, target) -> float:
    """MI(pred; target) = H(target) - H(target | pred), in bits.

    Clamped at zero: the plug-in estimate can dip a hair below zero
    through rounding.
    """
    value = entropy(target) - conditional_entropy(target, pred)
    return max(value, 0.0)


def rank_by_relevancy(mi_values) -> np.ndarray:
    """Ranks (1 = most relevant) for a vector of MI values.

    Descending MI; ties keep the original pool order, so an earlier
    classifier outranks a later one with equal MI.
    """
    mi = np.asarray(mi_values, dtype=np.float64)
    if mi.size == 0:
        raise EmptyInputError("need at least one value to rank")
    order = np.argsort(-mi, kind="stable")
    ranks = np.empty(mi.size, dtype=np.int64)
    ranks[order] = np.arange(1, mi.size + 1)
    return ranks
