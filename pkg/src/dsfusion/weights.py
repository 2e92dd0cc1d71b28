"""Per-class weighting vectors derived from a classifier's confusion matrix.

Six schemes are supported for binary tasks:

    w0  [1, 1]                unweighted
    w1  [Acc, Acc]            overall accuracy on both classes
    w2  [Sns, Spc]            per-class accuracies
    w3  [PPV, NPV]            predictive values
    w4  w2 (+) w3             Dempster combination of w2 and w3
    w5  w1 (+) w2             Dempster combination of w1 and w2

where (+) normalizes each vector into a singleton-only mass function and
fuses them with Dempster's rule; the fused singleton masses become the
weights.  A rate whose denominator is empty contributes the neutral
weight 1 for that class.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import metrics
from .errors import DimensionMismatchError, UndefinedRateError
from .evidence import BBA, combine_pair
from .metrics import ConfusionMatrix

# Weights multiply scores, so a hard zero would erase a class entirely;
# defined-but-zero rates are floored instead.
WEIGHT_FLOOR = 1e-6


class WeightScheme(enum.Enum):
    W0 = "w0"
    W1 = "w1"
    W2 = "w2"
    W3 = "w3"
    W4 = "w4"
    W5 = "w5"


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Per-class multipliers in (0, 1], tagged with the scheme that built them."""

    values: np.ndarray
    scheme: WeightScheme | None = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


def _rate_or_neutral(rate_fn, cm: ConfusionMatrix) -> float:
    try:
        value = rate_fn(cm)
    except UndefinedRateError:
        # an empty class carries no evidence against the classifier
        return 1.0
    return max(value, WEIGHT_FLOOR)


def dempster_weight_combine(
    a: WeightVector, b: WeightVector, scheme: WeightScheme | None = None
) -> WeightVector:
    """Fuse two positive weight vectors through Dempster's rule.

    Each vector is normalized to a singleton-only mass function, the two
    are combined, and the fused masses are returned as weights.  Total
    conflict is impossible for strictly positive inputs.
    """
    va, vb = a.values, b.values
    if va.shape != vb.shape:
        raise DimensionMismatchError(f"weight lengths differ: {va.size} vs {vb.size}")
    ma = BBA(va / va.sum(), 0.0)
    mb = BBA(vb / vb.sum(), 0.0)
    fused = combine_pair(ma, mb)
    return WeightVector(fused.masses, scheme)


def build_weight(cm: ConfusionMatrix, scheme: WeightScheme) -> WeightVector:
    """Build the weighting vector for one classifier under one scheme."""
    if scheme is WeightScheme.W0:
        return WeightVector(np.ones(2), scheme)
    acc = _rate_or_neutral(metrics.accuracy, cm)
    if scheme is WeightScheme.W1:
        return WeightVector(np.array([acc, acc]), scheme)
    sns_spc = np.array(
        [_rate_or_neutral(metrics.sensitivity, cm), _rate_or_neutral(metrics.specificity, cm)]
    )
    if scheme is WeightScheme.W2:
        return WeightVector(sns_spc, scheme)
    if scheme is WeightScheme.W3:
        return WeightVector(
            np.array([_rate_or_neutral(metrics.ppv, cm), _rate_or_neutral(metrics.npv, cm)]),
            scheme,
        )
    if scheme is WeightScheme.W4:
        return dempster_weight_combine(
            WeightVector(sns_spc, WeightScheme.W2),
            build_weight(cm, WeightScheme.W3),
            WeightScheme.W4,
        )
    if scheme is WeightScheme.W5:
        return dempster_weight_combine(
            WeightVector(np.array([acc, acc]), WeightScheme.W1),
            WeightVector(sns_spc, WeightScheme.W2),
            WeightScheme.W5,
        )
    raise ValueError(f"unknown scheme {scheme!r}")


def parse_schemes(spec: str) -> list[WeightScheme]:
    """Parse a comma list like ``"w0,w4"`` or the shortcut ``"all"``."""
    if spec.strip().lower() == "all":
        return list(WeightScheme)
    out = []
    for token in spec.split(","):
        token = token.strip().lower()
        try:
            out.append(WeightScheme(token))
        except ValueError:
            raise ValueError(f"unknown weighting scheme {token!r}") from None
    if not out:
        raise ValueError("empty scheme list")
    return out
