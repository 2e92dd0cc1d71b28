"""Dempster-Shafer algebra on two-level mass functions.

All evidence handled by the fusion pipeline assigns mass to the K
singleton hypotheses of a frame plus the whole frame itself (the
ignorance term).  Under that restriction Dempster's rule stays closed
form and O(K) per combination:

    m(k)  = [m1(k) m2(k) + m1(k) t2 + t1 m2(k)] / (1 - conflict)
    m(TH) = t1 t2 / (1 - conflict)

where ``t`` is the ignorance mass and ``conflict`` the joint mass
falling on disjoint singleton pairs.  A power-set combiner over
arbitrary focal sets is also provided; it is exponential in the frame
size and exists as an independent cross-check of the fast path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FrameMismatchError,
    FrameTooLargeError,
    MassSumError,
    NegativeMassError,
    TotalConflictError,
)

# Mass functions must sum to 1 within MASS_TOL; a combination is total
# conflict when the surviving mass is <= CONFLICT_EPS; float drift after
# normalization is repaired up to MASS_TOL and treated as a bug beyond it.
MASS_TOL = 1e-9
CONFLICT_EPS = 1e-12
DRIFT_RENORM = 1e-12

ORACLE_MAX_CLASSES = 6


@dataclass(frozen=True)
class Frame:
    """Frame of discernment: the exhaustive set of class hypotheses."""

    class_count: int

    def __post_init__(self):
        if self.class_count < 2:
            raise ValueError(f"frame needs at least 2 hypotheses, got {self.class_count}")


@dataclass(frozen=True, eq=False)
class BBA:
    """Mass over K singleton hypotheses plus the full frame (ignorance).

    Construction does not validate; call :func:`validate` to check the
    invariants explicitly.
    """

    masses: np.ndarray
    ignorance: float

    def __post_init__(self):
        arr = np.array(self.masses, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "masses", arr)
        object.__setattr__(self, "ignorance", float(self.ignorance))

    @property
    def class_count(self) -> int:
        return int(self.masses.shape[0])

    @staticmethod
    def vacuous(class_count: int) -> "BBA":
        """Total ignorance: all mass on the full frame."""
        return BBA(np.zeros(class_count), 1.0)

    @staticmethod
    def certain(class_index: int, class_count: int) -> "BBA":
        """All mass on one singleton hypothesis."""
        masses = np.zeros(class_count)
        masses[class_index] = 1.0
        return BBA(masses, 0.0)


def validate(b: BBA) -> None:
    """Check mass-function invariants; raise if violated, else return.

    Raises:
        NegativeMassError: some mass is negative.
        MassSumError: masses are non-finite or do not sum to 1 within
            ``MASS_TOL``.
    """
    if not np.all(np.isfinite(b.masses)) or not np.isfinite(b.ignorance):
        raise MassSumError("mass function contains non-finite values")
    if np.any(b.masses < 0.0) or b.ignorance < 0.0:
        raise NegativeMassError("mass function contains negative mass")
    total = float(b.masses.sum() + b.ignorance)
    if abs(total - 1.0) > MASS_TOL:
        raise MassSumError(f"total mass is {total!r}, expected 1 within {MASS_TOL}")


def _check_same_frame(b1: BBA, b2: BBA) -> None:
    if b1.class_count != b2.class_count:
        raise FrameMismatchError(
            f"frames differ: {b1.class_count} vs {b2.class_count} hypotheses"
        )


def conflict(b1: BBA, b2: BBA) -> float:
    """Joint mass on the empty intersection, i.e. on disjoint singleton pairs.

    For the two-level structure this is sum_{j != k} m1(j) m2(k); the
    ignorance term intersects everything and contributes nothing.
    """
    _check_same_frame(b1, b2)
    m1, m2 = b1.masses, b2.masses
    value = float(m1.sum() * m2.sum() - (m1 * m2).sum())
    return min(max(value, 0.0), 1.0)


def combine_pair(b1: BBA, b2: BBA) -> BBA:
    """Dempster's rule for two two-level mass functions.

    Raises:
        TotalConflictError: the surviving (non-empty) joint mass is
            ``<= CONFLICT_EPS``, so the normalizer vanishes.
        FrameMismatchError: operands live on different frames.
    """
    _check_same_frame(b1, b2)
    m1, t1 = b1.masses, b1.ignorance
    m2, t2 = b2.masses, b2.ignorance
    num = m1 * m2 + m1 * t2 + t1 * m2
    theta = t1 * t2
    # Normalize by the surviving mass directly; it equals 1 - conflict but
    # is built from non-negative terms only.
    total = float(num.sum() + theta)
    if total <= CONFLICT_EPS:
        raise TotalConflictError("total conflict: all joint mass on the empty set")
    masses = num / total
    ign = theta / total
    drift = abs(float(masses.sum() + ign) - 1.0)
    if drift > MASS_TOL:
        raise RuntimeError(f"internal error: combined mass drifted by {drift}")
    if drift > DRIFT_RENORM:
        s = float(masses.sum() + ign)
        masses = masses / s
        ign = ign / s
    return BBA(masses, ign)


def combine_sequence(bbas: list[BBA]) -> BBA:
    """Left fold of :func:`combine_pair`; a single element is returned as is.

    Raises:
        TotalConflictError: with ``index`` set to the position of the mass
            function whose combination with the running result failed.
    """
    if len(bbas) == 0:
        raise ValueError("need at least one mass function")
    acc = bbas[0]
    for i in range(1, len(bbas)):
        try:
            acc = combine_pair(acc, bbas[i])
        except TotalConflictError as err:
            raise TotalConflictError(
                f"total conflict while folding element {i}", index=i
            ) from err
    return acc


# --- power-set oracle -------------------------------------------------------

@dataclass(frozen=True)
class GeneralBBA:
    """Mass over arbitrary non-empty focal subsets of the frame.

    Used only as a slow reference implementation; the pipeline itself never
    produces composite focal sets other than the full frame.
    """

    class_count: int
    masses: dict[frozenset, float] = field(default_factory=dict)

    def full_frame(self) -> frozenset:
        return frozenset(range(self.class_count))

    @staticmethod
    def from_two_level(b: BBA) -> "GeneralBBA":
        masses = {
            frozenset([k]): float(b.masses[k])
            for k in range(b.class_count)
            if b.masses[k] != 0.0
        }
        if b.ignorance != 0.0:
            masses[frozenset(range(b.class_count))] = float(b.ignorance)
        return GeneralBBA(b.class_count, masses)

    def to_two_level(self) -> BBA:
        """Project back; only valid when focal sets are singletons or the frame."""
        masses = np.zeros(self.class_count)
        ignorance = 0.0
        frame = self.full_frame()
        for focal, value in self.masses.items():
            if focal == frame:
                ignorance += value
            elif len(focal) == 1:
                masses[next(iter(focal))] += value
            else:
                raise ValueError(f"composite focal set {set(focal)} has no two-level form")
        return BBA(masses, ignorance)


def validate_general(g: GeneralBBA) -> None:
    total = 0.0
    frame = g.full_frame()
    for focal, value in g.masses.items():
        if len(focal) == 0:
            raise MassSumError("mass assigned to the empty set")
        if not focal <= frame:
            raise FrameMismatchError(f"focal set {set(focal)} outside the frame")
        if value < 0.0:
            raise NegativeMassError(f"negative mass on {set(focal)}")
        total += value
    if abs(total - 1.0) > MASS_TOL:
        raise MassSumError(f"total mass is {total!r}, expected 1 within {MASS_TOL}")


def _combine_general_pair(g1: GeneralBBA, g2: GeneralBBA) -> GeneralBBA:
    if g1.class_count != g2.class_count:
        raise FrameMismatchError(
            f"frames differ: {g1.class_count} vs {g2.class_count} hypotheses"
        )
    combined: dict[frozenset, float] = {}
    surviving = 0.0
    for f1, v1 in g1.masses.items():
        for f2, v2 in g2.masses.items():
            meet = f1 & f2
            product = v1 * v2
            if meet:
                combined[meet] = combined.get(meet, 0.0) + product
                surviving += product
    if surviving <= CONFLICT_EPS:
        raise TotalConflictError("total conflict: all joint mass on the empty set")
    return GeneralBBA(
        g1.class_count, {focal: value / surviving for focal, value in combined.items()}
    )


def combine_powerset_oracle(gs: list[GeneralBBA]) -> GeneralBBA:
    """Dempster's rule by explicit enumeration of focal-set intersections.

    Raises:
        FrameTooLargeError: frame exceeds ``ORACLE_MAX_CLASSES`` hypotheses.
        TotalConflictError: the normalizer vanishes at some fold step.
    """
    if len(gs) == 0:
        raise ValueError("need at least one mass function")
    if gs[0].class_count > ORACLE_MAX_CLASSES:
        raise FrameTooLargeError(
            f"oracle enumerates at most {ORACLE_MAX_CLASSES} hypotheses"
        )
    acc = gs[0]
    for i in range(1, len(gs)):
        try:
            acc = _combine_general_pair(acc, gs[i])
        except TotalConflictError as err:
            raise TotalConflictError(
                f"total conflict while folding element {i}", index=i
            ) from err
    return acc
