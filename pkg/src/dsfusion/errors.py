"""Exception hierarchy used across the package.

Every error raised on purpose derives from :class:`DSFusionError`, so
callers can catch one base class at pipeline boundaries.  Numerical
inconsistencies that indicate a bug (rather than bad input) raise plain
``RuntimeError`` instead.
"""


class DSFusionError(Exception):
    """Base class for expected failures (bad input, degenerate data)."""


# --- mass functions / combination ---

class NegativeMassError(DSFusionError):
    """A mass function carries a negative mass value."""


class MassSumError(DSFusionError):
    """Total mass differs from 1 beyond tolerance."""


class FrameMismatchError(DSFusionError):
    """Two mass functions are defined over frames of different size."""


class FrameTooLargeError(DSFusionError):
    """The power-set combiner refuses frames it cannot enumerate."""


class TotalConflictError(DSFusionError):
    """All joint mass lands on the empty intersection; no combination exists.

    ``index`` points at the offending element: the position of the mass
    function that triggered the conflict in a sequence, or the sample row
    when combining per-sample evidence.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


# --- metrics ---

class LengthMismatchError(DSFusionError):
    """Paired label vectors have different lengths."""


class NonBinaryTaskError(DSFusionError):
    """A binary-only operation received labels outside {0, 1}."""


class UndefinedRateError(DSFusionError):
    """A confusion-matrix rate has a zero denominator."""


class EmptyInputError(DSFusionError):
    """An operation that needs at least one sample received none."""


# --- datasets ---

class ParseError(DSFusionError):
    """A file could not be parsed into the expected structure."""


class SingleClassError(DSFusionError):
    """Fewer than two classes are present."""


class InvalidFractionsError(DSFusionError):
    """Split fractions are non-positive or do not sum to 1."""


class ClassTooSmallError(DSFusionError):
    """A class ended up with no training samples under the requested split."""


# --- base learners ---

class TooFewSamplesError(DSFusionError):
    """Not enough samples for the requested cross-validation."""


class ExternalScoresMissingError(DSFusionError):
    """A pool slot expects a score file that does not exist."""


class RowCountMismatchError(DSFusionError):
    """An external score file does not match the split sizes."""


class NonStochasticRowError(DSFusionError):
    """A score row does not sum to 1 beyond the repair tolerance."""


class WidthMismatchError(DSFusionError):
    """Feature matrix width differs from the width seen at fit time."""


# --- fusion ---

class DimensionMismatchError(DSFusionError):
    """Array shapes disagree with the frame or sample count."""


class MemberMissingError(DSFusionError):
    """A fusion model references a classifier absent from the pool."""
