"""Exception types shared across the library."""


class StabilityLabError(Exception):
    """Base class for all errors raised by this package."""


class IncompatibleScaleTags(StabilityLabError):
    """Product of two tagged exact scalars is irrational."""


class IncompatibleModes(StabilityLabError):
    """Mixed exact/float operands where a single arithmetic mode is required."""


class CapExceeded(StabilityLabError):
    """Materializing a tensor power would exceed the entry cap."""


class NotConverged(StabilityLabError):
    """Iteration budget exhausted before reaching the requested tolerance.

    Carries the partial result (when available) so callers can inspect how
    far the iteration got.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class MOutOfRange(StabilityLabError):
    """Tree depth outside the supported materialization range."""


class DOutOfRange(StabilityLabError):
    """Point count outside the supported materialization range."""


class NOutOfRange(StabilityLabError):
    """Matrix size below the minimum."""


class MarginTooLargeForDimension(StabilityLabError):
    """Requested margin-shattering configuration violates d * eps^2 <= 4."""


class DuplicateString(StabilityLabError):
    """Input strings are not pairwise distinct."""


class PredicateModeMismatch(StabilityLabError):
    """Exact arithmetic was requested but the predicate cannot provide it."""


class UnsupportedPredicate(StabilityLabError):
    """Operation is not defined for this predicate tag."""


class DimensionMismatch(StabilityLabError):
    """Operands have incompatible sizes."""


class TooLargeForBruteForce(StabilityLabError):
    """Exhaustive search refused: input exceeds the brute-force cap."""


class EtaMismatch(StabilityLabError):
    """Approximation result was computed at a different eta than required."""


class DegreeTooLow(StabilityLabError):
    """No polynomial of the given degree meets the sup-norm constraint."""


class MissingRealizer(StabilityLabError):
    """Realizer map does not cover every subset bitmask."""
