"""Errors raised by the approximation and I/O layers."""


class RatbaryError(Exception):
    """Base class for package-specific failures."""


class DegenerateInputError(RatbaryError, ValueError):
    """Input carries no usable information (all-zero matrix, empty grid)."""


class PoleHitError(RatbaryError, ArithmeticError):
    """Barycentric denominator vanished at an off-support point.

    The offending point is stored on the ``point`` attribute.
    """

    def __init__(self, point):
        self.point = point
        super().__init__(f"barycentric denominator vanished at z = {point}")


class ExhaustionError(RatbaryError, RuntimeError):
    """A candidate pool ran dry before the request could be satisfied."""


class FileFormatError(RatbaryError, ValueError):
    """A matrix or model file failed structural validation."""
