"""Exception types shared across the package."""
from __future__ import annotations


class DivotError(Exception):
    """Base class for all package-specific errors."""


class PairParseError(DivotError, ValueError):
    """A pair file contains a line that cannot be parsed."""

    def __init__(self, path: str, line_no: int, message: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class InsufficientDataError(DivotError, ValueError):
    """Fewer usable rows / batches than the operation requires."""


class DegenerateDataError(DivotError, ValueError):
    """Data with no variation where variation is required (zero std)."""


class ShapeError(DivotError, ValueError):
    """Mismatched vector lengths."""


class NumericError(DivotError, ArithmeticError):
    """A computation produced a non-finite value."""


class SkeletonTooLargeError(DivotError, ValueError):
    """Skeleton has too many edges for exhaustive orientation scoring."""
