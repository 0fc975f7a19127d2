"""
Exception hierarchy for qdaphase.

The CLI maps each family to an exit code:
- ParameterError -> 1 (usage)
- DataError, ExportError -> 2
- NumericFailure -> 3
"""

from typing import Optional


class QdaPhaseError(Exception):
    """Base class for every error raised by the library."""


class ParameterError(QdaPhaseError, ValueError):
    """Invalid exponent, threshold, grid or configuration value."""


class DataError(QdaPhaseError):
    """A data file could not be read or has the wrong shape.

    Args:
        message: Human readable description
        path: File involved, if any
        row: 1-based row number of the offending cell, if known
        column: Column name or index of the offending cell, if known
    """

    def __init__(self, message: str, path: Optional[str] = None,
                 row: Optional[int] = None, column: Optional[object] = None):
        self.path = path
        self.row = row
        self.column = column
        location = []
        if path is not None:
            location.append(str(path))
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class NumericFailure(QdaPhaseError):
    """A numerical routine broke down."""


class PositiveDefiniteError(NumericFailure):
    """Matrix is not positive definite; `pivot` is the failing pivot index."""

    def __init__(self, message: str, pivot: Optional[int] = None):
        self.pivot = pivot
        if pivot is not None:
            message = f"{message} (pivot {pivot})"
        super().__init__(message)


class EstimationError(NumericFailure):
    """Precision estimation could not run (e.g. too few samples)."""


class ExportError(QdaPhaseError):
    """Writing an output file failed."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        if path is not None:
            message = f"{message}: {path}"
        super().__init__(message)
