from __future__ import annotations

from pathlib import Path


class SwselectError(Exception):
    pass


class InvalidArgumentError(SwselectError, ValueError):
    pass


class SizeLimitError(InvalidArgumentError):
    pass


class DataParseError(SwselectError, ValueError):
    """
    Raised when a CSV cell, row or file cannot be turned into a Dataset.

    ``row`` and ``column`` are zero-based data coordinates (the header, when
    present, is not counted); either may be None when the failure is not tied
    to a single cell.
    """

    def __init__(
        self,
        message: str,
        path: str | Path | None = None,
        row: int | None = None,
        column: int | None = None,
    ) -> None:
        self.path = path
        self.row = row
        self.column = column
        location = []
        if path is not None:
            location.append(str(path))
        if row is not None:
            location.append(f'row {row}')
        if column is not None:
            location.append(f'column {column}')
        if location:
            message = f'{", ".join(location)}: {message}'
        super().__init__(message)


class UndefinedValueError(SwselectError):
    pass
