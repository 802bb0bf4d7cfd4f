# supernet/errors.py

"""
Exception hierarchy shared by every module.

Each error carries the process exit code the command-line driver reports for
it, so ``main.py`` can translate any failure into a single machine-parsable
line without knowing where it was raised.

- ConfigurationError: invalid experiment settings or arguments (exit 1).
- ShapeError: dimension mismatch between arrays or specs (exit 2).
- DataError: dataset contents or sizes that an operation cannot accept (exit 2).
- FormatError: malformed IDX, CSV or checkpoint files (exit 2).
- NumericError: NaN/Inf in losses, gradients or parameters (exit 3).
"""

from typing import Optional


class SupernetError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ConfigurationError(SupernetError, ValueError):
    exit_code = 1


class ShapeError(SupernetError, ValueError):
    exit_code = 2


class DataError(SupernetError, ValueError):
    exit_code = 2


class FormatError(SupernetError, ValueError):
    """
    Malformed input file.

    ``offset`` is the byte offset for binary formats, ``row`` the 1-based data
    row for CSV input; the message already mentions whichever is set.
    """

    exit_code = 2

    def __init__(self, message: str, offset: Optional[int] = None, row: Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        if row is not None:
            message = f"{message} (at row {row})"
        super().__init__(message)
        self.offset = offset
        self.row = row


class NumericError(SupernetError, ArithmeticError):
    exit_code = 3
