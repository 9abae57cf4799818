"""Exception hierarchy shared across the pipeline.

Exit-code mapping used by the CLI: UsageError -> 1, DataError -> 2,
NumericError -> 3.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(PipelineError):
    """Invalid configuration or CLI invocation."""


class DataError(PipelineError):
    """Bad input data: missing files, malformed records, schema violations."""

    def __init__(self, message: str, *, line: int | None = None, row: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.line = line
        self.row = row


class NumericError(PipelineError):
    """Numeric failure: non-finite inputs, impossible solves."""
