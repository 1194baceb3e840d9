"""Exception hierarchy shared across the package.

Errors are split by who can fix them: ``InputContractError`` means the caller
passed data violating a documented precondition, ``ConfigurationError`` means
a config file or CLI flag is wrong, ``ExternalRankerError`` means a child
ranker process misbehaved.
"""

from __future__ import annotations


class RelrankError(Exception):
    """Base class for all package errors."""


class InputContractError(RelrankError, ValueError):
    """A function precondition was violated by the caller."""


class DegenerateGroupError(InputContractError):
    """A group is too small for the requested operation (e.g. r_max < 2)."""


class ConfigurationError(RelrankError, ValueError):
    """A run configuration is invalid or inconsistent."""


class ExternalRankerError(RelrankError, RuntimeError):
    """The external ranker child process failed, timed out, or replied with
    a malformed or non-bijective ranking. Runs abort; there is no fallback."""


class NumericsError(RelrankError, RuntimeError):
    """Training produced non-finite numbers; the run cannot continue."""


class SchemaError(RelrankError, ValueError):
    """A line-delimited input file violates its record schema."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
