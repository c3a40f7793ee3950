from __future__ import annotations


class GerryGridError(Exception):
    """Base class for every error raised by gerrygrid."""


class InvalidArgumentError(GerryGridError, ValueError):
    """Raised when an argument lies outside an operation's domain."""


class UndefinedMetricError(GerryGridError, ArithmeticError):
    """Raised when a metric has no defined value (e.g. ClusP with no dots)."""


class UnsupportedError(GerryGridError):
    """Raised for inputs the library deliberately does not handle."""


class InitializationError(GerryGridError, RuntimeError):
    """Raised when a Markov chain cannot find an initial legal plan."""


class NotFoundError(GerryGridError, LookupError):
    """Raised when a lookup over sweep records finds nothing."""


class ValidationError(GerryGridError):
    """Raised when persisted data does not match what the caller expects."""


class ParseError(ValidationError):
    """Raised when a text file cannot be parsed."""

    def __init__(self, message: str, line_number: int | None = None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class UsageError(GerryGridError):
    """Raised for malformed command-line usage."""
