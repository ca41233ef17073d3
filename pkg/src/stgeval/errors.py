"""Exception types raised by the toolkit."""

from __future__ import annotations


class StgEvalError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(StgEvalError):
    """Incompatible settings, e.g. mismatched sampling rates."""


class InvalidAnnotationError(StgEvalError):
    """Ground truth that cannot be scored (empty tube, empty interval set)."""


class MalformedPredictionError(StgEvalError):
    def __init__(self, message: str, query_id: str | None = None):
        self.query_id = query_id
        if query_id is not None:
            message = f"{message} (query {query_id!r})"
        super().__init__(message)


class DialectParseError(StgEvalError):
    """A raw model response that could not be parsed at all."""

    def __init__(self, message: str, payload: str = "", dialect: str | None = None):
        self.dialect = dialect
        self.excerpt = payload[:120]
        detail = f"{message}"
        if dialect:
            detail = f"[{dialect}] {detail}"
        if payload:
            detail += f"; payload starts with {self.excerpt!r}"
        super().__init__(detail)


class SchemaError(StgEvalError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InputError(StgEvalError):
    """Inconsistent inputs to an evaluation run (unknown ids, task mismatch)."""
