"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class HubStarError(Exception):
    """Base class for all engine errors."""


class ParseError(HubStarError):
    """Lexical or syntactic error in a model file. Carries 1-based position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class EvalError(HubStarError):
    """Expression evaluation failure (bad cast, unknown column, type clash)."""


class StorageError(HubStarError):
    """Table store failure: missing table, schema mismatch, bad write."""


class IngestError(HubStarError):
    """Source file could not be parsed or coerced into its declared schema."""


class LoadError(HubStarError):
    """Silver load failure (null business key, unresolved precondition)."""


class GoldBuildError(HubStarError):
    """Gold materialization failure (missing dependency, bad view config)."""
