"""Exception hierarchy.

ValidationError maps to CLI exit code 2, NumericalError (and subclasses)
to exit code 3.
"""

from __future__ import annotations


class ChangePlaneError(Exception):
    """Base class for all package errors."""


class ValidationError(ChangePlaneError):
    """Malformed input: bad shapes, non-finite values, schema violations."""


class NumericalError(ChangePlaneError):
    """A numerical procedure failed (optimizer, window growth, degeneracy)."""


class NoSplitError(NumericalError):
    """No feasible change-plane split exists for the data/filters at hand."""


class ConvergenceError(NumericalError):
    """An iterative scheme exhausted its budget before meeting its stop rule."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
