"""Exceptions shared across the package."""
from __future__ import annotations


class CapExceeded(Exception):
    """A configured size or search cap was hit; ``reached`` is the partial size."""

    def __init__(self, message: str, reached: int | None = None):
        super().__init__(message)
        self.reached = reached


class InvariantViolation(AssertionError):
    """A result failed a verification step that a proven statement guarantees."""


class NotApplicable(ValueError):
    """Input fails the hypotheses of an operation."""
