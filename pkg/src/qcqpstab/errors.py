"""Shared exception types."""


class InvalidInputError(ValueError):
    """Raised when an operation receives malformed or non-finite input."""


class FinslerHypothesisError(RuntimeError):
    """Raised when a perturbation direction is not positive on the kernel."""
