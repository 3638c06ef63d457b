"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the range an operation is defined on."""


class InternalError(RuntimeError):
    """A numerical routine failed an internal consistency check."""


class ValidationError(ValueError):
    """Parameter admissibility failure.

    ``violations`` maps a dotted field name ("gamma.lower", "eps.upper", ...)
    to the bound that was violated, so callers can report every problem at
    once instead of the first one found.
    """

    def __init__(self, violations: dict[str, float]):
        self.violations = dict(violations)
        parts = ", ".join(f"{k} (bound {v!r})" for k, v in sorted(self.violations.items()))
        super().__init__(f"invalid parameters: {parts}")
