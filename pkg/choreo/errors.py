"""
Exception hierarchy for the choreography toolkit.

Every error subclasses ValueError so callers that only know about invalid
input keep working; the command line maps each class to an exit code.
"""

from typing import Optional, Sequence


class ChoreographyError(ValueError):
    """Base class for all toolkit errors."""


class ParseError(ChoreographyError):
    """Malformed DSL text, with the position of the offending token."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None and column is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class InvalidPathError(ChoreographyError):
    """A path does not address a subterm."""

    def __init__(self, path: Sequence[int]):
        self.path = tuple(path)
        super().__init__(f"Invalid path: {list(self.path)}")


class CapExceeded(ChoreographyError):
    """Trace enumeration produced more traces than allowed."""

    def __init__(self, cap: int, message: Optional[str] = None):
        self.cap = cap
        super().__init__(message or f"Trace enumeration exceeded cap of {cap} traces")


class ExpansionBudgetExceeded(CapExceeded):
    """Normal-form expansion grew beyond its node budget."""

    def __init__(self, budget: int):
        super().__init__(budget, f"Normal-form expansion exceeded budget of {budget} nodes")


class PreconditionViolation(ChoreographyError):
    """A rewrite was applied where its precondition does not hold."""


class NoCommonSender(ChoreographyError):
    """A choice has no initial interaction whose sender could decide it."""


class NonConvergence(ChoreographyError):
    """The amend driver ran out of rounds with violations left."""

    def __init__(self, rounds: int, residual: list):
        self.rounds = rounds
        self.residual = residual
        super().__init__(
            f"Amendment did not converge after {rounds} rounds "
            f"({len(residual)} violations remaining)"
        )


class EmptyChoreography(ChoreographyError):
    """Projection of a choreography without roles."""
