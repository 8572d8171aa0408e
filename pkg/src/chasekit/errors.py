"""Exception types shared across the package."""

from __future__ import annotations


class ChasekitError(Exception):
    """Base class for all chasekit errors."""


class ParseError(ChasekitError):
    """Syntax or validation error in a text input; carries a SourceSpan."""

    def __init__(self, message, span=None):
        self.span = span
        super().__init__(message)

    def __str__(self):
        msg = super().__str__()
        if self.span is not None:
            return f"{self.span}: {msg}"
        return msg


class UnknownRelation(ChasekitError):
    pass


class HeadArityMismatch(ChasekitError):
    pass


class NonSetDatabase(ChasekitError):
    """A bag-set or set operation was given a database with multiplicities > 1."""


class ResourceBound(ChasekitError):
    """An enumeration or search space exceeds its configured cap."""


class NotApplicable(ChasekitError):
    """Chase step preconditions do not hold for the given dependency and homomorphism."""


class ChaseFailure(ChasekitError):
    """An egd step tried to equate two distinct constants."""


class BudgetExceeded(ChasekitError):
    """Chase budget ran out; carries the partial outcome when available."""

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)


class NoTupleId(ChasekitError):
    pass


class HypothesesNotMet(ChasekitError):
    """Inputs do not satisfy the preconditions of a counterexample constructor."""


class IncompatibleAggregates(ChasekitError):
    pass
