"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input: malformed matrix, subset, parameter or file."""


class GuardError(ValidationError):
    """Problem size exceeds an enumeration guard."""


class HorizonError(ValidationError):
    """A query or scan ran past the end of a finite schedule."""


class MissingEtaError(ValidationError):
    """An operation needs a diagonal lower bound the schedule does not declare."""


class InvariantViolation(AssertionError):
    """A runtime invariant failed (e.g. the disagreement grew)."""
