"""Exception types shared across the package."""


class DomainError(ValueError):
    """A sequence was evaluated below its first valid index."""


class DegenerateWindowError(ValueError):
    """A weighted window has nonpositive span W(N) - W(M)."""


class BoundaryAmbiguityError(ValueError):
    """A fractional part sits too close to an integer to trust floats.

    Raised instead of silently resolving a floor at a float boundary.
    """


class NumericalConsistencyError(ValueError):
    """Two routes to the same integer quantity disagree beyond the guard band."""


class LemmaViolationError(RuntimeError):
    """A property that holds by construction failed independent re-verification.

    Signals an implementation bug or float contamination, never an expected
    outcome.
    """


class SpecStringError(ValueError):
    """A function/system/set spec string failed to parse or validate."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
