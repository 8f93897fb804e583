"""Exception types shared by every module."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(ValueError):
    """Argument exceeds an available table or a configured ceiling."""


class DivergenceError(DomainError):
    """Requested series or integral does not converge."""
