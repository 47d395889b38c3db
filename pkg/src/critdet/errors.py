"""Exception types shared across the package."""


class CritdetError(Exception):
    """Base class for all package errors."""


class DomainError(CritdetError, ArithmeticError):
    """An interval operation was asked to leave its domain (e.g. 0 in a divisor)."""


class InconsistencyError(CritdetError):
    """An enclosure iteration produced an empty intersection.

    This is a proof that the starting bracket did not contain the solution,
    i.e. either the input lies outside the admissible domain or there is a bug.
    """


class SingularityError(CritdetError):
    """The implicit-function derivative enclosure contains zero on a box."""


class InvalidRegion(CritdetError, ValueError):
    """A requested (p, sigma) region does not intersect the admissible domain."""


class ConvergenceError(CritdetError):
    """A floating-point reference iteration failed to converge."""


class OracleError(CritdetError):
    """The reference (non-rigorous) computation failed too often to be trusted."""
