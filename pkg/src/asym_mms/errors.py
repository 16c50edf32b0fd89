"""Exception hierarchy shared by all modules.

Every error carries a CLI exit code so the front-end can map failures
without a lookup table of its own.
"""


class AsymMMSError(Exception):
    exit_code = 2


class InputError(AsymMMSError):
    """Bad user data: shapes, domains, parse failures."""

    exit_code = 2


class EmptySubset(InputError):
    pass


class NegativeWeight(InputError):
    pass


class OutOfDomain(InputError):
    pass


class DuplicatePoint(InputError):
    pass


class InvalidExponent(InputError):
    pass


class NegativeGradient(InputError):
    pass


class MassNotUnit(InputError):
    pass


class ParseError(InputError):
    pass


class BudgetExceeded(AsymMMSError):
    exit_code = 2


class InfiniteCost(AsymMMSError):
    """No coupling with finite cost exists."""

    exit_code = 1


class SolverStall(AsymMMSError):
    """Iteration budget exhausted before the requested tolerance."""

    exit_code = 3

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class CycleGuardTripped(SolverStall):
    """Simplex iteration cap reached; with an anti-cycling rule this is a bug."""
