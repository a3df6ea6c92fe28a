"""Exception hierarchy shared by every module."""


class MonokitError(Exception):
    """Base class for all library errors."""


class DimensionError(MonokitError, ValueError):
    """Vector lengths disagree with the space or with each other."""


class ContractError(MonokitError, ValueError):
    """An operation was called outside its documented preconditions."""


class UnsupportedError(ContractError):
    """The representation, dimension or exponent is not handled by this routine."""


class SolverError(MonokitError, RuntimeError):
    """A numerical solver failed to reach its tolerance."""


class BudgetError(SolverError):
    """An iteration step exceeded its prescribed budget.

    Attributes
    ----------
    step : int
        One-based index ``n`` of the failing step ``c_n -> c_{n+1}``.
    """

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step
