"""Exception hierarchy shared by the solvers."""


class NomaError(Exception):
    """Base class for every solver failure raised by this package."""


class ShapeMismatch(NomaError, ValueError):
    """Sequences or allocation matrices have inconsistent lengths."""


class BudgetOutOfRange(NomaError, ValueError):
    """A cluster budget lies outside its feasible box."""

    def __init__(self, message, *, budget=None, lower=None, upper=None):
        super().__init__(message)
        self.budget = budget
        self.lower = lower
        self.upper = upper


class InfeasibleBox(NomaError, ValueError):
    """Per-user rate bounds describe an empty interval."""


class BracketFailure(NomaError, RuntimeError):
    """The water level could not be bracketed by the bisection search."""


class MaxIterationsError(NomaError, RuntimeError):
    """An iterative method hit its iteration cap without converging."""

    def __init__(self, message, *, iterations=None, last=None):
        super().__init__(message)
        self.iterations = iterations
        self.last = last


class LineSearchStall(NomaError, RuntimeError):
    """Backtracking shrank the Newton step to nothing."""


class InfeasibleError(NomaError):
    """Minimum-rate demands cannot be met within the power limits.

    The ``diagnostics`` attribute holds the :class:`FeasibilityResult`
    that triggered the failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics
