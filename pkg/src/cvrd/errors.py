"""Exception hierarchy shared by every cvrd module."""


class CVRDError(Exception):
    """Base class for all library errors."""


class IngestionError(CVRDError, ValueError):
    """A price file could not be parsed."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ValidationError(CVRDError, ValueError):
    """Parsed data violates a domain invariant."""


class InsufficientDataError(CVRDError, ValueError):
    """Not enough observations for the requested computation."""


class NumericalError(CVRDError, ArithmeticError):
    """A numerical routine failed or produced an out-of-tolerance result."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotPSDError(NumericalError):
    """Covariance has an eigenvalue below the PSD tolerance."""


class DegeneratePortfolioError(NumericalError):
    """Portfolio variance (or total eigen-contribution) is zero."""


class NonConvergenceError(NumericalError):
    """An optimizer exhausted its iteration budget.

    ``best`` holds the best iterate found and ``report`` the solver report.
    """

    def __init__(self, message, best=None, report=None, residual=None):
        super().__init__(message, residual=residual)
        self.best = best
        self.report = report


class GuardError(CVRDError, ValueError):
    """A request was refused by a combinatorial or safety guard."""


class InsufficientHistoryError(InsufficientDataError):
    """Backtest data cannot support the requested rebalance schedule."""

    def __init__(self, message, first_feasible=None):
        super().__init__(message)
        self.first_feasible = first_feasible


class SolverFailure(CVRDError, RuntimeError):
    """A weight solve failed at a specific rebalance date."""

    def __init__(self, message, date=None, report=None):
        super().__init__(message)
        self.date = date
        self.report = report
