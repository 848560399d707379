"""
Exception hierarchy shared by every module.

Data problems also derive from ValueError and numerical failures from
ArithmeticError, so the command line can map them onto exit codes without
knowing every concrete class.
"""


class TailRiskError(Exception):
    """Base class of all tailrisk errors."""


# data errors (exit code 2)

class DataError(TailRiskError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, row, message="malformed row"):
        self.row = row
        super().__init__(f"row {row}: {message}")


class OrderError(DataError):
    def __init__(self, row, message="dates must be strictly increasing"):
        self.row = row
        super().__init__(f"row {row}: {message}")


class InsufficientData(DataError):
    pass


class DomainError(DataError):
    pass


class AlignmentError(DataError):
    pass


# usage errors (exit code 1)

class UsageError(TailRiskError):
    pass


# numerical errors (exit code 3)

class NumericalError(TailRiskError, ArithmeticError):
    pass


class FitError(NumericalError):
    """
    Raised when an optimizer fails on every restart.

    Carries the best iterate found so callers can decide to use it anyway.
    """

    def __init__(self, message, best_params=None, converged=False):
        self.best_params = best_params
        self.converged = converged
        super().__init__(message)


class InsufficientTail(NumericalError):
    pass


class TailError(NumericalError):
    pass


class TailMeanUndefined(NumericalError):
    pass


class DegenerateWeights(NumericalError):
    pass


class SingularDesign(NumericalError):
    pass


class ForecastError(NumericalError):
    pass


class DegenerateBandwidth(NumericalError):
    pass


class NotApplicable(NumericalError):
    pass


class EmptyResiduals(NotApplicable):
    pass


class DegenerateResiduals(NumericalError):
    pass
