"""Exception hierarchy. Each family maps to one CLI exit code."""

from __future__ import annotations


class RsjdError(Exception):
    exit_code = 1


class InputError(RsjdError, ValueError):
    """Bad model document, bad parameters or bad flags."""

    exit_code = 2


class ModelError(InputError):
    """A model failed validation; ``violations`` lists every broken rule."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericalError(RsjdError, ArithmeticError):
    exit_code = 3


class QuadratureError(NumericalError):
    pass


class ContourError(QuadratureError):
    """Inversion produced a probability outside [0, 1] beyond noise level."""


class RootFindingError(NumericalError):
    pass


class MatrixExpError(NumericalError):
    pass


class InfeasibleError(RsjdError):
    exit_code = 4


class ExistenceViolated(InfeasibleError):
    """No optimal strike: the loss quantile is not below E^Q[S_T]."""


class TargetUnattainable(InfeasibleError):
    pass


class BudgetExceedsAnyPut(InfeasibleError):
    pass
