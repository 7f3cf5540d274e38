"""Exception types shared across the package."""


class DropRobustError(Exception):
    """Base class for all package errors."""


class NonFiniteError(DropRobustError):
    """Input data contains NaN or Inf entries."""


class RankDeficientError(DropRobustError):
    """The active design matrix has rank < P (or is numerically singular).

    Carries ``coef_identified``: whether the requested coefficient is still
    estimable despite the overall rank deficiency. ``None`` if unknown.
    """

    def __init__(self, msg, coef_identified=None):
        super().__init__(msg)
        self.coef_identified = coef_identified


class LeverageOneError(DropRobustError):
    """Dropping this row alone would make the fit ill-defined (h_nn ~ 1)."""


class BudgetZeroError(DropRobustError):
    """floor(alpha * N) == 0: the audit would drop nothing."""


class WrongDirectionError(DropRobustError):
    """The coefficient already has the target sign; the audit is vacuous."""


class GroundTruthUnavailableError(DropRobustError):
    """No oracle result or known influential set to classify against."""


class OracleInfeasibleError(DropRobustError):
    """The subset enumeration would exceed the configured limits."""


class UnknownScenarioError(DropRobustError):
    """Scenario id is not in the generator catalog."""


class BadParamsError(DropRobustError):
    """Scenario parameters outside their documented ranges."""
