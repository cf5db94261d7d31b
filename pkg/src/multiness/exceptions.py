"""Exception and warning types raised across the package."""


class MultinessError(Exception):
    """Base class for all package errors."""


class InvalidInput(MultinessError, ValueError):
    """Input data or parameters violate a documented precondition."""


class NumericalFailure(MultinessError, ArithmeticError):
    """An eigensolver or linear solve failed to produce a usable answer."""


class BudgetExceeded(MultinessError):
    """A truncated eigendecomposition did not capture every eigenvalue above threshold.

    Attributes
    ----------
    budget : int
        The number of eigenpairs that were computed.
    partial_rank : int
        Rank of the thresholded result restricted to the computed eigenpairs.
    """

    def __init__(self, budget, partial_rank):
        super().__init__(
            f"svd budget {budget} exhausted: eigenvalue {budget + 1} still exceeds "
            f"the threshold (partial rank {partial_rank})"
        )
        self.budget = budget
        self.partial_rank = partial_rank


class DegenerateDesign(MultinessError, ArithmeticError):
    """Refitting design matrix is rank deficient."""


class HoldoutTooLarge(MultinessError, ValueError):
    """A hold-out left some layer without any observed entry."""


class CvFailed(MultinessError):
    """Every cross-validation fold was skipped."""


class ParseError(MultinessError, ValueError):
    """Malformed multiplex or matrix file."""


class IoError(MultinessError, OSError):
    """Output location cannot be written."""


class MultinessWarning(UserWarning):
    pass


class ConvergenceWarning(MultinessWarning):
    pass


class RefitWarning(MultinessWarning):
    pass


class CvWarning(MultinessWarning):
    pass


class ImputationUnderdetermined(MultinessWarning):
    pass
