"""Exception hierarchy shared by every module."""


class RisDimError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(RisDimError, ValueError):
    """Invalid or incomplete run configuration."""


class GeometryDomainError(RisDimError, ValueError):
    """A geometric quantity is outside the domain of a formula."""


class InfeasibleGeometryError(GeometryDomainError):
    """The requested layout distances admit no planar solution."""


class NumericalError(RisDimError, ArithmeticError):
    """A numerical procedure failed (singular matrix, non-convergence, ...)."""


class RankDeficientError(NumericalError):
    def __init__(self, ratio: float, tol: float):
        self.ratio = ratio
        self.tol = tol
        super().__init__(
            f"channel matrix is rank deficient: smallest/largest singular value "
            f"ratio {ratio:.3e} < {tol:.1e}"
        )


class ConvergenceError(NumericalError):
    """Adaptive refinement did not reach the requested tolerance."""


class BudgetExceededError(RisDimError):
    """Exact channel synthesis would draw more samples than allowed."""


class DegenerateIntervalError(RisDimError, ValueError):
    """Too few samples to form a confidence interval."""
