"""Exception types raised across the package."""


class StokesError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(StokesError, ValueError):
    pass


class PreconditionError(StokesError, ValueError):
    """An operation was called outside the boundary regime it is defined for."""


class EvaluationError(StokesError, ValueError):
    """User data (f, g or h) could not be evaluated at a required point."""


class IncompatibleDataError(StokesError, ValueError):
    """Boundary data violate a compatibility condition of the pure regimes.

    ``defects`` holds the offending values: the boundary flux for the
    Dirichlet problem, or the (force_x, force_y, torque) imbalance for the
    traction problem.
    """

    def __init__(self, message, defects=()):
        super().__init__(message)
        self.defects = tuple(float(d) for d in defects)


class NumericalBreakdownError(StokesError, RuntimeError):
    def __init__(self, message, history=(), diagnostics=None):
        super().__init__(message)
        self.history = list(history)
        self.diagnostics = dict(diagnostics or {})
