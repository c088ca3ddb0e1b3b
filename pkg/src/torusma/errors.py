"""Exception hierarchy shared across the package."""


class TorusmaError(Exception):
    """Base class for all package-specific errors."""


class GridMismatchError(TorusmaError):
    """Raised when an operation combines fields from different grids."""


class RealnessError(TorusmaError):
    """Raised when a field expected to be real carries too much imaginary part."""


class HermitianError(TorusmaError):
    """Raised when a matrix field violates Hermitian symmetry beyond tolerance."""


class PositivityError(TorusmaError):
    """Raised when a Hermitian form is not positive definite down to the floor."""


class NonConvergenceError(TorusmaError):
    """Newton iteration stopped before reaching the residual tolerance.

    Carries the partial solver report so callers can inspect the residual
    history of the failed run.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PositivityLossError(TorusmaError):
    """No damped Newton step kept the candidate metric positive definite."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ContinuationStalledError(TorusmaError):
    """The homotopy step size underflowed before the target parameter."""

    def __init__(self, message, t_reached=0.0, report=None):
        super().__init__(message)
        self.t_reached = t_reached
        self.report = report


class InfeasibleParameterError(TorusmaError):
    """The continuity problem at the requested parameter has no positive
    reference form, so no solve is attempted."""

    def __init__(self, message, s=None, min_eig=None):
        super().__init__(message)
        self.s = s
        self.min_eig = min_eig


class ConfigError(TorusmaError):
    """Invalid experiment configuration.

    ``field`` holds a dotted path naming the offending entry when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
