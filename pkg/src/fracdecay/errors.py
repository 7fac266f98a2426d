"""Exception hierarchy shared by all modules."""


class FracDecayError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(FracDecayError, ValueError):
    """A parameter is outside its admissible range."""


class ShapeError(FracDecayError, ValueError):
    """Two objects live on incompatible grids or time axes."""


class UnsupportedDomainError(ParameterError):
    """A function was asked for a value outside its implemented branch."""


class UndefinedRatioError(FracDecayError, ArithmeticError):
    """A ratio is undefined because its denominator vanishes."""


class SolverError(FracDecayError, RuntimeError):
    """A nonlinear iteration or linear solve failed.

    ``step`` holds the time-step index when the failure happened inside a
    time-marching loop, otherwise ``None``.
    """

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class FitError(FracDecayError, ValueError):
    """A decay fit cannot be performed on the given window."""
