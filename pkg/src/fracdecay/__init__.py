"""fracdecay: decay of L^s norms for evolution equations with mixed
fractional/classical time derivatives.

Submodules: :mod:`~fracdecay.grid`, :mod:`~fracdecay.frac_time`,
:mod:`~fracdecay.operators`, :mod:`~fracdecay.barriers`,
:mod:`~fracdecay.evolve`, :mod:`~fracdecay.analysis` and the command line
front end :mod:`~fracdecay.cli`.
"""

from .errors import (
    FitError,
    FracDecayError,
    ParameterError,
    ShapeError,
    SolverError,
    UndefinedRatioError,
    UnsupportedDomainError,
)
from .frac_time import MixedDerivativeSpec, ScalarHistory, mittag_leffler, solve_scalar_mixed
from .grid import Grid, GridFunction, lebesgue_norm

__version__ = "0.1.0"

__all__ = [
    "FitError",
    "FracDecayError",
    "ParameterError",
    "ShapeError",
    "SolverError",
    "UndefinedRatioError",
    "UnsupportedDomainError",
    "Grid",
    "GridFunction",
    "lebesgue_norm",
    "MixedDerivativeSpec",
    "ScalarHistory",
    "mittag_leffler",
    "solve_scalar_mixed",
    "__version__",
]
