"""Downlink coverage of orthogonal random precoding in massive MIMO.

Closed-form coverage (``analytic``), an independent quadrature oracle
(``oracle``), a reproducible Monte Carlo link simulator (``simulator``) and a
command line front end (``cli``).
"""

from .core import (
    BeamBudgetExceeded,
    CoverageError,
    DegenerateBreakpoint,
    DimensionError,
    NonPositiveParameter,
    NumericalInstability,
    Scheme,
    SchemeShapeMismatch,
    SystemConfig,
    ToleranceNotMet,
    db_to_linear,
    linear_to_db,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "BeamBudgetExceeded",
    "CoverageError",
    "DegenerateBreakpoint",
    "DimensionError",
    "NonPositiveParameter",
    "NumericalInstability",
    "Scheme",
    "SchemeShapeMismatch",
    "SystemConfig",
    "ToleranceNotMet",
    "db_to_linear",
    "linear_to_db",
    "validate",
    "__version__",
]
