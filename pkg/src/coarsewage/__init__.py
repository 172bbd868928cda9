"""Coarse wage-setting: model, simulator, bunching estimator and regression tests."""

from .errors import (
    CoarseWageError, CollinearityError, ConfigError, ConvergenceError, DomainError,
    InfeasibleFitError, InputError, InsufficientSupportError, NoDataError, NumericalError,
    SchemaError,
)

__version__ = "0.1.0"
