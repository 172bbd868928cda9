"""Exception hierarchy shared across the package.

The CLI maps :class:`InputError` subclasses to exit status 2 and
:class:`NumericalError` subclasses to exit status 3.
"""


class CoarseWageError(Exception):
    """Base class for all package errors."""


class InputError(CoarseWageError, ValueError):
    """Bad input data or configuration."""


class NoDataError(InputError):
    """An operation received an empty sample."""


class DomainError(InputError):
    """An argument lies outside the domain of a formula."""


class ConfigError(InputError):
    """Invalid configuration. ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class SchemaError(InputError):
    """A CSV file does not match the canonical schema."""

    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class NumericalError(CoarseWageError, ArithmeticError):
    """A numerical procedure could not produce an answer."""


class InfeasibleFitError(NumericalError):
    """Too few usable bins or a rank-deficient local design."""

    def __init__(self, message, bin=None):
        super().__init__(message)
        self.bin = bin


class ConvergenceError(NumericalError):
    """Iterative fixed-effect absorption did not converge."""

    def __init__(self, message, sweeps=None, max_abs_mean=None):
        super().__init__(message)
        self.sweeps = sweeps
        self.max_abs_mean = max_abs_mean


class CollinearityError(NumericalError):
    """A regressor is (numerically) collinear with the others."""

    def __init__(self, name):
        super().__init__(
            f"regressor {name!r} is collinear with the fixed effects or other regressors"
        )
        self.name = name


class InsufficientSupportError(NoDataError):
    """Too few observations on one side of a discontinuity. ``side`` names it."""

    def __init__(self, side, message):
        super().__init__(f"{side}: {message}")
        self.side = side
