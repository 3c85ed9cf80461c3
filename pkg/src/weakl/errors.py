"""Exception hierarchy shared by the library and the command line."""


class WeaklError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1
    category = "error"


class ConfigError(WeaklError, ValueError):
    exit_code = 2
    category = "config"


class DataError(WeaklError, ValueError):
    exit_code = 3
    category = "data"


class NumericalError(WeaklError, ArithmeticError):
    exit_code = 4
    category = "numerical"


class SingularSystemError(NumericalError):
    """The regularized Gram matrix could not be factorized."""

    def __init__(self, message, zero_blocks=()):
        super().__init__(message)
        self.zero_blocks = tuple(zero_blocks)
