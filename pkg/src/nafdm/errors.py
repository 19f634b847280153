"""Exception types raised across the package."""


class NafdmError(Exception):
    """Base class for all errors raised by :mod:`nafdm`."""


class InvalidDimension(NafdmError, ValueError):
    """A size or vector length is not acceptable."""


class InvalidParameter(NafdmError, ValueError):
    """A scalar parameter is out of its valid range."""


class FastPathUnavailable(NafdmError):
    """``N / alpha`` is not an integer, so the zero-padded IDFT cannot be used."""


class InsufficientCP(NafdmError, ValueError):
    """The cyclic prefix is shorter than the channel delay spread."""


class NumericalError(NafdmError, ArithmeticError):
    """Non-finite values were fed into or produced by a numerical routine."""


class ConfigError(NafdmError, ValueError):
    """A run configuration file could not be parsed or validated."""
