"""Exception types raised across the package."""


class BmoczError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BmoczError, ValueError):
    """Invalid parameters or an inconsistent combination of them."""


class AmbiguityError(BmoczError, ValueError):
    """A zero modulus too close to the unit circle to decide a bit."""


class NumericalError(BmoczError, ArithmeticError):
    """A computation produced a non-finite or ill-conditioned result."""


class ResourceError(BmoczError):
    """Requested enumeration exceeds the supported size."""
