"""Exception types shared across the package."""


class OnlineSearchError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(OnlineSearchError, ValueError):
    """An argument is outside its valid domain."""


class RangeError(ParameterError):
    """A prefix length lies outside ``[1, horizon]``."""


class NoFeasibleLength(ParameterError):
    """No prefix length satisfies a Max-Length query."""


class ConfigurationError(OnlineSearchError, ValueError):
    """A fixture, family or coupon set is malformed."""


class InfeasibleError(OnlineSearchError):
    """A purchase plan leaves some time step uncovered."""


class CapacityError(OnlineSearchError):
    """A brute-force routine was asked to enumerate too large a space."""


class ValidationError(ConfigurationError):
    """An experiment config failed validation.

    ``path`` is the dotted location of the offending field.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)
