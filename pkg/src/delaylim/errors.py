"""Exception hierarchy shared by all delaylim modules."""


class DelayLimError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(DelayLimError, ValueError):
    """An argument has the wrong shape, is non-finite or is otherwise unusable."""


class DimensionError(InvalidInputError):
    """Matrix or vector dimensions do not agree."""


class InvalidParameterError(DelayLimError, ValueError):
    """A model or algorithm parameter is outside its admissible range."""


class NoVibrationModesError(DelayLimError):
    """The undamped linearization has a nonpositive eigenvalue."""


class UnsupportedOperationError(DelayLimError):
    """The requested operation needs data the object does not carry."""


class ConfigError(DelayLimError):
    """A run configuration is inconsistent or refers to unknown names."""
