"""Exception hierarchy shared by every qlogad module."""


class QlogadError(Exception):
    """Base class; the CLI turns any of these into a nonzero exit code."""


class ConfigurationError(QlogadError, ValueError):
    pass


class PreconditionError(QlogadError, ValueError):
    pass


class InputError(QlogadError, ValueError):
    pass


class NormalizationError(QlogadError, ValueError):
    pass


class UnsupportedGradientError(QlogadError):
    pass


class DataError(QlogadError):
    pass
