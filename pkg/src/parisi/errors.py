"""Exception types raised across the package."""


class ParisiError(Exception):
    """Base class for every error raised by this package."""


class InvalidMixture(ParisiError, ValueError):
    pass


class InvalidOrderParameter(ParisiError, ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InvalidTemperature(ParisiError, ValueError):
    pass


class InvalidParameter(ParisiError, ValueError):
    pass


class GridTooNarrow(ParisiError, ValueError):
    pass


class InvalidIntegrand(ParisiError, ValueError):
    pass


class UnsupportedOrder(ParisiError, ValueError):
    pass


class NotAParisiMeasure(ParisiError):
    pass


class ResourceLimit(ParisiError):
    pass


class ConfigError(ParisiError, ValueError):
    pass
