"""Exception types shared across the package."""


class SimLossError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(SimLossError, ValueError):
    pass


class InvalidParameterError(SimLossError, ValueError):
    pass


class InvalidMatrixError(SimLossError, ValueError):
    pass


class ShapeError(SimLossError, ValueError):
    pass


class InvalidInputError(SimLossError, ValueError):
    pass


class DataError(SimLossError, ValueError):
    pass


class ParseError(SimLossError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class NoTestPossibleError(SimLossError):
    """All paired differences are zero, so the signed-rank test is undefined."""


class ConfigError(SimLossError, ValueError):
    pass
