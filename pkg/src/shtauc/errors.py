"""Exception types raised across the package."""


class ShtAucError(Exception):
    """Base class for all package errors."""


class DimensionError(ShtAucError, ValueError):
    pass


class ArgumentError(ShtAucError, ValueError):
    pass


class DegenerateDataError(ShtAucError, ValueError):
    """Data cannot support the requested computation (e.g. a missing class)."""


class EmptyDatasetError(DegenerateDataError):
    pass


class ParseError(ShtAucError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LabelError(ParseError):
    pass


class DivergenceError(ShtAucError, RuntimeError):
    def __init__(self, iteration, value):
        self.iteration = iteration
        self.value = value
        super().__init__(f"objective diverged at iteration {iteration} (value={value!r})")


class UndefinedMetricError(ShtAucError, ValueError):
    pass


class TheoryDomainError(ShtAucError, ValueError):
    """A closed-form bound was evaluated outside the region where it is meaningful."""


class ConfigError(ShtAucError, ValueError):
    pass
