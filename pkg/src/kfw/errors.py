"""Exception types shared across the package."""


class KfwError(Exception):
    """Base class for all package errors."""


class ParameterError(KfwError, ValueError):
    """An argument is outside the documented domain of an operation."""


class DimensionError(ParameterError):
    """Array shapes do not agree."""


class NumericalError(KfwError, ArithmeticError):
    """A solver produced a non-finite value."""


class UnsupportedError(KfwError, NotImplementedError):
    """The requested combination of objective/set/algorithm is not available."""


class ConfigError(KfwError):
    """A run configuration failed validation.

    ``errors`` holds one message per problem found, each prefixed with the
    line number when the source text is known.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
