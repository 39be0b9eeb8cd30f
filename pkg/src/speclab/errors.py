"""Exception types raised across speclab."""


class SpeclabError(Exception):
    """Base class for all speclab errors."""


class InvalidRangeError(SpeclabError, ValueError):
    pass


class ShapeMismatchError(SpeclabError, ValueError):
    pass


class EigensolverError(SpeclabError, RuntimeError):
    pass


class SpectralRangeError(SpeclabError, ValueError):
    """The rescaled spectrum leaves the window where the semigroup series is valid."""


class SupportViolationError(SpeclabError, ValueError):
    pass


class DegenerateFitError(SpeclabError, ValueError):
    pass


class InsufficientRangeError(SpeclabError, ValueError):
    pass


class QuadratureError(SpeclabError, RuntimeError):
    def __init__(self, message, achieved_tol=None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class ConfigError(SpeclabError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TruncationWarning(UserWarning):
    pass


class CoverageWarning(UserWarning):
    pass


class QuadratureWarning(UserWarning):
    pass
