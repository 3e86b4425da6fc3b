"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    pass


class MeshParseError(ValueError):
    """Malformed or unsupported mesh file; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateCellError(ValueError):
    pass


class SingularMatrixError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    """Iterative solve stopped before reaching its tolerance.

    The best iterate and its true relative residual are kept so callers can
    decide whether to accept it.
    """

    def __init__(self, message, x=None, residual=None, report=None):
        super().__init__(message)
        self.x = x
        self.residual = residual
        self.report = report


class PoleError(ZeroDivisionError):
    pass


class InvalidSurfaceError(ValueError):
    pass


class ConfigError(ValueError):
    pass
