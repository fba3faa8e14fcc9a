"""Exception hierarchy shared across the package."""


class WGError(Exception):
    """Base class for all package errors."""


class InvalidArgument(WGError, ValueError):
    pass


class InvalidProblem(WGError, ValueError):
    """Problem data violates a modelling assumption (e.g. kappa_inv <= 0)."""


class InvalidData(WGError, ValueError):
    pass


class ParseError(WGError, ValueError):
    """Malformed input file; ``lineno`` is 1-based when known."""

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}"
        super().__init__(f"{where}: {message}" if where else message)


class ConfigError(WGError, ValueError):
    """Configuration problem; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key {key!r}: {message}")


class InternalError(WGError, RuntimeError):
    pass


class NoConvergence(WGError, RuntimeError):
    """Iterative solver ran out of iterations.

    The best iterate and its relative residual are attached so callers can
    decide whether to keep it.
    """

    def __init__(self, message, residual=None, x=None, history=None):
        self.residual = residual
        self.x = x
        self.history = history
        super().__init__(message)


class SingularSystem(WGError, RuntimeError):
    pass
