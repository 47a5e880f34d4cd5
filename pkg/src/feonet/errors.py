"""Exception types raised across the package."""


class FeonetError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(FeonetError, ValueError):
    pass


class MeshValidationError(FeonetError, ValueError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class CoefficientError(FeonetError, ValueError):
    """A PDE coefficient violates ellipticity at some quadrature point."""


class SingularMatrixError(FeonetError, ArithmeticError):
    pass


class ConvergenceError(FeonetError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericOverflowError(FeonetError, ArithmeticError):
    def __init__(self, message, epoch=None, sample=None):
        super().__init__(message)
        self.epoch = epoch
        self.sample = sample


class ConfigError(FeonetError, ValueError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
