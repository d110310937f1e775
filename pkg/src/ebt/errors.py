"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a formula (also used for bad indices)."""


class InfeasibleError(ValueError):
    """No admissible solution exists, e.g. the Chernoff minimizer would be negative."""


class QuadratureError(ArithmeticError):
    """Numerical integration did not reach the requested accuracy."""

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the field or line."""
