class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class ParameterError(DomainError):
    """Family parameters outside the positive-definite range."""

    def __init__(self, message, verdict=None):
        super().__init__(message)
        self.verdict = verdict


class NumericalError(ArithmeticError):
    """A numerical routine failed to reach its target."""


class ToleranceError(NumericalError):
    """Quadrature did not converge; carries the best value and error estimate."""

    def __init__(self, message, value=float("nan"), error=float("inf")):
        super().__init__(message)
        self.value = value
        self.error = error


class FactorizationError(NumericalError):
    def __init__(self, message, min_eigenvalue=float("nan")):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ConfigurationError(DomainError):
    """A check was asked to run on a region or setting outside its hypotheses."""
