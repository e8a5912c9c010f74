"""Exception hierarchy shared by every module."""


class StochevolError(Exception):
    """Base class for all package errors."""


class ParameterError(StochevolError, ValueError):
    """A numeric parameter is outside its admissible range."""


class ShapeError(StochevolError, ValueError):
    """Array dimensions or grids do not match."""


class CoefficientError(StochevolError, ValueError):
    """A diffusion or reaction coefficient violates its lower bound."""


class SpectralError(StochevolError, ValueError):
    """Input to the spectral calculus is not symmetric positive definite."""


class SingularityError(StochevolError, ArithmeticError):
    """A resolvent was requested at a point of the spectrum."""


class NumericError(StochevolError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class OrderingError(StochevolError, ValueError):
    """Times or parameters given in the wrong order."""


class InsufficientDataError(StochevolError, ValueError):
    """Too few samples, paths or lags for the requested statistic."""


class HypothesisError(StochevolError, ValueError):
    """A structural hypothesis of the theory fails.

    ``condition`` names the failing condition, e.g. ``"(F1)"`` or ``"(G1)"``.
    """

    def __init__(self, condition, message):
        self.condition = condition
        super().__init__(f"{condition}: {message}")


class ConfigError(StochevolError, ValueError):
    """Run configuration could not be parsed or validated."""

    def __init__(self, message, problems=None):
        self.problems = list(problems or [])
        if self.problems:
            message = message + "\n  - " + "\n  - ".join(self.problems)
        super().__init__(message)
