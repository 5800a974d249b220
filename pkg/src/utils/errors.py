from typing import Any, Optional


class CovhamError(Exception):
    """Base class for every error raised by the library."""


class ExpressionSyntaxError(CovhamError, ValueError):
    """Malformed expression text."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at offset {position}")


class UnknownIdentifierError(CovhamError, ValueError):
    def __init__(self, name: str, position: int = -1):
        self.name = name
        self.position = position
        where = f" at offset {position}" if position >= 0 else ""
        super().__init__(f"unknown identifier '{name}'{where}")


class DomainError(CovhamError, ArithmeticError):
    """Evaluation left the domain of a function (log of a non-positive value, ...)."""


class ShapeError(CovhamError, ValueError):
    pass


class SkewSymmetryError(CovhamError, ValueError):
    def __init__(self, message: str, entry: Optional[tuple] = None, residual: float = 0.0):
        self.entry = entry
        self.residual = residual
        super().__init__(message)


class MetricError(CovhamError, ValueError):
    """Metric is not symmetric, not positive definite, or singular."""


class MetricDomainError(MetricError, DomainError):
    """The metric stopped being one at a point reached during evaluation."""


class DegenerateStructureError(CovhamError, ArithmeticError):
    """Structure matrix is (numerically) singular where a nondegenerate one is required."""

    def __init__(self, message: str, residual: float = float("nan"), state: Any = None):
        self.residual = residual
        self.state = state
        super().__init__(message)


class SingularJacobianError(CovhamError, ArithmeticError):
    def __init__(self, message: str, state: Any = None):
        self.state = state
        super().__init__(message)


class ConvergenceError(CovhamError, ArithmeticError):
    def __init__(self, message: str, iterations: int, residual: float, state: Any = None):
        self.iterations = iterations
        self.residual = residual
        self.state = state
        super().__init__(message)


class BlowUpError(CovhamError, ArithmeticError):
    """Integration produced a non-finite state."""

    def __init__(self, time: float, trajectory: Any = None, reason: str = "non-finite state encountered"):
        self.time = time
        self.trajectory = trajectory
        self.reason = reason
        super().__init__(f"{reason} at t={time!r}")


class ScenarioError(CovhamError, ValueError):
    """Scenario file failed to parse or validate; `field` is the dotted location."""

    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(f"{field} {message}".strip())
