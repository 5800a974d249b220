from abc import ABC, abstractmethod
from typing import List, Sequence, Tuple

import numpy as np

from utils.errors import DomainError, ShapeError
from .expression import Expression, parse_expression
from .jet import Jet


class ScalarField(ABC):
    """Smooth real function of the state with exact forward-mode derivatives.

    Fields are immutable after construction, so evaluation is safe from any thread.
    """

    provenance = "built-in"
    max_order = 2

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ShapeError("field dimension must be >= 1")
        self.dimension = dimension

    @abstractmethod
    def jet(self, x: np.ndarray, order: int = 1) -> Jet:
        """Value, gradient and (order 2) Hessian at x."""

    def value(self, x: Sequence[float]) -> float:
        return self.jet(self._check(x), 1).value

    def __call__(self, x: Sequence[float]) -> float:
        return self.value(x)

    def gradient(self, x: Sequence[float]) -> np.ndarray:
        return self.jet(self._check(x), 1).grad

    def hessian(self, x: Sequence[float]) -> np.ndarray:
        return self.jet(self._check(x), 2).hess

    def _check(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ShapeError(f"expected a state of dimension {self.dimension}, got shape {x.shape}")
        return x

    # arithmetic builds composed fields
    def __add__(self, other: "ScalarField") -> "ScalarField":
        return LinearCombination([(1.0, self), (1.0, other)])

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return LinearCombination([(1.0, self), (-1.0, other)])

    def __mul__(self, other) -> "ScalarField":
        if isinstance(other, ScalarField):
            return ProductField(self, other)
        return LinearCombination([(float(other), self)])

    __rmul__ = __mul__


class ExpressionField(ScalarField):
    provenance = "expression"

    def __init__(self, expression: Expression):
        super().__init__(expression.dimension)
        self.expression = expression

    @classmethod
    def parse(cls, text: str, coordinates: Sequence[str]) -> "ExpressionField":
        return cls(parse_expression(text, coordinates))

    def value(self, x: Sequence[float]) -> float:
        return self.expression.evaluate(self._check(x))

    def jet(self, x: np.ndarray, order: int = 1) -> Jet:
        return self.expression.jet(x, order)

    def __repr__(self) -> str:
        return f"ExpressionField({self.expression.print()!r})"


class ConstantField(ScalarField):
    def __init__(self, constant: float, dimension: int):
        super().__init__(dimension)
        self.constant = float(constant)

    def value(self, x: Sequence[float]) -> float:
        self._check(x)
        return self.constant

    def jet(self, x: np.ndarray, order: int = 1) -> Jet:
        return Jet.constant(self.constant, self.dimension, order)


class CoordinateField(ScalarField):
    """The coordinate function x_k."""

    def __init__(self, index: int, dimension: int):
        super().__init__(dimension)
        if not 0 <= index < dimension:
            raise ShapeError(f"coordinate index {index} out of range for dimension {dimension}")
        self.index = index

    def value(self, x: Sequence[float]) -> float:
        return float(self._check(x)[self.index])

    def jet(self, x: np.ndarray, order: int = 1) -> Jet:
        return Jet.variable(float(x[self.index]), self.index, self.dimension, order)


class LinearCombination(ScalarField):
    provenance = "composed"

    def __init__(self, terms: List[Tuple[float, ScalarField]]):
        if not terms:
            raise ValueError("linear combination needs at least one term")
        super().__init__(terms[0][1].dimension)
        for _, field in terms:
            if field.dimension != self.dimension:
                raise ShapeError("fields of a linear combination must share a dimension")
        self.terms = [(float(c), f) for c, f in terms]
        self.max_order = min(f.max_order for _, f in terms)

    def jet(self, x: np.ndarray, order: int = 1) -> Jet:
        result = None
        for coefficient, field in self.terms:
            term = field.jet(x, order) * coefficient
            result = term if result is None else result + term
        return result


class ProductField(ScalarField):
    provenance = "composed"

    def __init__(self, left: ScalarField, right: ScalarField):
        if left.dimension != right.dimension:
            raise ShapeError("fields of a product must share a dimension")
        super().__init__(left.dimension)
        self.left = left
        self.right = right
        self.max_order = min(left.max_order, right.max_order)

    def jet(self, x: np.ndarray, order: int = 1) -> Jet:
        return self.left.jet(x, order) * self.right.jet(x, order)


def coordinate_fields(dimension: int) -> List[CoordinateField]:
    return [CoordinateField(k, dimension) for k in range(dimension)]


def gradient(field: ScalarField, x: Sequence[float]) -> np.ndarray:
    """Exact gradient by forward mode."""
    return field.gradient(x)


def hessian(field: ScalarField, x: Sequence[float]) -> np.ndarray:
    """Exact Hessian by second-order forward mode."""
    return field.hessian(x)


def fd_gradient(field: ScalarField, x: Sequence[float], h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient (f(x+h e_i) - f(x-h e_i)) / 2h; an oracle only."""
    if not h > 0:
        raise ValueError("finite-difference step h must be > 0")
    x = np.asarray(x, dtype=float)
    result = np.empty(len(x))
    for i in range(len(x)):
        forward, backward = x.copy(), x.copy()
        forward[i] += h
        backward[i] -= h
        result[i] = (field.value(forward) - field.value(backward)) / (2.0 * h)
    if not np.all(np.isfinite(result)):
        raise DomainError(f"non-finite finite-difference gradient at {x.tolist()}")
    return result


def fd_hessian(field: ScalarField, x: Sequence[float], h: float = 1e-4) -> np.ndarray:
    """Central differences of the exact gradient."""
    if not h > 0:
        raise ValueError("finite-difference step h must be > 0")
    x = np.asarray(x, dtype=float)
    m = len(x)
    result = np.empty((m, m))
    for j in range(m):
        forward, backward = x.copy(), x.copy()
        forward[j] += h
        backward[j] -= h
        result[:, j] = (field.gradient(forward) - field.gradient(backward)) / (2.0 * h)
    return result
