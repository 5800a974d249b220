from abc import ABC, abstractmethod
from typing import List, Sequence

import numpy as np

from utils.errors import ShapeError
from .expression import Expression, parse_expression
from .jet import Jet


class MatrixField(ABC):
    """m x m matrix-valued function of the state with entrywise partial derivatives."""

    tag = "matrix"

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ShapeError("matrix field dimension must be >= 1")
        self.dimension = dimension

    @abstractmethod
    def value(self, x: Sequence[float]) -> np.ndarray:
        """Entries at x, shape (m, m)."""

    @abstractmethod
    def partials(self, x: Sequence[float]) -> np.ndarray:
        """d[l, j, k] = partial of entry (j, k) with respect to x_l."""

    def entry_jets(self, x: Sequence[float], order: int = 1) -> List[List[Jet]]:
        """Entries as jets; the default only supports first order."""
        if order > 1:
            raise NotImplementedError(f"{type(self).__name__} provides first derivatives only")
        values, d = self.value(x), self.partials(x)
        m = self.dimension
        return [[Jet(values[j, k], d[:, j, k].copy()) for k in range(m)] for j in range(m)]

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return self.value(x)

    def _check(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ShapeError(f"expected a state of dimension {self.dimension}, got shape {x.shape}")
        return x


class ConstantMatrixField(MatrixField):
    tag = "constant"

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {matrix.shape}")
        super().__init__(matrix.shape[0])
        self.matrix = matrix
        self.matrix.setflags(write=False)

    def value(self, x: Sequence[float]) -> np.ndarray:
        self._check(x)
        return self.matrix.copy()

    def partials(self, x: Sequence[float]) -> np.ndarray:
        self._check(x)
        m = self.dimension
        return np.zeros((m, m, m))

    def entry_jets(self, x: Sequence[float], order: int = 1) -> List[List[Jet]]:
        m = self.dimension
        return [[Jet.constant(self.matrix[j, k], m, order) for k in range(m)] for j in range(m)]


class LinearMatrixField(MatrixField):
    """Entries affine in the state: M_jk(x) = offset_jk + sum_l C[j, k, l] x_l."""

    tag = "linear"

    def __init__(self, coefficients, offset=None):
        coefficients = np.array(coefficients, dtype=float)
        m = coefficients.shape[0]
        if coefficients.shape != (m, m, m):
            raise ShapeError(f"expected coefficients of shape (m, m, m), got {coefficients.shape}")
        super().__init__(m)
        self.coefficients = coefficients
        self.offset = np.zeros((m, m)) if offset is None else np.array(offset, dtype=float)

    def value(self, x: Sequence[float]) -> np.ndarray:
        x = self._check(x)
        return self.offset + np.einsum("jkl,l->jk", self.coefficients, x)

    def partials(self, x: Sequence[float]) -> np.ndarray:
        self._check(x)
        return np.transpose(self.coefficients, (2, 0, 1)).copy()

    def entry_jets(self, x: Sequence[float], order: int = 1) -> List[List[Jet]]:
        x = self._check(x)
        values = self.value(x)
        m = self.dimension
        hess = (lambda: np.zeros((m, m))) if order >= 2 else (lambda: None)
        return [[Jet(values[j, k], self.coefficients[j, k].copy(), hess()) for k in range(m)]
                for j in range(m)]


class ExpressionMatrixField(MatrixField):
    """Entries given as expressions over the state coordinates."""

    tag = "expression-grid"

    def __init__(self, entries: Sequence[Sequence[Expression]]):
        m = len(entries)
        if m == 0 or any(len(row) != m for row in entries):
            raise ShapeError("expression grid must be square and non-empty")
        super().__init__(m)
        for row in entries:
            for expression in row:
                if expression.dimension != m:
                    raise ShapeError(
                        f"grid entry '{expression.text}' is over {expression.dimension} coordinates, expected {m}"
                    )
        self.entries = [list(row) for row in entries]

    @classmethod
    def parse(cls, texts: Sequence[Sequence[str]], coordinates: Sequence[str]) -> "ExpressionMatrixField":
        return cls([[parse_expression(str(t), coordinates) for t in row] for row in texts])

    @classmethod
    def diagonal(cls, texts: Sequence[str], coordinates: Sequence[str]) -> "ExpressionMatrixField":
        m = len(texts)
        grid = [[texts[j] if j == k else "0" for k in range(m)] for j in range(m)]
        return cls.parse(grid, coordinates)

    def value(self, x: Sequence[float]) -> np.ndarray:
        x = self._check(x)
        return np.array([[e.evaluate(x) for e in row] for row in self.entries])

    def partials(self, x: Sequence[float]) -> np.ndarray:
        x = self._check(x)
        m = self.dimension
        d = np.empty((m, m, m))
        for j, row in enumerate(self.entries):
            for k, expression in enumerate(row):
                d[:, j, k] = expression.jet(x, 1).grad
        return d

    def entry_jets(self, x: Sequence[float], order: int = 1) -> List[List[Jet]]:
        x = self._check(x)
        return [[e.jet(x, order) for e in row] for row in self.entries]

    def texts(self) -> List[List[str]]:
        return [[e.text for e in row] for row in self.entries]


def matrix_partials(field: MatrixField, x: Sequence[float]) -> np.ndarray:
    """All m^3 entry partials d[l, j, k] = d_l M_jk at x."""
    return field.partials(x)


def fd_matrix_partials(field: MatrixField, x: Sequence[float], h: float = 1e-5) -> np.ndarray:
    """Central-difference oracle for matrix_partials."""
    if not h > 0:
        raise ValueError("finite-difference step h must be > 0")
    x = np.asarray(x, dtype=float)
    m = field.dimension
    d = np.empty((m, m, m))
    for l in range(m):
        forward, backward = x.copy(), x.copy()
        forward[l] += h
        backward[l] -= h
        d[l] = (field.value(forward) - field.value(backward)) / (2.0 * h)
    return d


__all__ = [
    "MatrixField",
    "ConstantMatrixField",
    "LinearMatrixField",
    "ExpressionMatrixField",
    "matrix_partials",
    "fd_matrix_partials",
]
