from itertools import product
from typing import List, Sequence

import numpy as np

from utils.errors import ShapeError
from .jet import Jet
from .scalar import ScalarField


def monomial_exponents(dimension: int, degree: int) -> np.ndarray:
    """All exponent vectors of total degree <= degree, in lexicographic order."""
    rows = [e for e in product(range(degree + 1), repeat=dimension) if sum(e) <= degree]
    return np.array(rows, dtype=int).reshape(len(rows), dimension)


class PolynomialField(ScalarField):
    """Sum of c_k * prod_i x_i^{e_ki} with analytic derivatives."""

    def __init__(self, coefficients: Sequence[float], exponents: np.ndarray):
        exponents = np.asarray(exponents, dtype=int)
        coefficients = np.asarray(coefficients, dtype=float)
        if exponents.ndim != 2 or exponents.shape[0] != coefficients.shape[0]:
            raise ShapeError("need one exponent row per coefficient")
        if np.any(exponents < 0):
            raise ValueError("exponents must be non-negative")
        super().__init__(exponents.shape[1])
        self.coefficients = coefficients
        self.exponents = exponents

    @property
    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max()) if len(self.exponents) else 0

    def _derivative_tables(self, x: np.ndarray):
        e = self.exponents
        powers = x[None, :] ** e
        first = np.where(e >= 1, e * x[None, :] ** np.maximum(e - 1, 0), 0.0)
        second = np.where(e >= 2, e * (e - 1) * x[None, :] ** np.maximum(e - 2, 0), 0.0)
        return powers, first, second

    def value(self, x: Sequence[float]) -> float:
        x = self._check(x)
        return float(self.coefficients @ np.prod(x[None, :] ** self.exponents, axis=1))

    def jet(self, x: np.ndarray, order: int = 1) -> Jet:
        x = np.asarray(x, dtype=float)
        m = self.dimension
        powers, first, second = self._derivative_tables(x)
        c = self.coefficients
        value = float(c @ np.prod(powers, axis=1))
        grad = np.empty(m)
        for i in range(m):
            factors = powers.copy()
            factors[:, i] = first[:, i]
            grad[i] = c @ np.prod(factors, axis=1)
        hess = None
        if order >= 2:
            hess = np.empty((m, m))
            for i in range(m):
                for j in range(i, m):
                    factors = powers.copy()
                    if i == j:
                        factors[:, i] = second[:, i]
                    else:
                        factors[:, i] = first[:, i]
                        factors[:, j] = first[:, j]
                    hess[i, j] = hess[j, i] = c @ np.prod(factors, axis=1)
        return Jet(value, grad, hess)

    def terms(self) -> List[tuple]:
        return [(float(c), tuple(int(v) for v in e)) for c, e in zip(self.coefficients, self.exponents)]


def random_polynomial(rng: np.random.Generator, dimension: int, degree: int = 3) -> PolynomialField:
    """Polynomial of total degree <= degree with coefficients uniform in [-1, 1]."""
    exponents = monomial_exponents(dimension, degree)
    coefficients = rng.uniform(-1.0, 1.0, size=len(exponents))
    return PolynomialField(coefficients, exponents)
