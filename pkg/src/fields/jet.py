"""Forward-mode differentiation over truncated Taylor jets.

A `Jet` carries a value together with its gradient and (optionally) its Hessian
with respect to the m state coordinates. Order 1 jets are plain vector-tangent
dual numbers; order 2 jets propagate the second-order term as well, which is
what nested dual numbers compute, without the m^2 re-evaluations.
"""

import math
from typing import Optional, Union

import numpy as np

from utils.errors import DomainError

Number = Union[int, float]


class Jet:
    __slots__ = ("value", "grad", "hess")

    def __init__(self, value: float, grad: np.ndarray, hess: Optional[np.ndarray] = None):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    # ---------- construction ----------
    @classmethod
    def constant(cls, value: Number, m: int, order: int = 1) -> "Jet":
        return cls(value, np.zeros(m), np.zeros((m, m)) if order >= 2 else None)

    @classmethod
    def variable(cls, value: Number, index: int, m: int, order: int = 1) -> "Jet":
        grad = np.zeros(m)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((m, m)) if order >= 2 else None)

    @property
    def order(self) -> int:
        return 2 if self.hess is not None else 1

    @property
    def dimension(self) -> int:
        return self.grad.shape[0]

    def _coerce(self, other: Union["Jet", Number]) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.dimension, self.order)

    def _chain(self, f0: float, f1: float, f2: float) -> "Jet":
        """Compose a scalar function with value f0, slope f1, curvature f2."""
        grad = f1 * self.grad
        hess = None
        if self.hess is not None:
            hess = f1 * self.hess + f2 * np.outer(self.grad, self.grad)
        return Jet(f0, grad, hess)

    # ---------- arithmetic ----------
    def __add__(self, other: Union["Jet", Number]) -> "Jet":
        o = self._coerce(other)
        hess = None if self.hess is None or o.hess is None else self.hess + o.hess
        return Jet(self.value + o.value, self.grad + o.grad, hess)

    __radd__ = __add__

    def __sub__(self, other: Union["Jet", Number]) -> "Jet":
        o = self._coerce(other)
        hess = None if self.hess is None or o.hess is None else self.hess - o.hess
        return Jet(self.value - o.value, self.grad - o.grad, hess)

    def __rsub__(self, other: Union["Jet", Number]) -> "Jet":
        return self._coerce(other) - self

    def __neg__(self) -> "Jet":
        return Jet(-self.value, -self.grad, None if self.hess is None else -self.hess)

    def __mul__(self, other: Union["Jet", Number]) -> "Jet":
        o = self._coerce(other)
        hess = None
        if self.hess is not None and o.hess is not None:
            cross = np.outer(self.grad, o.grad)
            hess = self.hess * o.value + o.hess * self.value + cross + cross.T
        return Jet(self.value * o.value, self.grad * o.value + o.grad * self.value, hess)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        if self.value == 0.0:
            raise DomainError("division by zero")
        inv = 1.0 / self.value
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other: Union["Jet", Number]) -> "Jet":
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other: Union["Jet", Number]) -> "Jet":
        return self._coerce(other) * self.reciprocal()

    def integer_power(self, n: int) -> "Jet":
        """Exponentiation by repeated multiplication (negative n via reciprocal)."""
        if n == 0:
            return Jet.constant(1.0, self.dimension, self.order)
        base = self if n > 0 else self.reciprocal()
        n = abs(n)
        result = None
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __pow__(self, other: Union["Jet", Number]) -> "Jet":
        if not isinstance(other, Jet):
            if float(other).is_integer():
                return self.integer_power(int(other))
            if self.value <= 0.0:
                raise DomainError(f"non-integer power of non-positive base {self.value!r}")
            p = float(other)
            v = self.value ** p
            return self._chain(v, p * self.value ** (p - 1.0), p * (p - 1.0) * self.value ** (p - 2.0))
        if self.value <= 0.0:
            raise DomainError(f"variable exponent requires a positive base, got {self.value!r}")
        return (other * self.log()).exp()

    # ---------- elementary functions ----------
    def sin(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(s, c, -s)

    def cos(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(c, -s, -c)

    def exp(self) -> "Jet":
        try:
            e = math.exp(self.value)
        except OverflowError:
            raise DomainError(f"exp overflow at {self.value!r}") from None
        return self._chain(e, e, e)

    def log(self) -> "Jet":
        if self.value <= 0.0:
            raise DomainError(f"log of non-positive value {self.value!r}")
        inv = 1.0 / self.value
        return self._chain(math.log(self.value), inv, -inv * inv)

    def sqrt(self) -> "Jet":
        if self.value < 0.0:
            raise DomainError(f"sqrt of negative value {self.value!r}")
        if self.value == 0.0:
            raise DomainError("sqrt is not differentiable at 0")
        r = math.sqrt(self.value)
        return self._chain(r, 0.5 / r, -0.25 / (r * self.value))

    def is_finite(self) -> bool:
        if not math.isfinite(self.value) or not np.all(np.isfinite(self.grad)):
            return False
        return self.hess is None or bool(np.all(np.isfinite(self.hess)))

    def __repr__(self) -> str:
        return f"Jet(value={self.value!r}, grad={self.grad.tolist()!r}, order={self.order})"


def seed_variables(x: np.ndarray, order: int = 1) -> list:
    """Independent-variable jets for every coordinate of x."""
    m = len(x)
    return [Jet.variable(float(x[i]), i, m, order) for i in range(m)]


def determinant(entries: list) -> Jet:
    """Determinant of a square grid of jets by Gaussian elimination (no pivoting).

    Intended for positive-definite matrices, whose leading minors are nonzero.
    """
    m = len(entries)
    a = [list(row) for row in entries]
    det = None
    for k in range(m):
        pivot = a[k][k]
        if pivot.value == 0.0:
            raise DomainError("zero pivot in determinant; matrix is not positive definite")
        det = pivot if det is None else det * pivot
        inv = pivot.reciprocal()
        for i in range(k + 1, m):
            factor = a[i][k] * inv
            for j in range(k + 1, m):
                a[i][j] = a[i][j] - factor * a[k][j]
    return det
