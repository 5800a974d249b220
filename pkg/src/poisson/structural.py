from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from fields.scalar import ConstantField, ScalarField
from fields.jet import Jet
from utils.errors import ShapeError
from .structure import StructureMatrixField


@dataclass(frozen=True)
class StructuralPoint:
    """Everything the brackets need from (J, chi) at a single state."""

    x: np.ndarray
    J: np.ndarray          # J_jk
    dJ: np.ndarray         # dJ[l, j, k] = d_l J_jk
    chi: float
    A: np.ndarray          # A_i = d_i chi
    b: np.ndarray          # b_k = sum_j A_j J_jk
    chi_hessian: Optional[np.ndarray] = None

    @property
    def dimension(self) -> int:
        return len(self.x)

    def covariant_gradient(self, fjet: Jet) -> np.ndarray:
        return fjet.grad + self.A * fjet.value

    def covariant_gradient_jacobian(self, fjet: Jet) -> np.ndarray:
        """dD[l, i] = d_l (d_i f + A_i f); needs order-2 jets for f and chi."""
        if fjet.hess is None or self.chi_hessian is None:
            raise ValueError("second derivatives required for the covariant-gradient Jacobian")
        return fjet.hess + self.chi_hessian * fjet.value + np.outer(fjet.grad, self.A)


class StructuralData:
    """Structural function chi with A = grad chi and b = A^T J derived on demand."""

    def __init__(self, chi: ScalarField):
        self.chi = chi

    @classmethod
    def trivial(cls, dimension: int, constant: float = 0.0) -> "StructuralData":
        return cls(ConstantField(constant, dimension))

    @property
    def dimension(self) -> int:
        return self.chi.dimension

    @property
    def is_trivial(self) -> bool:
        return isinstance(self.chi, ConstantField)

    def vector(self, x: Sequence[float]) -> np.ndarray:
        """A(x) = grad chi."""
        return self.chi.gradient(x)

    def covector(self, J: StructureMatrixField, x: Sequence[float]) -> np.ndarray:
        """b(x) with b_k = sum_j A_j J_jk."""
        return self.vector(x) @ J.value(x)

    def at(self, J: StructureMatrixField, x: Sequence[float], order: int = 1) -> StructuralPoint:
        x = np.asarray(x, dtype=float)
        if J.dimension != self.dimension or x.shape != (self.dimension,):
            raise ShapeError(
                f"structure matrix ({J.dimension}), chi ({self.dimension}) and state {x.shape} disagree"
            )
        chi = self.chi.jet(x, order)
        M = J.value(x)
        return StructuralPoint(
            x=x,
            J=M,
            dJ=J.partials(x),
            chi=chi.value,
            A=chi.grad,
            b=chi.grad @ M,
            chi_hessian=chi.hess,
        )
