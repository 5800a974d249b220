"""Generalized structural Poisson bracket and the operators built from it.

Conventions: D_i f = d_i f + A_i f with A = grad chi, and b = A^T J (b_k = sum_j A_j J_jk),
so the structural operator is S f = b . grad f and {f, g} = sum_ij J_ij D_i f D_j g.
"""

from typing import Sequence

import numpy as np

from fields.jet import Jet
from fields.scalar import ScalarField
from .structural import StructuralData, StructuralPoint
from .structure import StructureMatrixField


def _jet(f: ScalarField, x: np.ndarray, order: int = 1) -> Jet:
    return f.jet(f._check(x), order)


def covariant_gradient(f: ScalarField, S: StructuralData, x: Sequence[float]) -> np.ndarray:
    """D_i f = d_i f + A_i f(x)."""
    fj = _jet(f, x)
    return fj.grad + S.vector(x) * fj.value


def gpb(f: ScalarField, g: ScalarField, J: StructureMatrixField, x: Sequence[float]) -> float:
    """Classical bracket sum_ij J_ij d_i f d_j g."""
    return float(f.gradient(x) @ J.value(x) @ g.gradient(x))


def _gspb_at(point: StructuralPoint, fj: Jet, gj: Jet) -> float:
    return float(point.covariant_gradient(fj) @ point.J @ point.covariant_gradient(gj))


def gspb(f: ScalarField, g: ScalarField, J: StructureMatrixField, S: StructuralData,
         x: Sequence[float]) -> float:
    """{f, g} = sum_ij J_ij D_i f D_j g."""
    point = S.at(J, x)
    return _gspb_at(point, _jet(f, x), _jet(g, x))


def structural_operator(f: ScalarField, J: StructureMatrixField, S: StructuralData,
                        x: Sequence[float]) -> float:
    """S f = sum_j b_j d_j f, the action of the structure vector field X_chi."""
    return float(S.covector(J, x) @ f.gradient(x))


def x_chi_pair(f: ScalarField, g: ScalarField, J: StructureMatrixField, S: StructuralData,
               x: Sequence[float]) -> float:
    """X_chi(f, g) = f S g - g S f."""
    b = S.covector(J, x)
    fj, gj = _jet(f, x), _jet(g, x)
    return float(fj.value * (b @ gj.grad) - gj.value * (b @ fj.grad))


def hamiltonian_vector_field(f: ScalarField, J: StructureMatrixField, x: Sequence[float]) -> np.ndarray:
    """X_f = J grad f, so X_H is the right-hand side of Hamilton's equations."""
    return J.value(x) @ f.gradient(x)


def modified_vector_field(f: ScalarField, J: StructureMatrixField, S: StructuralData,
                          x: Sequence[float]) -> np.ndarray:
    """X_f^M = X_f + f X_chi, with X_chi carrying components b."""
    point = S.at(J, x)
    fj = _jet(f, x)
    return point.J @ fj.grad + fj.value * point.b


def extended_structure_matrix(J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> np.ndarray:
    """W_kl = J_kl + x_k b_l - x_l b_k, the bracket of coordinate functions."""
    point = S.at(J, x)
    return point.J + np.outer(point.x, point.b) - np.outer(point.b, point.x)


class BracketField(ScalarField):
    """The function x -> {g, h}(x) with its gradient, for nesting brackets.

    The gradient uses second derivatives of g, h and chi, so only first-order jets
    of the bracket itself are available.
    """

    provenance = "composed"
    max_order = 1

    def __init__(self, g: ScalarField, h: ScalarField, J: StructureMatrixField, S: StructuralData):
        super().__init__(J.dimension)
        self.g = g
        self.h = h
        self.J = J
        self.S = S

    def jet(self, x: np.ndarray, order: int = 1) -> Jet:
        if order > 1:
            raise NotImplementedError("bracket fields provide first derivatives only")
        point = self.S.at(self.J, x, order=2)
        gj, hj = self.g.jet(x, 2), self.h.jet(x, 2)
        Dg, Dh = point.covariant_gradient(gj), point.covariant_gradient(hj)
        value = float(Dg @ point.J @ Dh)
        grad = (np.einsum("lij,i,j->l", point.dJ, Dg, Dh)
                + point.covariant_gradient_jacobian(gj) @ (point.J @ Dh)
                + point.covariant_gradient_jacobian(hj) @ (point.J.T @ Dg))
        return Jet(value, grad)

    def __repr__(self) -> str:
        return f"BracketField({self.g!r}, {self.h!r})"
