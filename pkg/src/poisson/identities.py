"""Numerical residuals of the bracket identities.

Each function returns a non-negative residual (or the raw quantities, where no identity
is claimed); pass/fail decisions belong to the caller.
"""

from typing import Sequence, Tuple

import numpy as np

from fields.scalar import ProductField, ScalarField
from .brackets import BracketField, gpb, gspb, structural_operator, x_chi_pair, extended_structure_matrix
from .structural import StructuralData
from .structure import StructureMatrixField


def gji_terms(J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> np.ndarray:
    """T[i, j, k] = sum_l J_il D_l J_jk with D_l J_jk = d_l J_jk + A_l J_jk."""
    point = S.at(J, x)
    DJ = point.dJ + point.A[:, None, None] * point.J[None, :, :]
    return np.einsum("il,ljk->ijk", point.J, DJ)


def gji_tensor(J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> np.ndarray:
    """C[i, j, k] = T[i, j, k] + T[j, k, i] + T[k, i, j], the cyclic sums of gji_terms."""
    T = gji_terms(J, S, x)
    return T + np.einsum("jki->ijk", T) + np.einsum("kij->ijk", T)


def gji_worst(J: StructureMatrixField, S: StructuralData,
              x: Sequence[float]) -> Tuple[float, Tuple[int, int, int]]:
    """Largest cyclic-sum magnitude and the (0-based) index triple where it occurs."""
    C = np.abs(gji_tensor(J, S, x))
    worst = np.unravel_index(int(np.argmax(C)), C.shape)
    return float(C[worst]), tuple(int(i) for i in worst)


def gji_residual(J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> float:
    """Admissibility residual of the pair (J, chi); zero iff the generalized Jacobi condition holds at x."""
    return float(np.max(np.abs(gji_tensor(J, S, x))))


def jacobi_residual(J: StructureMatrixField, x: Sequence[float]) -> float:
    """Classical Jacobi condition on J alone."""
    return gji_residual(J, StructuralData.trivial(J.dimension), x)


def jacobiator_residual(f: ScalarField, g: ScalarField, h: ScalarField, J: StructureMatrixField,
                        S: StructuralData, x: Sequence[float]) -> float:
    """|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|."""
    total = (gspb(f, BracketField(g, h, J, S), J, S, x)
             + gspb(g, BracketField(h, f, J, S), J, S, x)
             + gspb(h, BracketField(f, g, J, S), J, S, x))
    return abs(total)


def s_product_residual(f: ScalarField, g: ScalarField, J: StructureMatrixField, S: StructuralData,
                       x: Sequence[float]) -> float:
    """|S(fg) - X_chi(f, g) - 2 g S f|."""
    fg = ProductField(f, g)
    return abs(structural_operator(fg, J, S, x) - x_chi_pair(f, g, J, S, x)
               - 2.0 * g.value(x) * structural_operator(f, J, S, x))


def decomposition_residual(f: ScalarField, g: ScalarField, J: StructureMatrixField, S: StructuralData,
                           x: Sequence[float]) -> float:
    """|{f,g} - {f,g}_classical - X_chi(f,g)|."""
    return abs(gspb(f, g, J, S, x) - gpb(f, g, J, x) - x_chi_pair(f, g, J, S, x))


def leibniz_defect(f: ScalarField, g: ScalarField, h: ScalarField, J: StructureMatrixField,
                   S: StructuralData, x: Sequence[float]) -> float:
    """{fg, h} - f{g, h} - g{f, h}; equals -f g S h, so the bracket is not a derivation."""
    fg = ProductField(f, g)
    return (gspb(fg, h, J, S, x) - f.value(x) * gspb(g, h, J, S, x)
            - g.value(x) * gspb(f, h, J, S, x))


def generalized_leibniz_residual(f: ScalarField, g: ScalarField, h: ScalarField, J: StructureMatrixField,
                                 S: StructuralData, x: Sequence[float]) -> float:
    """|{fg, h} - {fg, h}_classical - X_chi(fg, h)|."""
    return decomposition_residual(ProductField(f, g), h, J, S, x)


def vector_field_form_residual(f: ScalarField, g: ScalarField, J: StructureMatrixField, S: StructuralData,
                               x: Sequence[float]) -> float:
    """|{f,g} - (X_f g + g X_f chi + f X_chi g)| with X_f g the classical bracket."""
    chi = S.chi
    expected = (gpb(f, g, J, x) + g.value(x) * gpb(f, chi, J, x)
                + f.value(x) * structural_operator(g, J, S, x))
    return abs(gspb(f, g, J, S, x) - expected)


def nondegeneracy_sides(f: ScalarField, g: ScalarField, J: StructureMatrixField, S: StructuralData,
                        x: Sequence[float]) -> Tuple[float, float]:
    """({f,g}_classical, X_chi(g,f)); reported side by side, no identity asserted."""
    return gpb(f, g, J, x), x_chi_pair(g, f, J, S, x)


def antisymmetry_residual(f: ScalarField, g: ScalarField, J: StructureMatrixField, S: StructuralData,
                          x: Sequence[float]) -> float:
    return abs(gspb(f, g, J, S, x) + gspb(g, f, J, S, x))


def annihilation_residual(J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> float:
    """|b . A| = |A^T J A|."""
    point = S.at(J, x)
    return abs(float(point.b @ point.A))


def chi_invariance_residual(J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> float:
    """|S chi|."""
    return abs(structural_operator(S.chi, J, S, x))


def w_antisymmetry_residual(J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> float:
    W = extended_structure_matrix(J, S, x)
    return float(np.max(np.abs(W + W.T)))
