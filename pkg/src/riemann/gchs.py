"""Covariant Hamiltonian flow on a Riemannian manifold, written with the Christoffel contraction.

Every function here has a generic counterpart in `dynamics.flow` under
chi = chi_from_metric(g); the formulas below never go through chi itself.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from dynamics.flow import CharacteristicData, FlowDerivatives, characteristic_roots
from fields.scalar import ScalarField
from poisson.structural import StructuralData
from poisson.structure import StructureMatrixField
from utils.errors import MetricDomainError
from .metric import (
    MetricField,
    check_dimension,
    check_metric,
    chi_from_metric,
    christoffel_contraction,
    christoffel_contraction_jacobian,
)


def riemann_structural_data(g: MetricField) -> StructuralData:
    return StructuralData(chi_from_metric(g))


def _terms(H: ScalarField, J: StructureMatrixField, g: MetricField, x: Sequence[float]):
    check_dimension(g, J.dimension)
    x = np.asarray(x, dtype=float)
    check_metric(g, x, error=MetricDomainError)
    gamma = christoffel_contraction(g, x)
    Hj = H.jet(x, 1)
    return x, J.value(x), gamma, Hj


def riemann_tghs(H: ScalarField, J: StructureMatrixField, g: MetricField, x: Sequence[float]) -> np.ndarray:
    """xdot_k = sum_j J_kj d_j H + sum_j J_kj Gamma^l_{lj} H."""
    x, M, gamma, Hj = _terms(H, J, g, x)
    return M @ Hj.grad + (M @ gamma) * Hj.value


def riemann_s_dynamics(H: ScalarField, J: StructureMatrixField, g: MetricField, x: Sequence[float]) -> float:
    """w = sum_ij J_ij Gamma^l_{li} d_j H."""
    x, M, gamma, Hj = _terms(H, J, g, x)
    return float(gamma @ M @ Hj.grad)


def riemann_gchs_rate(H: ScalarField, J: StructureMatrixField, g: MetricField, x: Sequence[float]) -> np.ndarray:
    x, M, gamma, Hj = _terms(H, J, g, x)
    w = float(gamma @ M @ Hj.grad)
    return M @ Hj.grad + (M @ gamma) * Hj.value + x * w


def riemann_equilibrium_split(H: ScalarField, J: StructureMatrixField, g: MetricField,
                              x: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """(B, V) with B_k = sum_j J_kj d_j H + x_k w and V_k = sum_j J_kj d_j log sqrt g."""
    x, M, gamma, Hj = _terms(H, J, g, x)
    w = float(gamma @ M @ Hj.grad)
    return M @ Hj.grad + x * w, M @ gamma


def riemann_equilibrium_residual(H: ScalarField, J: StructureMatrixField, g: MetricField,
                                 x: Sequence[float]) -> np.ndarray:
    """B_k + V_k H(x); vanishes exactly where riemann_gchs_rate does."""
    B, V = riemann_equilibrium_split(H, J, g, x)
    return B + V * H.value(x)


def riemann_flow_derivatives(H: ScalarField, J: StructureMatrixField, g: MetricField,
                             x: Sequence[float]) -> FlowDerivatives:
    check_dimension(g, J.dimension)
    x = np.asarray(x, dtype=float)
    check_metric(g, x, error=MetricDomainError)
    M, dJ = J.value(x), J.partials(x)
    gamma = christoffel_contraction(g, x)
    dgamma = christoffel_contraction_jacobian(g, x)      # [l, i]
    Hj = H.jet(x, 2)
    DH = Hj.grad + gamma * Hj.value
    dDH = Hj.hess + dgamma * Hj.value + np.outer(Hj.grad, gamma)
    xdot = M @ DH
    jacobian = np.einsum("lkj,j->kl", dJ, DH) + M @ dDH.T
    b = gamma @ M
    grad_w = (np.einsum("li,ij,j->l", dgamma, M, Hj.grad)
              + np.einsum("i,lij,j->l", gamma, dJ, Hj.grad)
              + Hj.hess @ b)
    return FlowDerivatives(
        x=x,
        DH=DH,
        xdot=xdot,
        jacobian=jacobian,
        xddot=jacobian @ xdot,
        w=float(b @ Hj.grad),
        grad_w=grad_w,
        dwdt=float(grad_w @ xdot),
        hamiltonian=Hj.value,
    )


def riemann_acceleration(H: ScalarField, J: StructureMatrixField, g: MetricField,
                         x: Sequence[float]) -> Tuple[np.ndarray, CharacteristicData]:
    """a_k = xddot_k + 2 w (J grad H + J Gamma H)_k + x_k w^2 + x_k dw/dt along the riemann_tghs flow."""
    d = riemann_flow_derivatives(H, J, g, x)
    a = d.xddot + 2.0 * d.w * d.xdot + d.x * d.w ** 2 + d.x * d.dwdt
    return a, characteristic_roots(d.w, d.dwdt)


def geodesic_like_residual(H: ScalarField, J: StructureMatrixField, g: MetricField, x: Sequence[float],
                           w0: Optional[float] = None) -> np.ndarray:
    """xddot_k + 2 w0 J_kj d_j H + 2 w0 J_kj Gamma^l_{jl} H + x_k w0^2 for constant w = w0."""
    d = riemann_flow_derivatives(H, J, g, x)
    w0 = d.w if w0 is None else float(w0)
    M = J.value(d.x)
    gamma = christoffel_contraction(g, d.x)
    Hj = H.jet(d.x, 1)
    return d.xddot + 2.0 * w0 * (M @ Hj.grad) + 2.0 * w0 * (M @ gamma) * Hj.value + d.x * w0 ** 2


def riemann_covariant_momentum(H: ScalarField, J: StructureMatrixField, g: MetricField, mass: float,
                               x: Sequence[float]) -> np.ndarray:
    """p = m Dx/dt on (M, g)."""
    if not mass > 0:
        raise ValueError("mass must be > 0")
    return mass * riemann_gchs_rate(H, J, g, x)
