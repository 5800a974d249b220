from dataclasses import asdict, dataclass
import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from fields.jet import Jet
from fields.sampling import sample_points
from fields.scalar import ConstantField, ProductField, ScalarField, coordinate_fields
from poisson.brackets import gspb, structural_operator
from poisson.structural import StructuralData, StructuralPoint
from poisson.structure import StructureMatrixField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowDerivatives:
    """First and second time derivatives along the TGHS flow at one state."""

    x: np.ndarray
    DH: np.ndarray
    xdot: np.ndarray
    jacobian: np.ndarray     # d xdot_k / d x_l
    xddot: np.ndarray
    w: float
    grad_w: np.ndarray
    dwdt: float
    hamiltonian: float


@dataclass(frozen=True)
class CharacteristicData:
    w: float
    dwdt: float
    beta: float
    discriminant: float
    lambda1: complex
    lambda2: complex
    oscillatory: bool

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        for key in ("lambda1", "lambda2"):
            root = complex(data[key])
            data[key] = {"re": root.real, "im": root.imag}
        return data


def _covariant_hamiltonian(point: StructuralPoint, Hj: Jet) -> np.ndarray:
    return point.covariant_gradient(Hj)


def s_dynamics(H: ScalarField, J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> float:
    """w = S H = sum_j b_j d_j H."""
    return structural_operator(H, J, S, x)


def s_dynamics_alternatives(H: ScalarField, J: StructureMatrixField, S: StructuralData,
                            x: Sequence[float]) -> Tuple[float, float, float]:
    """Three equal readings of w: S H, {1, H} and A . xdot."""
    one = ConstantField(1.0, J.dimension)
    point = S.at(J, x)
    return (
        s_dynamics(H, J, S, x),
        gspb(one, H, J, S, x),
        float(point.A @ tghs_rhs(H, J, S, x)),
    )


def tghs_rhs(H: ScalarField, J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> np.ndarray:
    """xdot_k = sum_j J_kj (d_j H + A_j H)."""
    point = S.at(J, x)
    return point.J @ _covariant_hamiltonian(point, H.jet(point.x, 1))


def gchs_rate(H: ScalarField, J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> np.ndarray:
    """Dx_k/dt = xdot_k + x_k w, the bracket {x_k, H}."""
    point = S.at(J, x)
    Hj = H.jet(point.x, 1)
    w = float(point.b @ Hj.grad)
    return point.J @ _covariant_hamiltonian(point, Hj) + point.x * w


def w_form_discrepancy_components(H: ScalarField, J: StructureMatrixField, S: StructuralData,
                                  x: Sequence[float]) -> np.ndarray:
    """W DH - gchs_rate, componentwise."""
    point = S.at(J, x)
    Hj = H.jet(point.x, 1)
    DH = _covariant_hamiltonian(point, Hj)
    W = point.J + np.outer(point.x, point.b) - np.outer(point.b, point.x)
    return W @ DH - gchs_rate(H, J, S, x)


def w_form_discrepancy(H: ScalarField, J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> float:
    """||W DH - gchs_rate||_inf; analytically max_k |b_k (x . DH)|."""
    return float(np.max(np.abs(w_form_discrepancy_components(H, J, S, x))))


def observable_rate(f: ScalarField, H: ScalarField, J: StructureMatrixField, S: StructuralData,
                    x: Sequence[float]) -> Tuple[float, float]:
    """(covariant rate {f, H}, plain rate {f, H} - w f)."""
    covariant = gspb(f, H, J, S, x)
    return covariant, covariant - s_dynamics(H, J, S, x) * f.value(x)


def covariant_time_derivative(f: ScalarField, H: ScalarField, J: StructureMatrixField, S: StructuralData,
                              x: Sequence[float]) -> float:
    """Df/dt = grad f . xdot + w f, evaluated from the flow rather than the bracket."""
    return float(f.gradient(x) @ tghs_rhs(H, J, S, x) + s_dynamics(H, J, S, x) * f.value(x))


def gchs_alternate_residual(H: ScalarField, J: StructureMatrixField, S: StructuralData,
                            x: Sequence[float]) -> float:
    """max_k |{x_k, H} - (-S(x_k H) + {x_k, H}_classical + 2 x_k S H)|."""
    x = np.asarray(x, dtype=float)
    w = s_dynamics(H, J, S, x)
    classical = J.value(x) @ H.gradient(x)
    rates = gchs_rate(H, J, S, x)
    worst = 0.0
    for k, coordinate in enumerate(coordinate_fields(J.dimension)):
        s_product = structural_operator(ProductField(coordinate, H), J, S, x)
        expected = -s_product + classical[k] + 2.0 * x[k] * w
        worst = max(worst, abs(rates[k] - expected))
    return worst


def flow_derivatives(H: ScalarField, J: StructureMatrixField, S: StructuralData,
                     x: Sequence[float]) -> FlowDerivatives:
    point = S.at(J, x, order=2)
    Hj = H.jet(point.x, 2)
    DH = _covariant_hamiltonian(point, Hj)
    dDH = point.covariant_gradient_jacobian(Hj)           # [l, j]
    xdot = point.J @ DH
    jacobian = np.einsum("lkj,j->kl", point.dJ, DH) + point.J @ dDH.T
    xddot = jacobian @ xdot
    w = float(point.b @ Hj.grad)
    grad_w = (np.einsum("li,ij,j->l", point.chi_hessian, point.J, Hj.grad)
              + np.einsum("i,lij,j->l", point.A, point.dJ, Hj.grad)
              + Hj.hess @ point.b)
    return FlowDerivatives(
        x=point.x,
        DH=DH,
        xdot=xdot,
        jacobian=jacobian,
        xddot=xddot,
        w=w,
        grad_w=grad_w,
        dwdt=float(grad_w @ xdot),
        hamiltonian=Hj.value,
    )


def tghs_jacobian(H: ScalarField, J: StructureMatrixField, S: StructuralData, x: Sequence[float]) -> np.ndarray:
    """d xdot_k / d x_l of the TGHS right-hand side."""
    return flow_derivatives(H, J, S, x).jacobian


def characteristic_roots(w: float, dwdt: float) -> CharacteristicData:
    """Roots of lambda^2 + 2 w lambda + beta = 0 with beta = w^2 + dw/dt."""
    w, dwdt = float(w), float(dwdt)
    beta = w * w + dwdt
    discriminant = -4.0 * dwdt
    if dwdt > 0.0:
        r = math.sqrt(dwdt)
        lambda1, lambda2 = complex(-w, r), complex(-w, -r)
        oscillatory = True
    else:
        r = math.sqrt(-dwdt)
        lambda1, lambda2 = complex(-w + r, 0.0), complex(-w - r, 0.0)
        oscillatory = False
    return CharacteristicData(w, dwdt, beta, discriminant, lambda1, lambda2, oscillatory)


def acceleration(H: ScalarField, J: StructureMatrixField, S: StructuralData,
                 x: Sequence[float]) -> Tuple[np.ndarray, CharacteristicData]:
    """a = xddot + 2 w xdot + x beta, with dw/dt taken along the TGHS flow."""
    d = flow_derivatives(H, J, S, x)
    data = characteristic_roots(d.w, d.dwdt)
    a = d.xddot + 2.0 * d.w * d.xdot + d.x * data.beta
    return a, data


def decay_solution(f0: float, w: float, t: float) -> float:
    """f0 e^{-w t}."""
    return float(f0) * math.exp(-float(w) * float(t))


@dataclass(frozen=True)
class CasimirReport:
    max_residual: float
    worst_point: Optional[Tuple[float, ...]]
    samples: int
    tolerance: float
    commuting: bool


def casimir_scan(f: ScalarField, H: ScalarField, J: StructureMatrixField, S: StructuralData,
                 box: Sequence[Sequence[float]], n_samples: int, rng: np.random.Generator,
                 tol: float = 1e-10) -> CasimirReport:
    """max |{f, H}| over sampled points; f covariantly commutes with H when below tol."""
    worst, worst_point = 0.0, None
    for x in sample_points(box, n_samples, rng):
        residual = abs(gspb(f, H, J, S, x))
        if worst_point is None or residual > worst:
            worst, worst_point = residual, tuple(float(v) for v in x)
    commuting = worst <= tol
    logger.debug("casimir scan over %d samples: max residual %.3e", n_samples, worst)
    return CasimirReport(worst, worst_point, n_samples, tol, commuting)


def characteristic_data_at(H: ScalarField, J: StructureMatrixField, S: StructuralData,
                           x: Sequence[float]) -> CharacteristicData:
    d = flow_derivatives(H, J, S, x)
    return characteristic_roots(d.w, d.dwdt)


__all__ = [
    "CharacteristicData",
    "CasimirReport",
    "FlowDerivatives",
    "acceleration",
    "casimir_scan",
    "characteristic_data_at",
    "characteristic_roots",
    "covariant_time_derivative",
    "decay_solution",
    "flow_derivatives",
    "gchs_alternate_residual",
    "gchs_rate",
    "observable_rate",
    "s_dynamics",
    "s_dynamics_alternatives",
    "tghs_jacobian",
    "tghs_rhs",
    "w_form_discrepancy",
    "w_form_discrepancy_components",
]
