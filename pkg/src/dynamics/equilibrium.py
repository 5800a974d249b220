from dataclasses import dataclass
import logging
from typing import Optional, Sequence

import numpy as np

from config.settings import NEWTON_SETTINGS
from fields.scalar import ScalarField
from poisson.structural import StructuralData
from poisson.structure import StructureMatrixField
from utils.errors import (
    ConvergenceError,
    DegenerateStructureError,
    DomainError,
    ShapeError,
    SingularJacobianError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EquilibriumResult:
    state: np.ndarray
    residual: float
    iterations: int
    stationarity: float     # ||J DH||_inf at the solution

    def to_dict(self) -> dict:
        return {
            "state": self.state.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "stationarity": self.stationarity,
        }


def covariant_hamiltonian_gradient(H: ScalarField, S: StructuralData, x: np.ndarray) -> np.ndarray:
    Hj = H.jet(x, 1)
    return Hj.grad + S.vector(x) * Hj.value


def _residual(H: ScalarField, S: StructuralData, x: np.ndarray) -> float:
    try:
        value = float(np.max(np.abs(covariant_hamiltonian_gradient(H, S, x))))
    except DomainError:
        return float("inf")
    return value if np.isfinite(value) else float("inf")


def equilibrium_solve(H: ScalarField, J: StructureMatrixField, S: StructuralData, guess: Sequence[float],
                      tol: Optional[float] = None, max_iter: Optional[int] = None) -> EquilibriumResult:
    """Damped Newton on x -> DH(x) = grad H + A H.

    With J nondegenerate, DH = 0 is the equilibrium condition of the TGHS flow. A degenerate J
    raises DegenerateStructureError carrying ||J DH|| at the offending iterate.
    """
    tol = NEWTON_SETTINGS["tol"] if tol is None else tol
    max_iter = NEWTON_SETTINGS["max_iter"] if max_iter is None else max_iter
    max_halvings = NEWTON_SETTINGS["max_halvings"]
    det_threshold = NEWTON_SETTINGS["det_threshold"]

    x = np.array(guess, dtype=float)
    if x.shape != (J.dimension,):
        raise ShapeError(f"guess has {x.size} components, expected {J.dimension}")

    for iteration in range(max_iter + 1):
        point = S.at(J, x, order=2)
        Hj = H.jet(x, 2)
        DH = point.covariant_gradient(Hj)
        residual = float(np.max(np.abs(DH)))
        stationarity = float(np.max(np.abs(point.J @ DH)))
        if abs(np.linalg.det(point.J)) <= det_threshold:
            raise DegenerateStructureError(
                f"structure matrix is degenerate at {x.tolist()}; ||J DH|| = {stationarity:.3e}",
                residual=stationarity,
                state=x.copy(),
            )
        logger.debug("newton iteration %d: x=%s residual=%.3e", iteration, x.tolist(), residual)
        if residual <= tol:
            return EquilibriumResult(x, residual, iteration, stationarity)
        if iteration == max_iter:
            break

        jacobian = point.covariant_gradient_jacobian(Hj).T
        try:
            step = np.linalg.solve(jacobian, -DH)
        except np.linalg.LinAlgError:
            raise SingularJacobianError(f"Jacobian of DH is singular at {x.tolist()}", state=x.copy()) from None
        if not np.all(np.isfinite(step)):
            raise SingularJacobianError(f"Jacobian of DH is singular at {x.tolist()}", state=x.copy())

        scale = 1.0
        for _ in range(max_halvings + 1):
            candidate = x + scale * step
            if _residual(H, S, candidate) < residual:
                break
            scale *= 0.5
        else:
            raise ConvergenceError(
                f"no descent along the Newton direction at {x.tolist()}",
                iterations=iteration,
                residual=residual,
                state=x.copy(),
            )
        x = candidate

    raise ConvergenceError(
        f"Newton iteration did not converge in {max_iter} iterations",
        iterations=max_iter,
        residual=residual,
        state=x.copy(),
    )
