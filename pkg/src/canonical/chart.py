from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from dynamics.flow import acceleration, gchs_rate, s_dynamics
from dynamics.integrator import FlowProblem
from fields.scalar import ScalarField
from poisson.structural import StructuralData
from poisson.structure import StructureMatrixField
from utils.errors import ShapeError


@dataclass(frozen=True)
class CanonicalChart:
    """(q^1..q^n, p_1..p_n) coordinates with the constant canonical structure matrix."""

    n: int
    coordinates: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ShapeError("degrees of freedom n must be >= 1")
        if not self.coordinates:
            if self.n == 1:
                names = ("q", "p")
            else:
                names = tuple(f"q{a + 1}" for a in range(self.n)) + tuple(f"p{a + 1}" for a in range(self.n))
            object.__setattr__(self, "coordinates", names)
        elif len(self.coordinates) != 2 * self.n:
            raise ShapeError(f"a chart with n={self.n} needs {2 * self.n} coordinate names")

    @property
    def dimension(self) -> int:
        return 2 * self.n

    @property
    def structure(self) -> StructureMatrixField:
        return StructureMatrixField.canonical(self.n)

    def split(self, x: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ShapeError(f"expected a state of dimension {self.dimension}, got shape {x.shape}")
        return x[:self.n], x[self.n:]


def canonical_structure(n: int) -> StructureMatrixField:
    return StructureMatrixField.canonical(n)


def generalized_hamilton_rhs(H: ScalarField, chi: ScalarField, chart: CanonicalChart,
                             x: Sequence[float]) -> np.ndarray:
    """qdot^a = dH/dp_a + (dchi/dp_a) H,  pdot_a = -(dH/dq^a + (dchi/dq^a) H)."""
    chart.split(x)
    Hj = H.jet(np.asarray(x, dtype=float), 1)
    A = chi.gradient(x)
    n = chart.n
    DH = Hj.grad + A * Hj.value
    return np.concatenate([DH[n:], -DH[:n]])


def canonical_structure_vector(chi: ScalarField, chart: CanonicalChart, x: Sequence[float]) -> np.ndarray:
    """Components of X_chi: q-block -dchi/dp_a, p-block +dchi/dq^a."""
    chart.split(x)
    A = chi.gradient(x)
    n = chart.n
    return np.concatenate([-A[n:], A[:n]])


@dataclass(frozen=True)
class MomentumRate:
    covariant: np.ndarray    # Dp_a/dt = -D_{q^a} H + p_a w
    plain: np.ndarray        # pdot_a = -D_{q^a} H


def momentum_rate(H: ScalarField, J: StructureMatrixField, S: StructuralData, x: Sequence[float],
                  p: Optional[Sequence[float]] = None) -> MomentumRate:
    """Covariant and plain momentum rates per configuration index.

    `p` defaults to the momentum block of x.
    """
    x = np.asarray(x, dtype=float)
    if J.dimension % 2:
        raise ShapeError("momentum rates need an even-dimensional canonical chart")
    n = J.dimension // 2
    p = x[n:] if p is None else np.asarray(p, dtype=float)
    if p.shape != (n,):
        raise ShapeError(f"momentum has shape {p.shape}, expected ({n},)")
    point = S.at(J, x)
    Hj = H.jet(x, 1)
    DH = point.covariant_gradient(Hj)
    w = float(point.b @ Hj.grad)
    plain = -DH[:n]
    return MomentumRate(covariant=plain + p * w, plain=plain)


@dataclass(frozen=True)
class MomentumState:
    mass: float
    momentum: np.ndarray                     # p = m Dx/dt
    newton_force: np.ndarray                 # m a
    momentum_rate: Optional[MomentumRate] = None

    def to_dict(self) -> dict:
        data = {
            "mass": self.mass,
            "momentum": self.momentum.tolist(),
            "newton_force": self.newton_force.tolist(),
        }
        if self.momentum_rate is not None:
            data["covariant_momentum_rate"] = self.momentum_rate.covariant.tolist()
            data["plain_momentum_rate"] = self.momentum_rate.plain.tolist()
        return data


def covariant_momentum(problem: FlowProblem, x: Sequence[float]) -> MomentumState:
    """p = m gchs_rate(x); forces as m a and, on canonical charts, the momentum rate."""
    m = problem.mass
    a, _ = acceleration(problem.H, problem.J, problem.S, x)
    rate = None
    if problem.J.builder == "canonical":
        rate = momentum_rate(problem.H, problem.J, problem.S, x)
    return MomentumState(
        mass=m,
        momentum=m * gchs_rate(problem.H, problem.J, problem.S, x),
        newton_force=m * a,
        momentum_rate=rate,
    )


def canonical_w(H: ScalarField, chi: ScalarField, chart: CanonicalChart, x: Sequence[float]) -> float:
    """w = X_chi H in canonical coordinates."""
    return s_dynamics(H, chart.structure, StructuralData(chi), x)
