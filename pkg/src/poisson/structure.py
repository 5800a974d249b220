import logging
from typing import Optional, Sequence

import numpy as np

from fields.matrix import ConstantMatrixField, ExpressionMatrixField, LinearMatrixField, MatrixField
from utils.errors import ShapeError, SkewSymmetryError

logger = logging.getLogger(__name__)

BUILDERS = ("canonical", "constant", "so3", "lie-poisson", "expression-grid")


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


def canonical_matrix(n: int) -> np.ndarray:
    """2n x 2n block [[0, I], [-I, 0]] in (q^1..q^n, p_1..p_n) order."""
    if n < 1:
        raise ShapeError("degrees of freedom n must be >= 1")
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


class StructureMatrixField:
    """Skew-symmetric structure matrix J(x) with its entry partials.

    Builders whose skewness holds by construction are marked verified; user grids are
    checked at sample points through `check_skew`.
    """

    def __init__(self, field: MatrixField, builder: str, verified: bool = False):
        if builder not in BUILDERS:
            raise ValueError(f"unknown structure builder '{builder}'")
        self.field = field
        self.builder = builder
        self.verified = verified

    # ---------- builders ----------
    @classmethod
    def canonical(cls, n: int) -> "StructureMatrixField":
        return cls(ConstantMatrixField(canonical_matrix(n)), "canonical", verified=True)

    @classmethod
    def constant(cls, matrix, tol: float = 1e-12) -> "StructureMatrixField":
        structure = cls(ConstantMatrixField(matrix), "constant")
        check_skew(structure, np.zeros(structure.dimension), tol)
        structure.verified = True
        return structure

    @classmethod
    def so3(cls) -> "StructureMatrixField":
        """Rigid-body structure J_ij = eps_ijk x_k."""
        return cls(LinearMatrixField(levi_civita()), "so3", verified=True)

    @classmethod
    def lie_poisson(cls, structure_constants) -> "StructureMatrixField":
        """J_jk = sum_l c[j, k, l] x_l for constants antisymmetric in (j, k)."""
        c = np.asarray(structure_constants, dtype=float)
        if not np.allclose(c, -np.transpose(c, (1, 0, 2)), atol=0.0, rtol=0.0):
            raise SkewSymmetryError("structure constants are not antisymmetric in their first two indices")
        return cls(LinearMatrixField(c), "lie-poisson", verified=True)

    @classmethod
    def expression_grid(cls, texts: Sequence[Sequence[str]], coordinates: Sequence[str]) -> "StructureMatrixField":
        return cls(ExpressionMatrixField.parse(texts, coordinates), "expression-grid")

    # ---------- evaluation ----------
    @property
    def dimension(self) -> int:
        return self.field.dimension

    def value(self, x: Sequence[float]) -> np.ndarray:
        return self.field.value(x)

    def partials(self, x: Sequence[float]) -> np.ndarray:
        return self.field.partials(x)

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return self.field.value(x)

    def is_constant(self) -> bool:
        return isinstance(self.field, ConstantMatrixField)

    def __repr__(self) -> str:
        return f"StructureMatrixField(builder={self.builder!r}, dimension={self.dimension})"


def skew_residual(J: StructureMatrixField, x: Sequence[float]) -> float:
    M = J.value(x)
    return float(np.max(np.abs(M + M.T)))


def check_skew(J: StructureMatrixField, x: Sequence[float], tol: float = 1e-12,
               scale: Optional[float] = None) -> float:
    """Raise SkewSymmetryError naming the worst entry if J(x) is not skew."""
    M = J.value(x)
    defect = np.abs(M + M.T)
    worst = np.unravel_index(int(np.argmax(defect)), defect.shape)
    residual = float(defect[worst])
    bound = tol * max(1.0, float(np.max(np.abs(M))) if scale is None else scale)
    if residual > bound:
        i, j = int(worst[0]), int(worst[1])
        point = np.asarray(x, dtype=float).tolist()
        if i == j:
            message = f"diagonal entry J[{i + 1},{i + 1}] = {M[i, i]!r} is not zero at {point}"
        else:
            message = (f"J[{i + 1},{j + 1}] = {M[i, j]!r} but J[{j + 1},{i + 1}] = {M[j, i]!r} "
                       f"at {point}")
        logger.debug("skew check failed: %s", message)
        raise SkewSymmetryError(message, entry=(i + 1, j + 1), residual=residual)
    return residual


def check_skew_at(J: StructureMatrixField, points: np.ndarray, tol: float = 1e-12) -> float:
    """check_skew over a sample; returns the largest residual seen."""
    return max((check_skew(J, x, tol) for x in points), default=0.0)
