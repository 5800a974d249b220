"""Metric fields and the Levi-Civita machinery needed by the Riemannian specialisation.

chi = log sqrt(det g) = 1/2 log det g, whose gradient is the Christoffel contraction
Gamma^l_{li} = 1/2 tr(g^{-1} d_i g).
"""

import logging
from typing import List, Sequence, Type

import numpy as np

from fields.jet import Jet, determinant
from fields.matrix import ConstantMatrixField, ExpressionMatrixField, MatrixField
from fields.scalar import ScalarField
from utils.errors import DomainError, MetricDomainError, MetricError, ShapeError

logger = logging.getLogger(__name__)

BUILDERS = ("constant", "diagonal", "full")


class MetricField:
    def __init__(self, field: MatrixField, builder: str):
        if builder not in BUILDERS:
            raise ValueError(f"unknown metric builder '{builder}'")
        self.field = field
        self.builder = builder

    @classmethod
    def constant(cls, matrix, tol: float = 1e-12) -> "MetricField":
        metric = cls(ConstantMatrixField(matrix), "constant")
        check_metric(metric, np.zeros(metric.dimension), tol)
        return metric

    @classmethod
    def diagonal(cls, texts: Sequence[str], coordinates: Sequence[str]) -> "MetricField":
        return cls(ExpressionMatrixField.diagonal(texts, coordinates), "diagonal")

    @classmethod
    def full(cls, texts: Sequence[Sequence[str]], coordinates: Sequence[str]) -> "MetricField":
        return cls(ExpressionMatrixField.parse(texts, coordinates), "full")

    @property
    def dimension(self) -> int:
        return self.field.dimension

    def value(self, x: Sequence[float]) -> np.ndarray:
        return self.field.value(x)

    def partials(self, x: Sequence[float]) -> np.ndarray:
        """dg[l, a, b] = d_l g_ab."""
        return self.field.partials(x)

    def second_partials(self, x: Sequence[float]) -> np.ndarray:
        """d2g[l, i, a, b] = d_l d_i g_ab."""
        m = self.dimension
        jets = self.field.entry_jets(x, 2)
        d2 = np.empty((m, m, m, m))
        for a in range(m):
            for b in range(m):
                d2[:, :, a, b] = jets[a][b].hess
        return d2

    def inverse(self, x: Sequence[float]) -> np.ndarray:
        g = self.value(x)
        try:
            return np.linalg.inv(g)
        except np.linalg.LinAlgError:
            raise MetricDomainError(f"metric is singular at {np.asarray(x, dtype=float).tolist()}") from None

    def __repr__(self) -> str:
        return f"MetricField(builder={self.builder!r}, dimension={self.dimension})"


def check_metric(g: MetricField, x: Sequence[float], tol: float = 1e-12,
                 error: Type[MetricError] = MetricError) -> None:
    """Raise `error` unless g(x) is symmetric and positive definite.

    Scenario validation uses MetricError; evaluation along a flow or at sample points passes
    MetricDomainError so the failure is reported as a numerical one.
    """
    G = g.value(x)
    point = np.asarray(x, dtype=float).tolist()
    asymmetry = float(np.max(np.abs(G - G.T)))
    if asymmetry > tol * max(1.0, float(np.max(np.abs(G)))):
        i, j = np.unravel_index(int(np.argmax(np.abs(G - G.T))), G.shape)
        raise error(
            f"metric is not symmetric at {point}: g[{i + 1},{j + 1}] = {G[i, j]!r}, "
            f"g[{j + 1},{i + 1}] = {G[j, i]!r}"
        )
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise error(f"metric is not positive definite at {point}") from None


class MetricChiField(ScalarField):
    """chi(x) = 1/2 log det g(x), differentiated through the entry jets."""

    provenance = "composed"

    def __init__(self, metric: MetricField):
        super().__init__(metric.dimension)
        self.metric = metric

    def jet(self, x: np.ndarray, order: int = 1) -> Jet:
        entries: List[List[Jet]] = self.metric.field.entry_jets(x, order)
        try:
            det = determinant(entries)
        except DomainError:
            raise MetricDomainError(f"metric is not positive definite at {np.asarray(x).tolist()}") from None
        if not det.value > 0.0:
            raise MetricDomainError(f"non-positive metric determinant {det.value!r} at {np.asarray(x).tolist()}")
        return det.log() * 0.5

    def __repr__(self) -> str:
        return f"MetricChiField({self.metric!r})"


def chi_from_metric(g: MetricField) -> ScalarField:
    return MetricChiField(g)


def christoffel_contraction(g: MetricField, x: Sequence[float]) -> np.ndarray:
    """Gamma^l_{li} = 1/2 tr(g^{-1} d_i g)."""
    ginv = g.inverse(x)
    return 0.5 * np.einsum("ab,iba->i", ginv, g.partials(x))


def christoffel_contraction_jacobian(g: MetricField, x: Sequence[float]) -> np.ndarray:
    """d_l Gamma^k_{ki} = 1/2 tr(g^{-1} d_l d_i g - g^{-1} d_l g g^{-1} d_i g)."""
    ginv = g.inverse(x)
    dg = g.partials(x)
    d2g = g.second_partials(x)
    first = np.einsum("ab,liba->li", ginv, d2g)
    mixed = np.einsum("ab,lbc,cd,ida->li", ginv, dg, ginv, dg)
    return 0.5 * (first - mixed)


def christoffel_symbols(g: MetricField, x: Sequence[float]) -> np.ndarray:
    """Gamma[i, j, k] = 1/2 g^{il} (d_j g_lk + d_k g_jl - d_l g_jk)."""
    ginv = g.inverse(x)
    dg = g.partials(x)
    lowered = (np.einsum("jlk->ljk", dg)        # d_j g_lk  -> [l, j, k]
               + np.einsum("kjl->ljk", dg)      # d_k g_jl
               - dg)                            # d_l g_jk
    return 0.5 * np.einsum("il,ljk->ijk", ginv, lowered)


def christoffel_contraction_oracle(g: MetricField, x: Sequence[float]) -> np.ndarray:
    """sum_l Gamma^l_{li} from the full symbols."""
    return np.einsum("lli->i", christoffel_symbols(g, x))


def check_dimension(g: MetricField, J_dimension: int) -> None:
    if g.dimension != J_dimension:
        raise ShapeError(f"metric is {g.dimension}x{g.dimension}, structure matrix is {J_dimension}x{J_dimension}")
