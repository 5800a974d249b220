from dataclasses import dataclass, field
import logging
import math
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from fields.scalar import ScalarField
from poisson.structural import StructuralData
from poisson.structure import StructureMatrixField
from utils.errors import BlowUpError, DomainError, ShapeError
from .flow import s_dynamics, tghs_rhs

logger = logging.getLogger(__name__)

RHS_SELECTORS = ("tghs", "riemann-tghs")
METHODS = ("rk4",)


@dataclass(frozen=True)
class FlowProblem:
    J: StructureMatrixField
    S: StructuralData
    H: ScalarField
    x0: np.ndarray
    dt: float = 1e-3
    t_end: float = 1.0
    mass: float = 1.0
    method: str = "rk4"
    metric: Optional[object] = None      # riemann.metric.MetricField for the riemann-tghs selector
    observables: Tuple[Tuple[str, ScalarField], ...] = ()
    coordinates: Tuple[str, ...] = ()

    def __post_init__(self):
        x0 = np.array(self.x0, dtype=float)
        object.__setattr__(self, "x0", x0)
        if x0.shape != (self.J.dimension,):
            raise ShapeError(f"initial state has shape {x0.shape}, structure matrix is {self.J.dimension}x{self.J.dimension}")
        if not self.dt > 0:
            raise ValueError("integrator.dt must be > 0")
        if not self.t_end >= 0:
            raise ValueError("integrator.t_end must be >= 0")
        if not self.mass > 0:
            raise ValueError("mass must be > 0")
        if self.method not in METHODS:
            raise ValueError(f"unknown integration method '{self.method}'")
        if not self.coordinates:
            object.__setattr__(self, "coordinates", tuple(f"x{i + 1}" for i in range(len(x0))))

    def step_count(self) -> int:
        """Number of uniform steps; T/dt when integral, otherwise ceil(T/dt)."""
        if self.t_end == 0:
            return 0
        ratio = self.t_end / self.dt
        nearest = round(ratio)
        if abs(ratio - nearest) < 1e-9:
            return max(int(nearest), 1)
        return int(math.ceil(ratio))

    def effective_dt(self) -> float:
        n = self.step_count()
        return self.t_end / n if n else self.dt


@dataclass(frozen=True)
class Sample:
    t: float
    x: np.ndarray
    w: float
    H: float
    observables: Tuple[float, ...] = ()


@dataclass
class Trajectory:
    coordinates: Tuple[str, ...]
    observable_names: Tuple[str, ...]
    dt: float
    samples: List[Sample] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def states(self) -> np.ndarray:
        return np.array([s.x for s in self.samples]).reshape(len(self.samples), len(self.coordinates))

    @property
    def w(self) -> np.ndarray:
        return np.array([s.w for s in self.samples])

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.array([s.H for s in self.samples])

    def observable(self, name: str) -> np.ndarray:
        index = self.observable_names.index(name)
        return np.array([s.observables[index] for s in self.samples])

    @property
    def final_state(self) -> np.ndarray:
        return self.samples[-1].x

    def __len__(self) -> int:
        return len(self.samples)


def rhs_for(problem: FlowProblem, selector: str = "tghs") -> Callable[[np.ndarray], np.ndarray]:
    if selector == "tghs":
        return lambda x: tghs_rhs(problem.H, problem.J, problem.S, x)
    if selector == "riemann-tghs":
        if problem.metric is None:
            raise ValueError("the riemann-tghs right-hand side needs a metric")
        from riemann.gchs import riemann_tghs
        return lambda x: riemann_tghs(problem.H, problem.J, problem.metric, x)
    raise ValueError(f"unknown right-hand side '{selector}', expected one of {RHS_SELECTORS}")


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * h * k1)
    k3 = rhs(x + 0.5 * h * k2)
    k4 = rhs(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _sample(problem: FlowProblem, t: float, x: np.ndarray) -> Sample:
    return Sample(
        t=t,
        x=x,
        w=s_dynamics(problem.H, problem.J, problem.S, x),
        H=problem.H.value(x),
        observables=tuple(f.value(x) for _, f in problem.observables),
    )


def iter_integrate(problem: FlowProblem, selector: str = "tghs") -> Iterator[Sample]:
    """Yield samples of the fixed-step RK4 flow from t=0 to t_end inclusive.

    Raises BlowUpError at the first non-finite state; samples yielded so far stand.
    """
    rhs = rhs_for(problem, selector)
    n = problem.step_count()
    h = problem.effective_dt()
    x = problem.x0.copy()
    logger.info("integrating %s flow: %d steps of %.6g", selector, n, h)
    yield _sample(problem, 0.0, x)
    for i in range(1, n + 1):
        t = problem.t_end if i == n else problem.t_end * i / n
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                x = rk4_step(rhs, x, h)
        except DomainError as exc:
            logger.warning("evaluation failed at t=%.6g after %d steps: %s", t, i, exc)
            raise BlowUpError(t, reason=str(exc)) from exc
        if not np.all(np.isfinite(x)):
            logger.warning("blow-up at t=%.6g after %d steps", t, i)
            raise BlowUpError(t)
        try:
            sample = _sample(problem, t, x)
        except DomainError as exc:
            raise BlowUpError(t, reason=str(exc)) from exc
        yield sample


def integrate(problem: FlowProblem, selector: str = "tghs") -> Trajectory:
    """Collect iter_integrate into a Trajectory; a blow-up carries the partial trajectory."""
    trajectory = Trajectory(
        coordinates=problem.coordinates,
        observable_names=tuple(name for name, _ in problem.observables),
        dt=problem.effective_dt(),
    )
    try:
        for sample in iter_integrate(problem, selector):
            trajectory.samples.append(sample)
    except BlowUpError as exc:
        exc.trajectory = trajectory
        raise
    return trajectory


def central_time_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """(v[i+1] - v[i-1]) / 2dt at interior samples."""
    values = np.asarray(values, dtype=float)
    return (values[2:] - values[:-2]) / (2.0 * dt)


def time_series(trajectory: Trajectory) -> Dict[str, np.ndarray]:
    series = {"t": trajectory.times}
    states = trajectory.states
    for i, name in enumerate(trajectory.coordinates):
        series[name] = states[:, i]
    series["w"] = trajectory.w
    series["H"] = trajectory.hamiltonian
    for name in trajectory.observable_names:
        series[name] = trajectory.observable(name)
    return series
