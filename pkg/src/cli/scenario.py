"""Scenario files: JSON validated by strict pydantic models, then built into runtime objects.

Schema (unknown keys are rejected at every level):

    {
      "name": str, "description": str (optional),
      "dimension": int, "coordinates": [str, ...],
      "structure": {"kind": "canonical", "n": int}
                 | {"kind": "so3"}
                 | {"kind": "constant", "matrix": [[float]]}
                 | {"kind": "expression-grid", "entries": [[str]]},
      "hamiltonian": str,
      "chi": {"kind": "expression", "expression": str}
           | {"kind": "constant", "value": float}
           | {"kind": "metric"},
      "metric": {"kind": "constant", "matrix": [[float]]}
              | {"kind": "diagonal", "entries": [str]}
              | {"kind": "full", "entries": [[str]]}            (only with chi.kind == "metric"),
      "mass": float, "initial_state": [float],
      "integrator": {"method": "rk4", "dt": float, "t_end": float},
      "sampling": {"box": [[lo, hi], ...], "samples": int},
      "tolerances": {name: float}, "seed": int
    }
"""

from dataclasses import dataclass
import json
import logging
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config.settings import INTEGRATOR_SETTINGS, SAMPLING_SETTINGS, TOLERANCES, get_tolerance
from dynamics.integrator import FlowProblem
from fields.expression import validate_coordinates
from fields.sampling import default_box, sample_points, validate_box
from fields.scalar import ConstantField, ExpressionField, ScalarField
from poisson.structural import StructuralData
from poisson.structure import StructureMatrixField, check_skew_at
from riemann.metric import MetricField, check_metric, chi_from_metric
from utils.errors import ExpressionSyntaxError, ScenarioError, UnknownIdentifierError
from utils.fingerprint import fingerprint

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class StructureSpec(_Strict):
    kind: Literal["canonical", "so3", "constant", "expression-grid"]
    n: Optional[int] = None
    matrix: Optional[List[List[float]]] = None
    entries: Optional[List[List[str]]] = None

    @model_validator(mode="after")
    def _required_fields(self):
        required = {"canonical": "n", "constant": "matrix", "expression-grid": "entries"}.get(self.kind)
        if required and getattr(self, required) is None:
            raise ValueError(f"{required} is required for kind '{self.kind}'")
        if self.kind == "canonical" and self.n < 1:
            raise ValueError("n must be >= 1")
        return self

    def size(self) -> int:
        if self.kind == "canonical":
            return 2 * self.n
        if self.kind == "so3":
            return 3
        return len(self.matrix if self.kind == "constant" else self.entries)


class ChiSpec(_Strict):
    kind: Literal["expression", "constant", "metric"]
    expression: Optional[str] = None
    value: float = 0.0

    @model_validator(mode="after")
    def _expression_present(self):
        if self.kind == "expression" and not self.expression:
            raise ValueError("expression is required for kind 'expression'")
        return self


class MetricSpec(_Strict):
    kind: Literal["constant", "diagonal", "full"]
    matrix: Optional[List[List[float]]] = None
    entries: Optional[List] = None

    @model_validator(mode="after")
    def _required_fields(self):
        if self.kind == "constant" and self.matrix is None:
            raise ValueError("matrix is required for kind 'constant'")
        if self.kind != "constant" and self.entries is None:
            raise ValueError(f"entries is required for kind '{self.kind}'")
        return self

    def size(self) -> int:
        return len(self.matrix if self.kind == "constant" else self.entries)


class IntegratorSpec(_Strict):
    method: Literal["rk4"] = "rk4"
    dt: float = INTEGRATOR_SETTINGS["dt"]
    t_end: float = INTEGRATOR_SETTINGS["t_end"]

    @field_validator("dt")
    @classmethod
    def _positive_step(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be > 0")
        return value

    @field_validator("t_end")
    @classmethod
    def _non_negative_horizon(cls, value: float) -> float:
        if not value >= 0:
            raise ValueError("must be >= 0")
        return value


class SamplingSpec(_Strict):
    box: Optional[List[Tuple[float, float]]] = None
    samples: int = Field(default=SAMPLING_SETTINGS["samples"], ge=1)


class ScenarioSpec(_Strict):
    name: str
    description: str = ""
    dimension: int = Field(ge=1)
    coordinates: List[str]
    structure: StructureSpec
    hamiltonian: str
    chi: ChiSpec = ChiSpec(kind="constant")
    metric: Optional[MetricSpec] = None
    mass: float = 1.0
    initial_state: List[float]
    integrator: IntegratorSpec = IntegratorSpec()
    sampling: SamplingSpec = SamplingSpec()
    tolerances: Dict[str, float] = {}
    seed: int = SAMPLING_SETTINGS["seed"]

    @field_validator("mass")
    @classmethod
    def _positive_mass(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be > 0")
        return value

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, value: Dict[str, float]) -> Dict[str, float]:
        unknown = sorted(set(value) - set(TOLERANCES))
        if unknown:
            raise ValueError(f"unknown tolerance names {unknown}")
        return value

    @model_validator(mode="after")
    def _consistent(self):
        m = self.dimension
        if len(self.coordinates) != m:
            raise ValueError(f"coordinates lists {len(self.coordinates)} names for dimension {m}")
        if len(self.initial_state) != m:
            raise ValueError(f"initial_state has {len(self.initial_state)} components for dimension {m}")
        if self.structure.size() != m:
            raise ValueError(f"structure is {self.structure.size()}-dimensional, scenario dimension is {m}")
        if self.chi.kind == "metric" and self.metric is None:
            raise ValueError("chi.kind is 'metric' but no metric is given")
        if self.chi.kind != "metric" and self.metric is not None:
            raise ValueError(f"metric is given but chi.kind is '{self.chi.kind}'")
        if self.metric is not None and self.metric.size() != m:
            raise ValueError(f"metric is {self.metric.size()}-dimensional, scenario dimension is {m}")
        if self.sampling.box is not None and len(self.sampling.box) != m:
            raise ValueError(f"sampling.box has {len(self.sampling.box)} intervals for dimension {m}")
        return self


def format_validation_error(error: ValidationError) -> ScenarioError:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"])
    message = first["msg"]
    if message.startswith("Value error, "):
        message = message[len("Value error, "):]
    return ScenarioError(message, field=location)


@dataclass
class Scenario:
    """A validated scenario with its fields built."""

    spec: ScenarioSpec
    coordinates: Tuple[str, ...]
    J: StructureMatrixField
    H: ScalarField
    S: StructuralData
    metric: Optional[MetricField]
    box: List[Tuple[float, float]]
    path: str = ""

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def seed(self) -> int:
        return self.spec.seed

    @property
    def selector(self) -> str:
        return "riemann-tghs" if self.metric is not None else "tghs"

    def fingerprint(self) -> str:
        return fingerprint(self.spec.model_dump(mode="json"))

    def tolerance(self, name: str, override: Optional[float] = None) -> float:
        if override is not None:
            return float(override)
        return get_tolerance(name, self.spec.tolerances)

    def field(self, text: str) -> ExpressionField:
        return ExpressionField.parse(text, self.coordinates)

    def sample(self, n: Optional[int] = None, seed: Optional[int] = None) -> np.ndarray:
        rng = np.random.default_rng(self.seed if seed is None else seed)
        return sample_points(self.box, self.spec.sampling.samples if n is None else n, rng)

    def point(self, values: Sequence[float]) -> np.ndarray:
        x = np.asarray(values, dtype=float)
        if x.shape != (self.dimension,):
            raise ScenarioError(f"has {x.size} components, expected {self.dimension}", field="point")
        return x

    def flow_problem(self, t_end: Optional[float] = None, dt: Optional[float] = None,
                     observables: Sequence[str] = ()) -> FlowProblem:
        return FlowProblem(
            J=self.J,
            S=self.S,
            H=self.H,
            x0=np.array(self.spec.initial_state, dtype=float),
            dt=self.spec.integrator.dt if dt is None else dt,
            t_end=self.spec.integrator.t_end if t_end is None else t_end,
            mass=self.spec.mass,
            method=self.spec.integrator.method,
            metric=self.metric,
            observables=tuple((text, self.field(text)) for text in observables),
            coordinates=self.coordinates,
        )


def _parse(field: str, build):
    try:
        return build()
    except (ExpressionSyntaxError, UnknownIdentifierError) as exc:
        raise ScenarioError(str(exc), field=field) from exc


def _build_structure(spec: StructureSpec, coordinates: Tuple[str, ...]) -> StructureMatrixField:
    if spec.kind == "canonical":
        return StructureMatrixField.canonical(spec.n)
    if spec.kind == "so3":
        return StructureMatrixField.so3()
    if spec.kind == "constant":
        return StructureMatrixField.constant(spec.matrix, TOLERANCES["skew"])
    return _parse("structure.entries", lambda: StructureMatrixField.expression_grid(spec.entries, coordinates))


def _build_metric(spec: MetricSpec, coordinates: Tuple[str, ...]) -> MetricField:
    if spec.kind == "constant":
        return MetricField.constant(spec.matrix, TOLERANCES["metric_symmetry"])
    if spec.kind == "diagonal":
        return _parse("metric.entries", lambda: MetricField.diagonal([str(e) for e in spec.entries], coordinates))
    return _parse("metric.entries", lambda: MetricField.full(spec.entries, coordinates))


def build_scenario(spec: ScenarioSpec, path: str = "") -> Scenario:
    try:
        coordinates = validate_coordinates(spec.coordinates)
    except ValueError as exc:
        raise ScenarioError(str(exc), field="coordinates") from exc
    m = spec.dimension
    J = _build_structure(spec.structure, coordinates)
    H = _parse("hamiltonian", lambda: ExpressionField.parse(spec.hamiltonian, coordinates))
    metric = None
    if spec.chi.kind == "expression":
        chi = _parse("chi.expression", lambda: ExpressionField.parse(spec.chi.expression, coordinates))
    elif spec.chi.kind == "constant":
        chi = ConstantField(spec.chi.value, m)
    else:
        metric = _build_metric(spec.metric, coordinates)
        chi = chi_from_metric(metric)
    if spec.sampling.box is None:
        box = default_box(m, SAMPLING_SETTINGS["box_half_width"])
    else:
        try:
            box = validate_box(spec.sampling.box, m)
        except ValueError as exc:
            raise ScenarioError(str(exc), field="sampling.box") from exc

    scenario = Scenario(spec, coordinates, J, H, StructuralData(chi), metric, box, path)
    points = scenario.sample()
    if not J.verified:
        check_skew_at(J, points, scenario.tolerance("skew"))
        logger.debug("structure grid skew-checked at %d points", len(points))
    if metric is not None:
        for x in points:
            check_metric(metric, x, scenario.tolerance("metric_symmetry"))
    return scenario


def load_scenario(path: str) -> Scenario:
    """Read, validate and build a scenario file."""
    try:
        with open(path, "r") as handle:
            text = handle.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc.strerror}", field=str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(data, path)


def scenario_from_dict(data: dict, path: str = "") -> Scenario:
    try:
        spec = ScenarioSpec.model_validate(data)
    except ValidationError as exc:
        raise format_validation_error(exc) from None
    scenario = build_scenario(spec, path)
    logger.info("loaded scenario '%s' (dimension %d, structure %s)", spec.name, spec.dimension, spec.structure.kind)
    return scenario


__all__ = ["Scenario", "ScenarioSpec", "load_scenario", "scenario_from_dict", "build_scenario"]
