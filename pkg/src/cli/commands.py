"""Command handlers behind the `covham` subcommands.

Handlers take a built Scenario and return plain data (a RunReport or a dict) plus an exit
code; printing and argument parsing live in main.py.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import math
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import SAMPLING_SETTINGS
from dynamics.equilibrium import equilibrium_solve
from dynamics.flow import (
    acceleration,
    characteristic_data_at,
    gchs_alternate_residual,
    gchs_rate,
    s_dynamics,
    s_dynamics_alternatives,
    tghs_rhs,
)
from dynamics.integrator import iter_integrate
from fields.polynomial import random_polynomial
from fields.scalar import LinearCombination, ProductField, ScalarField, coordinate_fields, fd_gradient
from poisson.brackets import extended_structure_matrix, gpb, gspb, structural_operator, x_chi_pair
from poisson.identities import (
    annihilation_residual,
    antisymmetry_residual,
    chi_invariance_residual,
    decomposition_residual,
    generalized_leibniz_residual,
    gji_terms,
    gji_worst,
    s_product_residual,
    vector_field_form_residual,
    w_antisymmetry_residual,
)
from riemann.gchs import (
    riemann_acceleration,
    riemann_equilibrium_residual,
    riemann_gchs_rate,
    riemann_s_dynamics,
    riemann_tghs,
)
from riemann.metric import christoffel_contraction, christoffel_contraction_oracle
from utils.errors import (
    BlowUpError,
    ConvergenceError,
    DegenerateStructureError,
    DomainError,
    SingularJacobianError,
)
from utils.fingerprint import file_digest
from utils.timing import PerformanceMonitor
from .export import header, trajectory_writer
from .report import CheckResult, RunReport
from .scenario import Scenario

logger = logging.getLogger(__name__)

POLYNOMIAL_DEGREE = 3


@dataclass(frozen=True)
class SampleFunctions:
    """Seeded random polynomials and coefficients used by the checks at one sample point."""

    f: ScalarField
    g: ScalarField
    h: ScalarField
    lam: float
    mu: float

    @classmethod
    def draw(cls, seed: int, index: int, dimension: int) -> "SampleFunctions":
        rng = np.random.default_rng([seed, index])
        f, g, h = (random_polynomial(rng, dimension, POLYNOMIAL_DEGREE) for _ in range(3))
        lam, mu = rng.uniform(-2.0, 2.0, size=2)
        return cls(f, g, h, float(lam), float(mu))


# A check returns (residual, scale); it passes when residual <= tol * max(1, scale).
CheckFn = Callable[[Scenario, np.ndarray, SampleFunctions], Tuple[float, float]]


@dataclass(frozen=True)
class Check:
    name: str
    tolerance: str
    evaluate: CheckFn
    applies: Callable[[Scenario], bool] = lambda scenario: True


def _max_abs(*values) -> float:
    return max(float(np.max(np.abs(v))) for v in values)


def _antisymmetry(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    return antisymmetry_residual(t.f, t.g, sc.J, sc.S, x), abs(gspb(t.f, t.g, sc.J, sc.S, x))


def _bilinearity(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    combined = LinearCombination([(t.lam, t.f), (t.mu, t.g)])
    left = gspb(combined, t.h, sc.J, sc.S, x)
    fh, gh = gspb(t.f, t.h, sc.J, sc.S, x), gspb(t.g, t.h, sc.J, sc.S, x)
    return abs(left - t.lam * fh - t.mu * gh), _max_abs(left, t.lam * fh, t.mu * gh)


def _decomposition(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    scale = _max_abs(gspb(t.f, t.g, sc.J, sc.S, x), gpb(t.f, t.g, sc.J, x),
                     x_chi_pair(t.f, t.g, sc.J, sc.S, x))
    return decomposition_residual(t.f, t.g, sc.J, sc.S, x), scale


def _reduction(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    classical = gpb(t.f, t.g, sc.J, x)
    return abs(gspb(t.f, t.g, sc.J, sc.S, x) - classical), abs(classical)


def _coordinate_brackets(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    W = extended_structure_matrix(sc.J, sc.S, x)
    coords = coordinate_fields(sc.dimension)
    G = np.array([[gspb(ck, cl, sc.J, sc.S, x) for cl in coords] for ck in coords])
    return _max_abs(W - G), _max_abs(W)


def _annihilation(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    point = sc.S.at(sc.J, x)
    return annihilation_residual(sc.J, sc.S, x), _max_abs(point.b) * _max_abs(point.A)


def _chi_invariance(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    point = sc.S.at(sc.J, x)
    return chi_invariance_residual(sc.J, sc.S, x), _max_abs(point.b) * _max_abs(point.A)


def _w_antisymmetry(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    return w_antisymmetry_residual(sc.J, sc.S, x), _max_abs(extended_structure_matrix(sc.J, sc.S, x))


def _s_product(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    scale = _max_abs(structural_operator(ProductField(t.f, t.g), sc.J, sc.S, x),
                     x_chi_pair(t.f, t.g, sc.J, sc.S, x),
                     2.0 * t.g.value(x) * structural_operator(t.f, sc.J, sc.S, x))
    return s_product_residual(t.f, t.g, sc.J, sc.S, x), scale


def _s_dynamics_forms(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    forms = np.array(s_dynamics_alternatives(sc.H, sc.J, sc.S, x))
    return float(np.max(forms) - np.min(forms)), _max_abs(forms)


def _gchs_brackets(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    rates = gchs_rate(sc.H, sc.J, sc.S, x)
    brackets = np.array([gspb(c, sc.H, sc.J, sc.S, x) for c in coordinate_fields(sc.dimension)])
    return _max_abs(rates - brackets), _max_abs(rates)


def _gchs_alternate(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    w = s_dynamics(sc.H, sc.J, sc.S, x)
    b = sc.S.covector(sc.J, x)
    scale = _max_abs(gchs_rate(sc.H, sc.J, sc.S, x), 2.0 * x * w, sc.H.value(x) * b)
    return gchs_alternate_residual(sc.H, sc.J, sc.S, x), scale


def _vector_field_form(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    scale = _max_abs(gpb(t.f, t.g, sc.J, x), t.g.value(x) * gpb(t.f, sc.S.chi, sc.J, x),
                     t.f.value(x) * structural_operator(t.g, sc.J, sc.S, x))
    return vector_field_form_residual(t.f, t.g, sc.J, sc.S, x), scale


def _generalized_leibniz(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    fg = ProductField(t.f, t.g)
    scale = _max_abs(gspb(fg, t.h, sc.J, sc.S, x), gpb(fg, t.h, sc.J, x))
    return generalized_leibniz_residual(t.f, t.g, t.h, sc.J, sc.S, x), scale


def _gji(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    residual, _ = gji_worst(sc.J, sc.S, x)
    return residual, _max_abs(gji_terms(sc.J, sc.S, x))


def _hessian_symmetry(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    hess = sc.H.hessian(x)
    return _max_abs(hess - hess.T), _max_abs(hess)


def _gradient_oracle(field: Callable[[Scenario], ScalarField]) -> CheckFn:
    def evaluate(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
        f = field(sc)
        analytic = f.gradient(x)
        numeric = fd_gradient(f, x, sc.tolerance("fd_step"))
        return _max_abs(analytic - numeric), _max_abs(analytic)
    return evaluate


def _christoffel(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    gamma = christoffel_contraction(sc.metric, x)
    oracle = christoffel_contraction_oracle(sc.metric, x)
    A = sc.S.vector(x)
    return max(_max_abs(gamma - oracle), _max_abs(gamma - A)), _max_abs(gamma)


def _riemann_equivalence(sc: Scenario, x: np.ndarray, t: SampleFunctions) -> Tuple[float, float]:
    H, J, S, g = sc.H, sc.J, sc.S, sc.metric
    rate = gchs_rate(H, J, S, x)
    a, data = acceleration(H, J, S, x)
    ra, rdata = riemann_acceleration(H, J, g, x)
    pairs = [
        (riemann_tghs(H, J, g, x), tghs_rhs(H, J, S, x)),
        (riemann_s_dynamics(H, J, g, x), s_dynamics(H, J, S, x)),
        (riemann_gchs_rate(H, J, g, x), rate),
        (riemann_equilibrium_residual(H, J, g, x), rate),
        (ra, a),
        (rdata.dwdt, data.dwdt),
    ]
    residual = max(_max_abs(np.subtract(left, right)) for left, right in pairs)
    return residual, max(_max_abs(left, right) for left, right in pairs)


VERIFY_CHECKS: Tuple[Check, ...] = (
    Check("antisymmetry", "analytic", _antisymmetry),
    Check("bilinearity", "analytic", _bilinearity),
    Check("decomposition", "analytic", _decomposition),
    Check("reduction", "analytic", _reduction, lambda sc: sc.S.is_trivial),
    Check("coordinate_brackets", "analytic", _coordinate_brackets),
    Check("annihilation", "analytic", _annihilation),
    Check("chi_invariance", "analytic", _chi_invariance),
    Check("w_antisymmetry", "analytic", _w_antisymmetry),
    Check("s_product", "analytic", _s_product),
    Check("s_dynamics_forms", "analytic", _s_dynamics_forms),
    Check("gchs_brackets", "analytic", _gchs_brackets),
    Check("gchs_alternate", "analytic", _gchs_alternate),
    Check("vector_field_form", "analytic", _vector_field_form),
    Check("generalized_leibniz", "analytic", _generalized_leibniz),
    Check("gji", "gji", _gji),
    Check("hamiltonian_hessian_symmetry", "hessian_symmetry", _hessian_symmetry),
    Check("hamiltonian_gradient_fd", "finite_difference", _gradient_oracle(lambda sc: sc.H)),
    Check("chi_gradient_fd", "finite_difference", _gradient_oracle(lambda sc: sc.S.chi),
          lambda sc: not sc.S.is_trivial),
    Check("christoffel_oracle", "christoffel", _christoffel, lambda sc: sc.metric is not None),
    Check("riemann_equivalence", "riemann", _riemann_equivalence, lambda sc: sc.metric is not None),
)


@dataclass
class _PointOutcome:
    residual: float
    scale: float
    elapsed: float
    error: str = ""


def _evaluate_point(scenario: Scenario, checks: Sequence[Check], seed: int, index: int,
                    x: np.ndarray) -> List[_PointOutcome]:
    functions = SampleFunctions.draw(seed, index, scenario.dimension)
    outcomes = []
    for check in checks:
        start = time.perf_counter()
        try:
            with np.errstate(all="ignore"):
                residual, scale = check.evaluate(scenario, x, functions)
            error = ""
        except (DomainError, FloatingPointError, np.linalg.LinAlgError) as exc:
            residual, scale, error = float("nan"), 0.0, str(exc)
        outcomes.append(_PointOutcome(float(residual), float(scale), time.perf_counter() - start, error))
    return outcomes


def _merge(check: Check, tolerance: float, points: np.ndarray,
           outcomes: Sequence[_PointOutcome]) -> CheckResult:
    """Fold per-point outcomes, in sample-index order, into one CheckResult."""
    errors = [f"point {i}: {o.error}" for i, o in enumerate(outcomes) if o.error]
    normalized = [o.residual / max(1.0, o.scale) for o in outcomes]
    broken = [i for i, value in enumerate(normalized) if not math.isfinite(value)]
    worst = broken[0] if broken else int(np.argmax(normalized))
    return CheckResult(
        name=check.name,
        residual=outcomes[worst].residual,
        normalized=normalized[worst],
        tolerance=tolerance,
        elapsed=sum(outcome.elapsed for outcome in outcomes),
        worst_point=[float(v) for v in points[worst]],
        detail="; ".join(errors[:3]),
    )


def cmd_verify(scenario: Scenario, samples: Optional[int] = None, seed: Optional[int] = None,
               tol: Optional[float] = None, workers: Optional[int] = None) -> RunReport:
    """Run every applicable identity check at seeded sample points.

    Points are evaluated on a thread pool; results are merged in sample-index order so the
    report does not depend on scheduling. `tol` overrides every check's tolerance.
    """
    monitor = PerformanceMonitor()
    seed = scenario.seed if seed is None else int(seed)
    n = scenario.spec.sampling.samples if samples is None else int(samples)
    if n < 1:
        raise ValueError("samples must be >= 1")
    workers = SAMPLING_SETTINGS["workers"] if workers is None else workers
    checks = [check for check in VERIFY_CHECKS if check.applies(scenario)]
    points = scenario.sample(n, seed)
    logger.info("verifying %s: %d checks at %d points (seed %d)", scenario.name, len(checks), n, seed)

    with monitor.measure("verify"):
        with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
            per_point = list(executor.map(
                lambda item: _evaluate_point(scenario, checks, seed, item[0], item[1]),
                enumerate(points),
            ))

    report = RunReport(
        command="verify",
        scenario=scenario.name,
        fingerprint=scenario.fingerprint(),
        seed=seed,
        samples=n,
    )
    for position, check in enumerate(checks):
        result = _merge(check, scenario.tolerance(check.tolerance, tol), points,
                        [outcomes[position] for outcomes in per_point])
        monitor.record_operation(check.name, result.elapsed)
        logger.debug("%s: residual %.3e (%s)", check.name, result.residual, "pass" if result.passed else "FAIL")
        report.add(result)
    report.elapsed = monitor.elapsed("verify")
    report.peak_rss_bytes = monitor.peak_rss
    if not report.passed:
        logger.warning("verification of %s failed: %s", scenario.name, ", ".join(report.failed_checks()))
    return report


def cmd_simulate(scenario: Scenario, out: str, t_end: Optional[float] = None, dt: Optional[float] = None,
                 observables: Sequence[str] = (), fmt: str = "csv") -> Tuple[Dict[str, object], int]:
    """Integrate the scenario flow and stream samples to `out`.

    On blow-up the samples written so far are flushed, the time goes to the log and the
    exit code is 3.
    """
    problem = scenario.flow_problem(t_end=t_end, dt=dt, observables=observables)
    names = tuple(name for name, _ in problem.observables)
    header(scenario.coordinates, names)
    summary: Dict[str, object] = {
        "command": "simulate",
        "scenario": scenario.name,
        "fingerprint": scenario.fingerprint(),
        "out": out,
        "format": fmt,
        "steps": problem.step_count(),
        "effective_dt": problem.effective_dt(),
        "t_end": problem.t_end,
    }
    code = 0
    last = None
    with open(out, "w", newline="") as handle:
        writer = trajectory_writer(fmt, handle, scenario.coordinates, names)
        try:
            for sample in iter_integrate(problem, scenario.selector):
                writer.write(sample)
                last = sample
            summary["status"] = "ok"
        except BlowUpError as exc:
            logger.error("blow-up at t=%r: %s", exc.time, exc.reason)
            summary["status"] = "blow-up"
            summary["blow_up_time"] = exc.time
            code = 3
        finally:
            writer.close()
        summary["rows"] = writer.rows
    summary["final_state"] = None if last is None else [float(v) for v in last.x]
    summary["digest"] = file_digest(out)
    return summary, code


def cmd_bracket(scenario: Scenario, f_text: str, g_text: str, at: Sequence[float]) -> Dict[str, object]:
    f, g = scenario.field(f_text), scenario.field(g_text)
    x = scenario.point(at)
    J, S = scenario.J, scenario.S
    return {
        "command": "bracket",
        "scenario": scenario.name,
        "f": f_text,
        "g": g_text,
        "at": x.tolist(),
        "gspb": gspb(f, g, J, S, x),
        "gpb": gpb(f, g, J, x),
        "x_chi_pair": x_chi_pair(f, g, J, S, x),
        "decomposition_residual": decomposition_residual(f, g, J, S, x),
    }


def cmd_equilibrium(scenario: Scenario, guess: Sequence[float], tol: Optional[float] = None,
                    max_iter: Optional[int] = None) -> Tuple[Dict[str, object], int]:
    x0 = scenario.point(guess)
    data: Dict[str, object] = {"command": "equilibrium", "scenario": scenario.name, "guess": x0.tolist()}
    try:
        result = equilibrium_solve(scenario.H, scenario.J, scenario.S, x0, tol=tol, max_iter=max_iter)
    except ConvergenceError as exc:
        data.update(status="not-converged", message=str(exc), iterations=exc.iterations, residual=exc.residual)
        return data, 1
    except DegenerateStructureError as exc:
        data.update(status="degenerate", message=str(exc), residual=exc.residual)
        return data, 1
    except SingularJacobianError as exc:
        data.update(status="singular", message=str(exc))
        return data, 1
    data.update(status="converged", **result.to_dict())
    return data, 0


def cmd_roots(scenario: Scenario, at: Sequence[float]) -> Dict[str, object]:
    x = scenario.point(at)
    data = characteristic_data_at(scenario.H, scenario.J, scenario.S, x)
    return {"command": "roots", "scenario": scenario.name, "at": x.tolist(), **data.to_dict()}


def exit_code_for(exc: BaseException) -> int:
    """Exit code for an exception escaping a command handler."""
    if isinstance(exc, (ConvergenceError, SingularJacobianError, DegenerateStructureError)):
        return 1
    if isinstance(exc, (DomainError, BlowUpError, FloatingPointError)):
        return 3
    if isinstance(exc, (ValueError, OSError, KeyError)):
        return 2
    return 3
