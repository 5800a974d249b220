import math
import os
import sys
import time
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

# Add the src directory and the repository root to the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from dynamics.equilibrium import equilibrium_solve
from dynamics.flow import (
    acceleration,
    casimir_scan,
    characteristic_roots,
    covariant_time_derivative,
    decay_solution,
    flow_derivatives,
    gchs_alternate_residual,
    gchs_rate,
    observable_rate,
    s_dynamics,
    s_dynamics_alternatives,
    tghs_jacobian,
    tghs_rhs,
    w_form_discrepancy,
    w_form_discrepancy_components,
)
from dynamics.integrator import FlowProblem, central_time_derivative, integrate, iter_integrate, time_series
from fields.sampling import sample_points
from fields.scalar import ConstantField, ExpressionField
from poisson.structural import StructuralData
from poisson.structure import StructureMatrixField
from utils.errors import BlowUpError, ConvergenceError, DegenerateStructureError, ShapeError

QP = ("q", "p")
X3 = ("x1", "x2", "x3")


def harmonic():
    return ExpressionField.parse("(q^2+p^2)/2", QP)


def chi_q():
    return StructuralData(ExpressionField.parse("q", QP))


class TestFlowQuantities(unittest.TestCase):

    def setUp(self):
        self.J = StructureMatrixField.canonical(1)
        self.S = chi_q()
        self.H = harmonic()
        self.x = np.array([1.0, 2.0])

    def test_s_dynamics(self):
        self.assertAlmostEqual(s_dynamics(self.H, self.J, self.S, self.x), 2.0)
        forms = s_dynamics_alternatives(self.H, self.J, self.S, self.x)
        for value in forms:
            self.assertAlmostEqual(value, 2.0, places=13)

    def test_tghs_and_gchs(self):
        np.testing.assert_allclose(tghs_rhs(self.H, self.J, self.S, self.x), [2.0, -3.5])
        np.testing.assert_allclose(gchs_rate(self.H, self.J, self.S, self.x), [4.0, 0.5])
        self.assertLessEqual(gchs_alternate_residual(self.H, self.J, self.S, self.x), 1e-12)

    def test_w_form_discrepancy(self):
        """W DH and the coordinate rates differ by -b (x . DH): 7.5 in the p component here."""
        np.testing.assert_allclose(w_form_discrepancy_components(self.H, self.J, self.S, self.x), [0.0, -7.5],
                                   atol=1e-12)
        self.assertAlmostEqual(w_form_discrepancy(self.H, self.J, self.S, self.x), 7.5, delta=1e-10)

    def test_w_form_discrepancy_matches_analytic_value(self):
        start = time.time()
        for x in sample_points([(-1.0, 1.0)] * 2, 100, np.random.default_rng(3)):
            q, p = x
            H = (q * q + p * p) / 2
            DH = np.array([q + H, p])
            expected = abs(float(x @ DH))          # b = (0, 1)
            self.assertAlmostEqual(w_form_discrepancy(self.H, self.J, self.S, x), expected, delta=1e-10)
        self.assertLess(time.time() - start, 0.5)

    def test_observable_rates(self):
        covariant, plain = observable_rate(self.H, self.H, self.J, self.S, self.x)
        self.assertAlmostEqual(covariant, 0.0, places=13)
        self.assertAlmostEqual(plain, -2.0 * 2.5, places=13)
        self.assertAlmostEqual(covariant_time_derivative(self.H, self.H, self.J, self.S, self.x), 0.0, places=13)

    def short_flow(self):
        """Three samples of the TGHS flow through self.x, one small step apart."""
        trajectory = integrate(FlowProblem(self.J, self.S, self.H, self.x, dt=1e-4, t_end=2e-4))
        self.assertEqual(len(trajectory), 3)
        return trajectory.states, trajectory.w, trajectory.dt

    def test_acceleration_matches_flow_differences(self):
        states, w, h = self.short_flow()
        xdot = (states[2] - states[0]) / (2 * h)
        xddot = (states[2] - 2 * states[1] + states[0]) / h ** 2
        dwdt = (w[2] - w[0]) / (2 * h)
        a, data = acceleration(self.H, self.J, self.S, states[1])
        self.assertAlmostEqual(data.w, w[1], places=12)
        self.assertAlmostEqual(data.dwdt, dwdt, delta=1e-6)
        expected = xddot + 2 * w[1] * xdot + states[1] * (w[1] ** 2 + dwdt)
        np.testing.assert_allclose(a, expected, rtol=1e-5, atol=1e-5)

    def test_plain_rate_matches_flow_differences(self):
        states, w, h = self.short_flow()
        f = ExpressionField.parse("q*p", QP)
        numeric = (f.value(states[2]) - f.value(states[0])) / (2 * h)
        covariant, plain = observable_rate(f, self.H, self.J, self.S, states[1])
        self.assertAlmostEqual(plain, numeric, delta=1e-6)
        self.assertAlmostEqual(covariant - plain, w[1] * f.value(states[1]), places=12)

    def test_flow_derivatives(self):
        d = flow_derivatives(self.H, self.J, self.S, self.x)
        self.assertAlmostEqual(d.w, 2.0)
        self.assertAlmostEqual(d.dwdt, -3.5)
        # pdot = -(q + H), so d pdot / dq = -(1 + q) = -2, d pdot / dp = -p = -2
        np.testing.assert_allclose(d.jacobian, [[0.0, 1.0], [-2.0, -2.0]])
        h = 1e-6
        numeric = np.column_stack([
            (tghs_rhs(self.H, self.J, self.S, self.x + h * e) - tghs_rhs(self.H, self.J, self.S, self.x - h * e)) / (2 * h)
            for e in np.eye(2)
        ])
        np.testing.assert_allclose(tghs_jacobian(self.H, self.J, self.S, self.x), numeric, atol=1e-7)

    def test_characteristic_data_at_worked_point(self):
        a, data = acceleration(self.H, self.J, self.S, self.x)
        self.assertAlmostEqual(data.beta, 0.5)
        self.assertAlmostEqual(data.discriminant, 14.0)
        self.assertFalse(data.oscillatory)
        r = math.sqrt(3.5)
        self.assertAlmostEqual(data.lambda1.real, -2.0 + r)
        self.assertAlmostEqual(data.lambda2.real, -2.0 - r)
        self.assertEqual(a.shape, (2,))

    def test_casimir_scan_so3(self):
        J = StructureMatrixField.so3()
        S = StructuralData.trivial(3)
        casimir = ExpressionField.parse("(x1^2+x2^2+x3^2)/2", X3)
        H = ExpressionField.parse("x1^2/2 + x2^2/4 + x3^2/6", X3)
        report = casimir_scan(casimir, H, J, S, [(-1.0, 1.0)] * 3, 50, np.random.default_rng(1))
        self.assertTrue(report.commuting)
        self.assertLessEqual(report.max_residual, 1e-10)
        self.assertEqual(report.samples, 50)

    def test_casimir_scan_detects_broken_casimir(self):
        """With chi = x3 the sphere radius no longer commutes with H = x1: {C, H} = C x2."""
        J = StructureMatrixField.so3()
        S = StructuralData(ExpressionField.parse("x3", X3))
        casimir = ExpressionField.parse("(x1^2+x2^2+x3^2)/2", X3)
        H = ExpressionField.parse("x1", X3)
        report = casimir_scan(casimir, H, J, S, [(-1.0, 1.0)] * 3, 50, np.random.default_rng(1))
        self.assertFalse(report.commuting)
        self.assertGreater(report.max_residual, 0.1)
        worst = np.array(report.worst_point)
        self.assertAlmostEqual(report.max_residual, abs(casimir.value(worst) * worst[1]), places=12)

    def test_decay_solution(self):
        self.assertAlmostEqual(decay_solution(2.0, 0.5, 2.0), 2.0 * math.exp(-1.0))


class TestCharacteristicRoots(unittest.TestCase):

    def test_real_pair(self):
        data = characteristic_roots(0.0, -4.0)
        self.assertEqual(sorted([data.lambda1.real, data.lambda2.real]), [-2.0, 2.0])
        self.assertEqual(data.discriminant, 16.0)
        self.assertFalse(data.oscillatory)

    def test_complex_pair(self):
        data = characteristic_roots(1.0, 1.0)
        self.assertEqual(data.lambda1, complex(-1.0, 1.0))
        self.assertEqual(data.lambda2, complex(-1.0, -1.0))
        self.assertTrue(data.oscillatory)

    def test_double_root(self):
        data = characteristic_roots(1.5, 0.0)
        self.assertEqual(data.lambda1, data.lambda2)
        self.assertEqual(data.lambda1, complex(-1.5, 0.0))

    def test_to_dict_splits_roots(self):
        data = characteristic_roots(1.0, 1.0).to_dict()
        self.assertEqual(data["lambda1"], {"re": -1.0, "im": 1.0})

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(min_value=-100, max_value=100), st.floats(min_value=-100, max_value=100))
    def test_vieta_relations(self, w, dwdt):
        data = characteristic_roots(w, dwdt)
        self.assertEqual(data.discriminant, -4.0 * dwdt)
        scale = 1.0 + abs(w) + abs(data.beta)
        self.assertLessEqual(abs((data.lambda1 + data.lambda2) - (-2.0 * w)), 1e-10 * scale)
        self.assertLessEqual(abs(data.lambda1 * data.lambda2 - data.beta), 1e-10 * scale * scale)


class TestEquilibrium(unittest.TestCase):

    def setUp(self):
        self.J = StructureMatrixField.canonical(1)
        self.H = harmonic()

    def test_grid_finds_both_equilibria(self):
        start = time.time()
        found = set()
        for q in (-2.5, -1.75, -0.5, 0.25, 1.0):
            for p in (-1.0, -0.5, 0.0, 0.5, 1.0):
                result = equilibrium_solve(self.H, self.J, chi_q(), [q, p])
                self.assertLessEqual(result.residual, 1e-12)
                found.add((round(result.state[0], 9) + 0.0, round(result.state[1], 9) + 0.0))
        self.assertEqual(found, {(0.0, 0.0), (-2.0, 0.0)})
        self.assertLess(time.time() - start, 1.0)

    def test_guess_near_second_root(self):
        result = equilibrium_solve(self.H, self.J, chi_q(), [-1.5, 0.1])
        np.testing.assert_allclose(result.state, [-2.0, 0.0], atol=1e-10)
        self.assertLessEqual(result.stationarity, 1e-12)

    def test_classical_equilibrium(self):
        result = equilibrium_solve(self.H, self.J, StructuralData.trivial(2), [0.1, 0.1])
        np.testing.assert_allclose(result.state, [0.0, 0.0], atol=1e-12)

    def test_bad_guess_dimension(self):
        with self.assertRaises(ShapeError):
            equilibrium_solve(self.H, self.J, chi_q(), [0.0, 0.0, 0.0])

    def test_degenerate_structure(self):
        J = StructureMatrixField.so3()
        H = ExpressionField.parse("x1^2/2 + x2^2/4 + x3^2/6", X3)
        with self.assertRaises(DegenerateStructureError):
            equilibrium_solve(H, J, StructuralData.trivial(3), [0.5, 0.2, 0.1])

    def test_iteration_limit(self):
        with self.assertRaises(ConvergenceError) as ctx:
            equilibrium_solve(self.H, self.J, chi_q(), [0.7, 0.4], max_iter=1)
        self.assertEqual(ctx.exception.iterations, 1)


class TestIntegrator(unittest.TestCase):

    def setUp(self):
        self.J = StructureMatrixField.canonical(1)
        self.H = harmonic()

    def test_classical_orbit_closes(self):
        start = time.time()
        problem = FlowProblem(self.J, StructuralData.trivial(2), self.H, [1.0, 0.0], dt=1e-3, t_end=2 * math.pi)
        trajectory = integrate(problem)
        self.assertLess(time.time() - start, 10.0)
        np.testing.assert_allclose(trajectory.final_state, [1.0, 0.0], atol=1e-9)
        self.assertLessEqual(np.max(np.abs(trajectory.hamiltonian - 0.5)), 1e-10)
        self.assertTrue(np.all(trajectory.w == 0.0))
        self.assertEqual(trajectory.times[-1], 2 * math.pi)

    def test_zero_horizon(self):
        problem = FlowProblem(self.J, chi_q(), self.H, [1.0, 2.0], t_end=0.0)
        trajectory = integrate(problem)
        self.assertEqual(len(trajectory), 1)
        np.testing.assert_array_equal(trajectory.final_state, [1.0, 2.0])
        np.testing.assert_array_equal(trajectory.final_state, trajectory.states[-1])

    def test_rk4_global_error_is_fourth_order(self):
        exact = np.array([math.cos(1.0), -math.sin(1.0)])
        errors = []
        for dt in (0.1, 0.05):
            trajectory = integrate(FlowProblem(self.J, StructuralData.trivial(2), self.H, [1.0, 0.0], dt=dt, t_end=1.0))
            errors.append(np.max(np.abs(trajectory.final_state - exact)))
        ratio = errors[0] / errors[1]
        self.assertGreaterEqual(ratio, 12.0)
        self.assertLessEqual(ratio, 20.0)

    def test_effective_step(self):
        problem = FlowProblem(self.J, chi_q(), self.H, [0.1, 0.1], dt=0.3, t_end=1.0)
        self.assertEqual(problem.step_count(), 4)
        self.assertAlmostEqual(problem.effective_dt(), 0.25)
        self.assertEqual(len(integrate(problem)), 5)
        self.assertEqual(FlowProblem(self.J, chi_q(), self.H, [0.1, 0.1], dt=1e-3, t_end=1.0).step_count(), 1000)

    def test_invalid_problem(self):
        with self.assertRaisesRegex(ValueError, "integrator.dt must be > 0"):
            FlowProblem(self.J, chi_q(), self.H, [0.0, 0.0], dt=0.0)
        with self.assertRaises(ShapeError):
            FlowProblem(self.J, chi_q(), self.H, [0.0, 0.0, 0.0])

    def test_covariant_flow_consistency(self):
        """Along the chi = q flow dH/dt = -w H, and sampled states follow tghs_rhs."""
        start = time.time()
        S = chi_q()
        problem = FlowProblem(self.J, S, self.H, [0.3, 0.2], dt=1e-3, t_end=5.0)
        trajectory = integrate(problem)
        self.assertLess(time.time() - start, 20.0)
        for sample in trajectory.samples:
            dHdt = float(self.H.gradient(sample.x) @ tghs_rhs(self.H, self.J, S, sample.x))
            self.assertLessEqual(abs(dHdt + sample.w * sample.H), 1e-6)
        states = trajectory.states
        numeric = central_time_derivative(states, trajectory.dt)
        analytic = np.array([tghs_rhs(self.H, self.J, S, x) for x in states[1:-1]])
        self.assertLessEqual(np.max(np.abs(numeric - analytic)), 1e-5)
        numeric_H = central_time_derivative(trajectory.hamiltonian, trajectory.dt)
        expected_H = -(trajectory.w * trajectory.hamiltonian)[1:-1]
        self.assertLessEqual(np.max(np.abs(numeric_H - expected_H)), 1e-5)

    def test_observables_and_series(self):
        observable = ("q^2+p^2", ExpressionField.parse("q^2+p^2", QP))
        problem = FlowProblem(self.J, chi_q(), self.H, [0.3, 0.2], t_end=0.1, observables=(observable,),
                              coordinates=QP)
        trajectory = integrate(problem)
        series = time_series(trajectory)
        np.testing.assert_allclose(series["q^2+p^2"], 2.0 * series["H"])
        self.assertEqual(list(series), ["t", "q", "p", "w", "H", "q^2+p^2"])

    def test_blow_up_keeps_partial_trajectory(self):
        H = ExpressionField.parse("q^2*p", QP)        # qdot = q^2 leaves the reals at t = 1/q0
        problem = FlowProblem(self.J, StructuralData.trivial(2), H, [2.0, 1.0], dt=1e-3, t_end=1.0)
        with self.assertRaises(BlowUpError) as ctx:
            integrate(problem)
        self.assertGreater(ctx.exception.time, 0.4)
        self.assertLess(ctx.exception.time, 1.0)
        self.assertGreater(len(ctx.exception.trajectory), 1)
        self.assertTrue(np.all(np.isfinite(ctx.exception.trajectory.states)))

    def test_generator_streams_samples(self):
        problem = FlowProblem(self.J, StructuralData(ConstantField(0.0, 2)), self.H, [1.0, 0.0], dt=0.1, t_end=0.3)
        times = [sample.t for sample in iter_integrate(problem)]
        self.assertEqual(len(times), 4)
        self.assertEqual(times[0], 0.0)
        self.assertEqual(times[-1], 0.3)


if __name__ == '__main__':
    unittest.main()
