import math
import os
import sys
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

# Add the src directory and the repository root to the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from fields.expression import parse_expression, print_expression
from fields.jet import Jet, determinant, seed_variables
from fields.matrix import ExpressionMatrixField, fd_matrix_partials, matrix_partials
from fields.polynomial import PolynomialField, monomial_exponents, random_polynomial
from fields.sampling import default_box, sample_points, validate_box
from fields.scalar import (
    ConstantField,
    ExpressionField,
    LinearCombination,
    ProductField,
    coordinate_fields,
    fd_gradient,
    fd_hessian,
)
from poisson.structure import StructureMatrixField
from utils.errors import DomainError, ExpressionSyntaxError, ShapeError, UnknownIdentifierError

QP = ("q", "p")


def expression_texts(max_depth=4):
    """Random expression text over q, p built from the grammar's productions."""
    leaves = st.one_of(
        st.sampled_from(["q", "p", "pi"]),
        st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False).map(repr),
        st.integers(min_value=0, max_value=50).map(str),
    )

    def extend(children):
        return st.one_of(
            st.tuples(children, st.sampled_from(["+", "-", "*", "/", "^"]), children).map(
                lambda t: f"({t[0]}){t[1]}({t[2]})"),
            children.map(lambda c: f"-({c})"),
            st.tuples(st.sampled_from(["sin", "cos", "exp", "log", "sqrt"]), children).map(
                lambda t: f"{t[0]}({t[1]})"),
        )

    return st.recursive(leaves, extend, max_leaves=max_depth * 2)


class TestExpressionParser(unittest.TestCase):

    def test_precedence_and_associativity(self):
        """Unary minus binds looser than ^, and ^ associates to the right."""
        self.assertEqual(parse_expression("-q^2", QP).evaluate([2.0, 0.0]), -4.0)
        self.assertEqual(parse_expression("2^3^2", QP).evaluate([0.0, 0.0]), 512.0)
        self.assertEqual(parse_expression("1 + 2 * q - p / 4", QP).evaluate([3.0, 2.0]), 6.5)
        self.assertEqual(parse_expression("(q^2+p^2)/2", QP).evaluate([1.0, 2.0]), 2.5)

    def test_functions_and_constants(self):
        expr = parse_expression("sin(pi/2) + exp(0) + log(1) + sqrt(q)", QP)
        self.assertAlmostEqual(expr.evaluate([4.0, 0.0]), 4.0, places=14)
        self.assertAlmostEqual(parse_expression("1e-05 * q", QP).evaluate([2.0, 0.0]), 2e-05, places=20)

    def test_unknown_identifier(self):
        with self.assertRaises(UnknownIdentifierError) as ctx:
            parse_expression("q + r", QP)
        self.assertEqual(ctx.exception.name, "r")
        self.assertEqual(ctx.exception.position, 4)

    def test_syntax_errors_report_position(self):
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse_expression("(q + p", QP)
        self.assertEqual(ctx.exception.position, 6)
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse_expression("q $ p", QP)
        self.assertEqual(ctx.exception.position, 2)
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse_expression("q*", QP)
        self.assertEqual(ctx.exception.position, 2)
        self.assertIn("end of input", str(ctx.exception))
        with self.assertRaises(ExpressionSyntaxError):
            parse_expression("q p", QP)
        with self.assertRaises(ExpressionSyntaxError):
            parse_expression("sin q", QP)

    def test_coordinate_names_validated(self):
        with self.assertRaises(ValueError):
            parse_expression("q", ("q", "q"))
        with self.assertRaises(ValueError):
            parse_expression("q", ("q", "sin"))
        with self.assertRaises(ValueError):
            parse_expression("1", ())

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            parse_expression("log(q)", QP).evaluate([-1.0, 0.0])
        with self.assertRaises(DomainError):
            parse_expression("1/q", QP).evaluate([0.0, 0.0])
        with self.assertRaises(DomainError):
            parse_expression("sqrt(q)", QP).jet(np.array([-1.0, 0.0]))

    def test_variables_reports_used_coordinates(self):
        self.assertEqual(parse_expression("q*q + 1", QP).variables(), {"q"})

    @settings(max_examples=200, deadline=None)
    @given(expression_texts())
    def test_print_parse_round_trip(self, text):
        parsed = parse_expression(text, QP)
        printed = print_expression(parsed)
        self.assertEqual(parse_expression(printed, QP), parsed)
        self.assertEqual(print_expression(parse_expression(printed, QP)), printed)


class TestJets(unittest.TestCase):

    def test_gradient_and_hessian_of_product(self):
        f = ExpressionField.parse("sin(q)*p^2", QP)
        x = np.array([0.7, -1.3])
        q, p = x
        np.testing.assert_allclose(f.gradient(x), [math.cos(q) * p ** 2, 2 * math.sin(q) * p], rtol=1e-14)
        expected = np.array([[-math.sin(q) * p ** 2, 2 * math.cos(q) * p],
                             [2 * math.cos(q) * p, 2 * math.sin(q)]])
        np.testing.assert_allclose(f.hessian(x), expected, rtol=1e-13, atol=1e-15)

    def test_forward_mode_matches_finite_differences(self):
        f = ExpressionField.parse("exp(q/3)*cos(p) + log(2+q^2)*p^3", QP)
        x = np.array([0.4, 0.9])
        np.testing.assert_allclose(f.gradient(x), fd_gradient(f, x), rtol=1e-8, atol=1e-9)
        np.testing.assert_allclose(f.hessian(x), fd_hessian(f, x), rtol=1e-6, atol=1e-7)

    def test_determinant_jet(self):
        x = np.array([2.0, 3.0])
        q, p = seed_variables(x, order=2)
        det = determinant([[q, p], [p, q * q]])      # q^3 - p^2
        self.assertAlmostEqual(det.value, -1.0)
        np.testing.assert_allclose(det.grad, [12.0, -6.0])
        np.testing.assert_allclose(det.hess, [[12.0, 0.0], [0.0, -2.0]])

    def test_constant_jet_has_zero_derivatives(self):
        jet = Jet.constant(3.0, 2, order=2)
        np.testing.assert_array_equal(jet.grad, np.zeros(2))
        np.testing.assert_array_equal(jet.hess, np.zeros((2, 2)))


class TestScalarFields(unittest.TestCase):

    def test_composed_fields(self):
        q, p = coordinate_fields(2)
        x = np.array([1.5, -2.0])
        combo = LinearCombination([(2.0, q), (-3.0, p)])
        product = ProductField(q, p)
        self.assertEqual(combo.value(x), 9.0)
        np.testing.assert_array_equal(combo.gradient(x), [2.0, -3.0])
        self.assertEqual(product.value(x), -3.0)
        np.testing.assert_array_equal(product.gradient(x), [-2.0, 1.5])
        np.testing.assert_array_equal(product.hessian(x), [[0.0, 1.0], [1.0, 0.0]])
        self.assertEqual(ConstantField(4.0, 2).value(x), 4.0)

    def test_dimension_mismatch(self):
        with self.assertRaises(ShapeError):
            ExpressionField.parse("q", QP).value([1.0, 2.0, 3.0])

    def test_fd_step_must_be_positive(self):
        with self.assertRaises(ValueError):
            fd_gradient(ExpressionField.parse("q", QP), [0.0, 0.0], h=0.0)


class TestPolynomials(unittest.TestCase):

    def test_monomial_count(self):
        self.assertEqual(len(monomial_exponents(2, 3)), 10)
        self.assertEqual(len(monomial_exponents(4, 3)), 35)

    def test_analytic_derivatives(self):
        # 2 + q*p - 3 q^2 p
        poly = PolynomialField([2.0, 1.0, -3.0], [[0, 0], [1, 1], [2, 1]])
        x = np.array([0.5, -1.5])
        self.assertAlmostEqual(poly.value(x), 2.0 - 0.75 + 1.125)
        np.testing.assert_allclose(poly.gradient(x), [-1.5 + 4.5, 0.5 - 0.75])
        np.testing.assert_allclose(poly.hessian(x), [[9.0, 1.0 - 3.0], [1.0 - 3.0, 0.0]])

    def test_random_polynomial_is_seeded(self):
        a = random_polynomial(np.random.default_rng(7), 3)
        b = random_polynomial(np.random.default_rng(7), 3)
        self.assertEqual(a.terms(), b.terms())
        self.assertLessEqual(a.degree, 3)


class TestMatrixFields(unittest.TestCase):

    def test_so3_partials(self):
        """J_ij = eps_ijk x_k, so d_3 J_12 = 1 everywhere."""
        J = StructureMatrixField.so3()
        x = np.array([0.3, -0.2, 0.9])
        dJ = J.partials(x)
        self.assertEqual(dJ[2, 0, 1], 1.0)
        self.assertEqual(dJ[2, 1, 0], -1.0)
        np.testing.assert_allclose(dJ, fd_matrix_partials(J.field, x), atol=1e-9)

    def test_expression_grid_partials(self):
        field = ExpressionMatrixField.parse([["0", "q*p"], ["-q*p", "0"]], QP)
        x = np.array([2.0, 3.0])
        dJ = field.partials(x)
        self.assertEqual(dJ[0, 0, 1], 3.0)
        self.assertEqual(dJ[1, 0, 1], 2.0)
        np.testing.assert_allclose(dJ, fd_matrix_partials(field, x), atol=1e-9)

    def test_matrix_partials(self):
        np.testing.assert_array_equal(matrix_partials(StructureMatrixField.canonical(2).field, np.ones(4)),
                                      np.zeros((4, 4, 4)))
        field = ExpressionMatrixField.parse([["1", "0"], ["0", "r^2"]], ("r", "phi"))
        dg = matrix_partials(field, [1.5, 0.2])
        self.assertEqual(dg[0, 1, 1], 3.0)
        self.assertEqual(dg[1, 1, 1], 0.0)


class TestSampling(unittest.TestCase):

    def test_samples_stay_in_box_and_repeat(self):
        box = validate_box([[0.5, 2.0], [-1.0, 1.0]], 2)
        a = sample_points(box, 50, np.random.default_rng(3))
        b = sample_points(box, 50, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)
        self.assertTrue(np.all(a[:, 0] >= 0.5) and np.all(a[:, 0] <= 2.0))
        self.assertEqual(default_box(3), [(-1.0, 1.0)] * 3)

    def test_invalid_box(self):
        with self.assertRaises(ShapeError):
            validate_box([[0.0, 1.0]], 2)
        with self.assertRaises(ValueError):
            validate_box([[1.0, 1.0], [0.0, 1.0]], 2)


if __name__ == '__main__':
    unittest.main()
