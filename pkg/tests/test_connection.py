#!/usr/bin/env python3
"""
Tests for connections: singular points, residues, exponents, shearing and the Delta tower.
"""

import os
import random
import shutil
import sys
import tempfile
import unittest
from fractions import Fraction

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from frobound.modules.arith import RatFunc, RatFuncMatrix, frac_matrix
from frobound.modules.connection import (
    INFINITY_POINT,
    Connection,
    DeltaTower,
    builtin_connection,
    delta_leading_term,
    delta_matrices,
    exponents,
    format_point,
    gauge_transform,
    parse_point,
    residue_data,
    residue_matrix,
    shearing_transform,
    v_on_V,
    validate_theorem_hypotheses,
)
from frobound.utils.exceptions import ArithmeticDomainError, UnsupportedInputError


class TestBuiltinFamily(unittest.TestCase):
    """Test cases for the built-in elliptic family."""

    def setUp(self):
        self.conn = builtin_connection("elliptic-example", 3)

    def test_singular_points(self):
        self.assertEqual(self.conn.singular_points, (Fraction(-2), Fraction(2), INFINITY_POINT))
        self.assertEqual(self.conn.finite_singular_points, [Fraction(-2), Fraction(2)])

    def test_value_at_zero(self):
        expected = frac_matrix([[Fraction(1, 8), Fraction(-3, 8)], [Fraction(1, 8), Fraction(-1, 8)]])
        self.assertEqual(self.conn.N.evaluate(0), expected)

    def test_exponents(self):
        self.assertEqual(exponents(self.conn, 2), (Fraction(-1, 4), Fraction(1, 4)))
        self.assertEqual(exponents(self.conn, -2), (Fraction(0), Fraction(0)))
        self.assertEqual(exponents(self.conn, INFINITY_POINT), (Fraction(-1, 2), Fraction(1, 2)))

    def test_residue_at_two(self):
        expected = frac_matrix([[Fraction(-3, 8), Fraction(5, 8)], [Fraction(-1, 8), Fraction(3, 8)]])
        self.assertEqual(residue_matrix(self.conn, 2), expected)

    def test_diagonalizer(self):
        data = residue_data(self.conn, 2)
        self.assertEqual(data.diagonalizer, frac_matrix([[5, 1], [1, 1]]))
        self.assertEqual(data.v_s_sum(3), 0)
        self.assertEqual(data.v_s_sum(5), 0)
        # nilpotent residue at -2
        self.assertIsNone(residue_data(self.conn, -2).diagonalizer)

    def test_no_pole(self):
        data = residue_data(self.conn, 1)
        self.assertFalse(data.has_pole)
        self.assertEqual(data.exponents, (0, 0))

    def test_hypotheses(self):
        for z in self.conn.singular_points:
            self.assertTrue(validate_theorem_hypotheses(self.conn, z).passed)
        report = validate_theorem_hypotheses(self.conn.with_prime(2), 2)
        self.assertFalse(report.passed)
        self.assertFalse(report.exponents_integral)
        self.assertIn("passed", report.to_dict())

    def test_unknown_family(self):
        with self.assertRaises(UnsupportedInputError):
            builtin_connection("hypergeometric", 3)


class TestPoints(unittest.TestCase):
    """Test cases for point parsing."""

    def test_parse_point(self):
        self.assertEqual(parse_point("-1/3"), Fraction(-1, 3))
        self.assertEqual(parse_point("inf"), INFINITY_POINT)
        self.assertEqual(format_point(INFINITY_POINT), "inf")
        with self.assertRaises(UnsupportedInputError):
            parse_point("pi")


class TestLocalStructure(unittest.TestCase):
    """Test cases for higher-order poles, irrational exponents and shearing."""

    def test_double_pole_rejected(self):
        conn = Connection.from_rows([["1/t^2", "0"], ["0", "0"]], 3)
        with self.assertRaises(UnsupportedInputError):
            residue_matrix(conn, 0)
        self.assertFalse(validate_theorem_hypotheses(conn, 0).simple_pole)

    def test_irrational_exponents(self):
        conn = Connection.from_rows([["0", "2/t"], ["1/t", "0"]], 3)
        with self.assertRaises(UnsupportedInputError):
            exponents(conn, 0)
        self.assertFalse(validate_theorem_hypotheses(conn, 0).exponents_integral)

    def test_shearing_moves_exponents_to_zero(self):
        conn = Connection.from_rows([["1/t", "0"], ["0", "0"]], 3)
        W, N = shearing_transform(conn, 0)
        self.assertEqual(W, RatFuncMatrix.diagonal([RatFunc.parse("1/t"), RatFunc.const(1)]))
        self.assertTrue(N.is_zero)

    def test_shearing_needs_integer_exponents(self):
        with self.assertRaises(UnsupportedInputError):
            shearing_transform(builtin_connection("elliptic-example", 3), 2)

    def test_gauge_transform_by_constant(self):
        N = RatFuncMatrix.parse([["1/t", "1"], ["0", "0"]])
        W = RatFuncMatrix.identity(2) * 2
        self.assertEqual(gauge_transform(N, W), N)


class TestDeltaTower(unittest.TestCase):
    """Test cases for the divided-power operators."""

    def setUp(self):
        self.conn = builtin_connection("elliptic-example", 3)
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_first_terms(self):
        tower = DeltaTower(self.conn)
        self.assertEqual(tower.matrix(0), RatFuncMatrix.identity(2))
        self.assertEqual(tower.matrix(1), self.conn.N)

    def test_recursion(self):
        # Delta^(2) = (N' + N^2) / 2
        N = self.conn.N
        expected = (N.derivative() + N * N) * Fraction(1, 2)
        self.assertEqual(delta_matrices(self.conn, 2)[2], expected)

    def test_zero_connection(self):
        conn = Connection(3, RatFuncMatrix.zero(2))
        self.assertEqual(conn.singular_points, ())
        self.assertTrue(DeltaTower(conn).matrix(3).is_zero)

    def test_leading_term(self):
        # the (t - z)^-i coefficient of Delta^(i) is R (R - I) ... (R - (i - 1) I) / i!
        tower = DeltaTower(self.conn)
        for z in (2, -2):
            for i in range(1, 11):
                coefficient = tower.matrix(i).laurent_coefficient(z, -i)
                self.assertEqual(coefficient, delta_leading_term(self.conn, z, i), f"z={z}, i={i}")

    def test_leibniz_for_a_scalar_twist(self):
        # N + b I has Delta^(n) = sum_k Delta_N^(k) Delta_b^(n - k)
        rng = random.Random(31)
        for _ in range(3):
            rows = [[f"{rng.randint(-5, 5)}/(t - {rng.randint(1, 4)})", f"{rng.randint(-3, 3)}*t"],
                    [f"{rng.randint(1, 6)}", f"1/(t + {rng.randint(1, 4)})"]]
            b = RatFunc.parse(f"{rng.randint(1, 7)}/(t - {rng.randint(-4, -1)})")
            N = RatFuncMatrix.parse(rows)
            twisted = delta_matrices(Connection(3, N + RatFuncMatrix.identity(2) * b), 5)
            left = delta_matrices(Connection(3, N), 5)
            right = delta_matrices(Connection(3, RatFuncMatrix.diagonal([b])), 5)
            for n in range(6):
                total = RatFuncMatrix.zero(2)
                for k in range(n + 1):
                    total = total + left[k] * right[n - k].entry(0, 0)
                self.assertEqual(twisted[n], total, f"n={n}")

    def test_valuation_cache(self):
        tower = DeltaTower(self.conn, self.temp_dir)
        first = tower.valuations(3, 12)
        self.assertEqual(first[0], 0)
        self.assertTrue(os.listdir(self.temp_dir))
        again = DeltaTower(self.conn, self.temp_dir).valuations(3, 12)
        self.assertEqual(first, again)


class TestSupNorm(unittest.TestCase):
    """Test cases for the valuation on V."""

    def test_gauss_and_probe_agree(self):
        N = builtin_connection("elliptic-example", 3).N
        self.assertEqual(v_on_V(N, 3), 0)
        self.assertEqual(v_on_V(N, 3, method="probe"), 0)

    def test_pole_inside_probed_disc(self):
        f = RatFuncMatrix.parse([["1/(t - 3)"]])
        with self.assertRaises(ArithmeticDomainError):
            v_on_V(f, 3)


if __name__ == "__main__":
    unittest.main()
