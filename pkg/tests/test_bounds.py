#!/usr/bin/env python3
"""
Tests for the bound calculus: f, c, g, alpha1 and the order bound variants.
"""

import os
import random
import sys
import unittest
from fractions import Fraction

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from frobound.modules.arith import RatFunc, RatFuncMatrix
from frobound.modules.bounds import (
    GENERIC_POLE,
    NO_POLE,
    ZERO_OR_INFINITY,
    BasisChangeBound,
    BoundProfile,
    BoundRow,
    alpha1,
    basis_change_bound,
    bound_table,
    c_value,
    coefficient_vanishing_threshold,
    f_of_i,
    g_of_m,
    g_scan,
    is_teichmuller,
    order_bound,
    profile_for,
)
from frobound.modules.connection import INFINITY_POINT, builtin_connection
from frobound.utils.exceptions import InputError, UnsupportedInputError
from frobound.utils.helpers import floor_log


def naive_g(m, profile, c, limit):
    best = None
    for i in range(profile.first_index, limit):
        if i + profile.vPhi + c + f_of_i(i, profile) < m:
            best = i
    return best


class TestIndexFunctions(unittest.TestCase):
    """Test cases for f, c and g against brute-force scans."""

    def family_profile(self, p):
        return BoundProfile(p, 2, 0, 0, -1, (Fraction(0), Fraction(0)))

    def test_f_for_the_family(self):
        profile = self.family_profile(3)
        for i in range(1, 100):
            self.assertEqual(f_of_i(i, profile), -floor_log(i, 3))
        with self.assertRaises(ValueError):
            f_of_i(-1, profile)

    def test_g_matches_naive_scan(self):
        for p in (3, 5, 7):
            profile = self.family_profile(p)
            for m in range(1, 251):
                naive = max(i for i in range(0, m + 20) if i - floor_log(i, p) < m)
                self.assertEqual(g_of_m(m, profile), naive, f"p={p}, m={m}")

    def test_small_values(self):
        self.assertEqual(g_scan(3, self.family_profile(3)), (3, False))
        self.assertEqual(g_scan(1, self.family_profile(3)), (0, False))
        self.assertEqual(g_of_m(2, self.family_profile(5)), 1)
        with self.assertRaises(ValueError):
            g_scan(0, self.family_profile(3))

    def test_c_is_zero_for_integral_connection(self):
        self.assertEqual(c_value(self.family_profile(3)), 0)

    def test_negative_valuation_of_N(self):
        profile = BoundProfile(3, 2, -3, 0, -3, (0, 0))
        naive = min(0, min(i + f_of_i(i, profile) for i in range(0, 2000)))
        self.assertEqual(naive, -2)
        self.assertEqual(c_value(profile), naive)
        for m in range(1, 40):
            expected = naive_g(m, profile, naive, m + 200)
            g, empty = g_scan(m, profile)
            if expected is None:
                self.assertTrue(empty)
            else:
                self.assertEqual(g, expected, f"m={m}")

    def test_empty_index_set(self):
        profile = BoundProfile(3, 2, 0, 2, -2, (0, 0), include_zero=False)
        # i + 2 - 0 >= 3 for every i >= 1
        self.assertEqual(g_scan(1, profile), (0, True))


def digit_logs(i, p):
    """(floor(log_p i), ceil(log_p i)) by repeated multiplication, (0, 0) for i <= 1."""
    if i <= 1:
        return 0, 0
    lo = 0
    while p ** (lo + 1) <= i:
        lo += 1
    return lo, lo if p ** lo == i else lo + 1


class TestRandomProfiles(unittest.TestCase):
    """c and g against a brute-force scan over a long finite range."""

    HORIZON = 800

    def oracle(self, profile, m_values):
        p, s, r = profile.p, profile.vPhi + profile.vPhiInv, profile.r
        f = {}
        for i in range(profile.first_index, self.HORIZON):
            lo, hi = digit_logs(i, p)
            f[i] = max(s * hi, (r - 1) * profile.vN + s * lo)
        c = 0 if profile.vN >= 0 else min([0] + [i + f[i] for i in f])
        g = {}
        for m in m_values:
            hits = [i for i in f if i + profile.vPhi + c + f[i] < m]
            g[m] = (max(hits), False) if hits else (0, True)
        return c, g

    def test_random_profiles(self):
        rng = random.Random(1009)
        m_values = range(1, 41)
        for _ in range(120):
            p = rng.choice([3, 5, 7, 11])
            vPhi = rng.randint(-2, 2)
            vPhiInv = rng.randint(-4, 0) - vPhi
            profile = BoundProfile(p, rng.randint(1, 4), rng.randint(-3, 2), vPhi, vPhiInv, (0, 0),
                                   include_zero=rng.random() < 0.5)
            c, g = self.oracle(profile, m_values)
            self.assertEqual(c_value(profile), c, profile)
            for m in m_values:
                self.assertEqual(g_scan(m, profile), g[m], (profile, m))


class TestAlpha(unittest.TestCase):
    """Test cases for alpha1 and the coefficient threshold."""

    def test_alpha1_at_two(self):
        quarter = (Fraction(-1, 4), Fraction(1, 4))
        for p in (3, 5, 7, 11, 13):
            self.assertEqual(alpha1(quarter, p), (p + 1) // 4)

    def test_alpha1_integral(self):
        self.assertEqual(alpha1((0, 0), 3), 0)
        self.assertEqual(alpha1((-1, 2), 5), 7)
        with self.assertRaises(InputError):
            alpha1((), 3)

    def test_threshold(self):
        self.assertEqual(coefficient_vanishing_threshold((Fraction(-1, 4), Fraction(1, 4)), 3), -1)


class TestOrderBound(unittest.TestCase):
    """Test cases for the order bound and its refinements."""

    def setUp(self):
        self.conn = builtin_connection("elliptic-example", 3)

    def test_nilpotent_point(self):
        report = bound_table(self.conn, -2, range(1, 11))
        for row in report.rows:
            self.assertEqual(row.bound, -3 * row.g)
            self.assertIsNone(row.diagonal_condition)
            self.assertEqual(row.variant, "base")

    def test_generic_pole_at_two(self):
        conn = builtin_connection("elliptic-example", 5)
        for row in bound_table(conn, 2, range(1, 8)).rows:
            self.assertEqual(row.base_bound, -(1 + 5 * row.g))
            self.assertGreaterEqual(row.bound, row.base_bound)

    def test_diagonal_residue_improvement(self):
        report = bound_table(self.conn, 2, [2, 3])
        low, high = report.rows
        # g(2) = 1 < 2: base bound
        self.assertFalse(low.diagonal_condition)
        self.assertEqual(low.bound, -4)
        # g(3) = 3 >= 3: one factor of p saved
        self.assertTrue(high.diagonal_condition)
        self.assertEqual(high.bound, -7)
        self.assertEqual(high.variant, "diagonal-residue")

    def test_infinity(self):
        report = bound_table(self.conn, INFINITY_POINT, [1, 2, 3])
        self.assertEqual([row.bound for row in report.rows], [-2, -2, -2])
        self.assertEqual(report.profile.z_case, ZERO_OR_INFINITY)
        self.assertEqual(report.to_records()[0]["z"], "inf")

    def test_no_pole(self):
        profile = profile_for(self.conn, 1)
        self.assertEqual(profile.z_case, NO_POLE)
        self.assertEqual(order_bound(5, profile).bound, 0)

    def test_teichmuller_points(self):
        self.assertTrue(is_teichmuller(-1, 3))
        self.assertTrue(is_teichmuller(0, 5))
        self.assertFalse(is_teichmuller(2, 3))
        self.assertFalse(is_teichmuller(INFINITY_POINT, 3))
        profile = BoundProfile(3, 2, 0, 0, -1, (0, 0), GENERIC_POLE, teichmuller=True)
        row = order_bound(3, profile)
        self.assertEqual(row.base_bound, -9)
        self.assertEqual(row.bound, -6)
        self.assertEqual(row.variant, "teichmuller")

    def test_invalid_m(self):
        with self.assertRaises(InputError):
            order_bound(0, profile_for(self.conn, 2))

    def test_records(self):
        records = bound_table(self.conn, 2, [1]).to_records()
        self.assertEqual(records[0]["alpha1"], 1)
        self.assertEqual(records[0]["diagonal_condition"], "false")


class TestBasisChange(unittest.TestCase):
    """Test cases for bounds after a change of basis."""

    def test_shearing_matrix(self):
        row = BoundRow(m=3, alpha1=0, alpha2=0, g=3, c=0, base_bound=-2, bound=-2)
        W = RatFuncMatrix.diagonal([RatFunc.parse("1/t"), RatFunc.const(1)])
        self.assertEqual(basis_change_bound(row, W, 0, 3), BasisChangeBound(3, -3))

    def test_scalar_matrix_keeps_precision(self):
        row = BoundRow(m=4, alpha1=0, alpha2=0, g=4, c=0, base_bound=-1, bound=-1)
        W = RatFuncMatrix.identity(2) * 3
        self.assertEqual(basis_change_bound(row, W, 2, 3), BasisChangeBound(4, -1))


class TestBoundProfile(unittest.TestCase):
    """Test cases for profile validation."""

    def test_rejects_bad_profiles(self):
        with self.assertRaises(InputError):
            BoundProfile(3, 2, 0, 0, -1, ())
        with self.assertRaises(UnsupportedInputError):
            BoundProfile(3, 2, 0, 0, -1, (Fraction(1, 3), 0))
        with self.assertRaises(InputError):
            BoundProfile(3, 2, 0, 1, 0, (0, 0))
        with self.assertRaises(InputError):
            BoundProfile(3, 2, 0, 0, -1, (0, 0), z_case="somewhere")

    def test_family_profile(self):
        profile = profile_for(builtin_connection("elliptic-example", 3), 2)
        self.assertEqual(profile.vN, 0)
        self.assertEqual(profile.s, -1)
        self.assertEqual(profile.vS_sum, 0)
        self.assertEqual(profile.first_index, 0)


if __name__ == "__main__":
    unittest.main()
