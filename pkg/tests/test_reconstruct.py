#!/usr/bin/env python3
"""
Tests for pole-order measurement, rational reconstruction and the experiment tables.

The sharpness tables for p = 3, 5, 7 run only when FROBOUND_SLOW_TESTS=1.
"""

import os
import shutil
import sys
import tempfile
import unittest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from frobound.modules.arith import RatFuncMatrix, SeriesMatrix
from frobound.modules.connection import builtin_connection
from frobound.modules.frobenius import compute_frobenius
from frobound.modules.reconstruct import (
    TABLE_COLUMNS,
    PoleOrderReport,
    PoleOrderRow,
    degree_cap,
    experiment_table,
    lift_change_pole_budget,
    measured_order_at,
    measured_order_series,
    monotone_violations,
    pole_budget,
    rational_reconstruction,
    reports_to_frame,
)
from frobound.modules.bounds import profile_for
from frobound.utils.exceptions import PrecisionError, ReconstructionError

SLOW = os.environ.get("FROBOUND_SLOW_TESTS") == "1"


def expand(rows, p=3, m=3, K=128):
    return RatFuncMatrix.parse(rows).to_series_matrix(p, m, K)


class TestMeasuredOrder(unittest.TestCase):
    """Test cases for the window test on synthetic series."""

    def test_simple_and_double_poles(self):
        self.assertEqual(measured_order_series(expand([["1/(t - 2)"]]), 2, 3, {}), -1)
        self.assertEqual(measured_order_series(expand([["1/(t - 2)^2"]]), 2, 3, {}), -2)
        self.assertEqual(measured_order_series(expand([["(t - 2)^2"]]), 2, 3, {}), 2)

    def test_other_pole_is_cleared(self):
        Phi = expand([["1/((t - 2)*(t + 2))"]])
        self.assertEqual(measured_order_series(Phi, 2, 3, {-2: 1}), -1)
        self.assertEqual(measured_order_series(Phi, -2, 3, {2: 3}), -1)

    def test_wider_window_gives_same_order(self):
        Phi = expand([["1/(t - 2)^2", "t"], ["1/((t - 2)*(t + 2))", "3"]])
        for window in (12, 24):
            self.assertEqual(measured_order_series(Phi, 2, 3, {-2: 1}, window=window), -2)
            self.assertEqual(measured_order_series(Phi, 2, 3, {-2: 1}, window=2 * window), -2)

    def test_constant_matrix(self):
        Phi = SeriesMatrix.constant([[1, 2], [3, 4]], 3, 4, 64)
        self.assertEqual(measured_order_series(Phi, 2, 2, {}), 0)

    def test_zero_modulo_p_m_returns_cap(self):
        Phi = SeriesMatrix.constant([[9, 0], [0, 9]], 3, 4, 64)
        self.assertEqual(measured_order_series(Phi, 2, 2, {}, cap=10), 10)

    def test_small_K(self):
        Phi = SeriesMatrix.constant([[1, 0], [0, 1]], 3, 4, 32)
        with self.assertRaises(ReconstructionError):
            measured_order_series(Phi, 2, 2, {})

    def test_precision_beyond_accuracy(self):
        conn = builtin_connection("elliptic-example", 3)
        with self.assertRaises(PrecisionError):
            measured_order_at(expand([["1/(t - 2)"]]), conn, 2, 4)


class TestBudgets(unittest.TestCase):
    """Test cases for pole budgets and the degree cap."""

    def setUp(self):
        self.conn = builtin_connection("elliptic-example", 3)

    def test_pole_budget(self):
        # bound at 2 for m = 1 is -1
        self.assertEqual(pole_budget(self.conn, -2, 1), {2: 5})
        # bound at -2 for m = 1 is 0
        self.assertEqual(pole_budget(self.conn, 2, 1), {-2: 4})

    def test_degree_cap(self):
        # 2 * (5 + 0 + 2) + 32
        self.assertEqual(degree_cap(self.conn, -2, 1, {2: 5}), 46)

    def test_lift_change_budget(self):
        profile = profile_for(self.conn, -2)
        # g(1) = 0, so one term: 4 + 3 * (1 + 1)
        self.assertEqual(lift_change_pole_budget(self.conn, 2, 1, profile), {-2: 10})


class TestRationalReconstruction(unittest.TestCase):
    """Test cases for recovering a rational matrix from its expansion."""

    def test_round_trip(self):
        rows = [["1/(t - 2)", "t"], ["0", "(t + 1)/(t - 2)"]]
        result = rational_reconstruction(expand(rows), {2: -1}, 3)
        self.assertEqual(result, RatFuncMatrix.parse(rows))

    def test_symmetric_coefficients(self):
        result = rational_reconstruction(expand([["-5/(t + 2)"]]), {-2: -1}, 3)
        self.assertEqual(result, RatFuncMatrix.parse([["-5/(t + 2)"]]))

    def test_wrong_order(self):
        with self.assertRaises(ReconstructionError):
            rational_reconstruction(expand([["1/(t - 2)^2"]]), {2: -1}, 3)


class TestReports(unittest.TestCase):
    """Test cases for report rows and data frames."""

    def setUp(self):
        self.report = PoleOrderReport(3, -2, 24, 46, [
            PoleOrderRow(1, 0, 0, "base"),
            PoleOrderRow(2, -2, -3, "base"),
            PoleOrderRow(3, -1, -9, "base"),
        ])

    def test_sharp_set(self):
        self.assertEqual(self.report.sharp_set, [1])
        self.assertEqual(monotone_violations(self.report), [(2, 3)])

    def test_frame(self):
        frame = reports_to_frame([self.report])
        self.assertEqual(list(frame.columns), TABLE_COLUMNS)
        self.assertEqual(list(frame["m"]), [1, 2, 3])
        self.assertEqual(list(frame["z"]), ["-2", "-2", "-2"])
        self.assertEqual(list(frame["sharp"]), [True, False, False])


class TestSmallExperiment(unittest.TestCase):
    """End-to-end measurement at low precision."""

    @classmethod
    def setUpClass(cls):
        cls.temp_dir = tempfile.mkdtemp()
        cls.conn = builtin_connection("elliptic-example", 3)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.temp_dir)

    def test_first_two_precisions(self):
        reports = experiment_table(self.conn, 2, [2, 1], 128, points=[-2, 2], cache_dir=self.temp_dir)
        self.assertEqual([report.z for report in reports], [-2, 2])
        self.assertEqual([row.m for row in reports[0].rows], [1, 2])
        self.assertEqual(reports[0].sharp_set, [1, 2])
        for report in reports:
            for row in report.rows:
                self.assertGreaterEqual(row.measured_order, row.bound)

    def test_deterministic_with_one_worker(self):
        many = reports_to_frame(experiment_table(self.conn, 2, [1, 2], 128, cache_dir=self.temp_dir))
        one = reports_to_frame(experiment_table(self.conn, 2, [1, 2], 128, cache_dir=self.temp_dir, workers=1))
        self.assertTrue(many.equals(one))

    def test_orders_never_increase(self):
        reports = experiment_table(self.conn, 2, [1, 2], 128, cache_dir=self.temp_dir)
        for report in reports:
            self.assertEqual(monotone_violations(report), [])

    def test_window_does_not_change_orders(self):
        data, _ = compute_frobenius(self.conn, 2, 128, cache_dir=self.temp_dir)
        for z in (-2, 2):
            for m in (1, 2):
                self.assertEqual(measured_order_at(data, self.conn, z, m, window=24),
                                 measured_order_at(data, self.conn, z, m, window=48))

    def test_cache_bytes_across_thread_counts(self):
        contents = []
        for workers in (1, 4):
            cache_dir = tempfile.mkdtemp(dir=self.temp_dir)
            frame = reports_to_frame(experiment_table(self.conn, 2, [1, 2], 128, cache_dir=cache_dir,
                                                      workers=workers))
            names = sorted(name for name in os.listdir(cache_dir) if name.endswith(".frobcache"))
            self.assertEqual(len(names), 1)
            with open(os.path.join(cache_dir, names[0]), "rb") as f:
                contents.append((names[0], f.read(), frame.to_csv(index=False)))
        self.assertEqual(contents[0], contents[1])

    def test_reconstruct_measured_matrix(self):
        data, _ = compute_frobenius(self.conn, 2, 128, cache_dir=self.temp_dir)
        orders = {z: measured_order_at(data, self.conn, z, 1) for z in (-2, 2)}
        result = rational_reconstruction(data, orders, 1)
        self.assertEqual(set(result.poles()) - {-2, 2}, set())


class SharpnessMixin:
    """Runs the experiment table once per prime."""

    p = None
    M = None
    K = None

    @classmethod
    def setUpClass(cls):
        cls.conn = builtin_connection("elliptic-example", cls.p)
        cls.data, _ = compute_frobenius(cls.conn, cls.M, cls.K)
        # raises on any measured order below its bound
        cls.reports = {report.z: report for report in
                       experiment_table(cls.conn, cls.M, range(1, cls.M + 1), cls.K, data=cls.data)}

    def test_orders_never_increase(self):
        for report in self.reports.values():
            self.assertEqual(monotone_violations(report), [])

    def assert_pattern_at_two(self, constant):
        rows = [row for row in self.reports[2].rows if 2 <= row.m <= 8]
        hits = sum(1 for row in rows if row.measured_order == constant - self.p * (row.m - 1))
        self.assertGreaterEqual(2 * hits, len(rows))


@unittest.skipUnless(SLOW, "set FROBOUND_SLOW_TESTS=1 to run")
class TestSharpnessThree(SharpnessMixin, unittest.TestCase):
    p, M, K = 3, 17, 1024

    def test_sharp_set(self):
        self.assertEqual(self.reports[-2].sharp_set, [1, 2, 3, 6, 8, 17])

    def test_pattern_at_two(self):
        self.assert_pattern_at_two(1)


@unittest.skipUnless(SLOW, "set FROBOUND_SLOW_TESTS=1 to run")
class TestSharpnessFive(SharpnessMixin, unittest.TestCase):
    p, M, K = 5, 10, 512

    def test_sharp_set(self):
        self.assertEqual(self.reports[-2].sharp_set, [1, 2, 3, 4, 5, 10])

    def test_pattern_at_two(self):
        self.assert_pattern_at_two(1)


@unittest.skipUnless(SLOW, "set FROBOUND_SLOW_TESTS=1 to run")
class TestSharpnessSeven(SharpnessMixin, unittest.TestCase):
    p, M, K = 7, 7, 512

    def test_sharp_set(self):
        self.assertEqual(self.reports[-2].sharp_set, [1, 2, 3, 4, 5, 6, 7])

    def test_pattern_at_two(self):
        self.assert_pattern_at_two(2)


if __name__ == "__main__":
    unittest.main()
