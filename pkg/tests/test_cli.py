#!/usr/bin/env python3
"""
Tests for job validation, connection files, output formats and exit codes.
"""

import io
import json
import os
import shutil
import sys
import tempfile
import unittest
from fractions import Fraction
from unittest.mock import patch

import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from frobound.main import Frobound, main
from frobound.modules.connection import INFINITY_POINT
from frobound.modules.formatter import ResultsFormatter
from frobound.modules.input_processor import InputProcessor, read_connection_file
from frobound.utils.exceptions import (
    HypothesisError,
    InputError,
    PrecisionError,
    ReconstructionError,
    TheoremViolationError,
    UnsupportedInputError,
)

CONNECTION_FILE = """# the built-in family
2
3
(-t/2 - 1/2)/(t^2 - 4); (t/2 + 3/2)/(t^2 - 4)
(-1/2)/(t^2 - 4); (t/2 + 1/2)/(t^2 - 4)
"""


class TestInputProcessor(unittest.TestCase):
    """Test cases for job validation."""

    def setUp(self):
        self.processor = InputProcessor()

    def test_defaults(self):
        job = self.processor.process_input("bounds", "elliptic-example", 3)
        self.assertEqual(job.M, 6)
        self.assertEqual(job.m_range, [1, 2, 3, 4, 5, 6])
        self.assertEqual(job.output_format, "table")

    def test_points(self):
        job = self.processor.process_input("bounds", "elliptic-example", 5, points=["-2", "inf"])
        self.assertEqual(job.points, [Fraction(-2), INFINITY_POINT])

    def test_bad_primes(self):
        for p in (2, 4, 9):
            with self.assertRaises(UnsupportedInputError):
                self.processor.process_input("bounds", "elliptic-example", p)
        with self.assertRaises(InputError):
            self.processor.process_input("bounds", "elliptic-example", "three")

    def test_two_carries_hypothesis_reports(self):
        with self.assertRaises(HypothesisError) as ctx:
            self.processor.process_input("bounds", "elliptic-example", 2)
        self.assertEqual(len(ctx.exception.reports), 3)
        self.assertFalse(any(report.passed for report in ctx.exception.reports))
        self.assertIn("-2, 2, inf", str(ctx.exception))

    def test_bad_ranges(self):
        with self.assertRaises(InputError):
            self.processor.process_input("verify", "elliptic-example", 3, K=10)
        with self.assertRaises(InputError):
            self.processor.process_input("verify", "elliptic-example", 3, m_min=3, m_max=2)
        with self.assertRaises(InputError):
            self.processor.process_input("verify", "elliptic-example", 3, M=4, m_max=5)
        with self.assertRaises(InputError):
            self.processor.process_input("verify", "elliptic-example", 3, window=0)

    def test_unknown_names(self):
        with self.assertRaises(InputError):
            self.processor.process_input("plot", "elliptic-example", 3)
        with self.assertRaises(InputError):
            self.processor.process_input("bounds", "no-such-family", 3)
        with self.assertRaises(InputError):
            self.processor.process_input("bounds", "elliptic-example", 3, output_format="xml")


class TestConnectionFile(unittest.TestCase):
    """Test cases for reading connection files."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def write(self, name, text):
        path = os.path.join(self.temp_dir, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_read(self):
        conn = read_connection_file(self.write("family.txt", CONNECTION_FILE))
        self.assertEqual(conn.p, 3)
        self.assertEqual(conn.name, "family")
        self.assertEqual(conn.singular_points, (Fraction(-2), Fraction(2), INFINITY_POINT))

    def test_prime_override(self):
        conn = read_connection_file(self.write("family.txt", CONNECTION_FILE), p=5)
        self.assertEqual(conn.p, 5)

    def test_whitespace_rows(self):
        conn = read_connection_file(self.write("diag.txt", "2\n3\n1/(t-1) 0\n0 0\n"))
        self.assertEqual(conn.finite_singular_points, [Fraction(1)])

    def test_malformed(self):
        with self.assertRaises(InputError):
            read_connection_file(self.write("short.txt", "2\n3\n1/t; 0\n"))
        with self.assertRaises(InputError):
            read_connection_file(self.write("header.txt", "two\n3\n"))
        with self.assertRaises(InputError):
            read_connection_file(os.path.join(self.temp_dir, "missing.txt"))

    def test_file_job(self):
        path = self.write("family.txt", CONNECTION_FILE)
        processor = InputProcessor()
        job = processor.process_input("exponents", path, 3)
        self.assertEqual(processor.load_connection(job).name, "family")


class TestFormatter(unittest.TestCase):
    """Test cases for the output formats."""

    def setUp(self):
        self.frame = pd.DataFrame([{"m": 1, "sharp": True}, {"m": 2, "sharp": False}])

    def test_csv(self):
        self.assertEqual(ResultsFormatter("csv").format_frame(self.frame), "m,sharp\n1,True\n2,False\n")

    def test_json(self):
        output = ResultsFormatter("json").format_frame(self.frame)
        self.assertEqual(json.loads(output), [{"m": 1, "sharp": True}, {"m": 2, "sharp": False}])

    def test_table_without_color(self):
        output = ResultsFormatter("table", color=False).format_frame(self.frame, highlight="sharp", title="t")
        self.assertTrue(output.startswith("t\n"))
        self.assertNotIn("\x1b[", output)

    def test_table_with_color(self):
        output = ResultsFormatter("table", color=True).format_frame(self.frame, highlight="sharp")
        self.assertIn("\x1b[32m", output)

    def test_mapping(self):
        output = ResultsFormatter("json").format_mapping({"b": 1, "a": "x"})
        self.assertEqual(output, '{"a": "x", "b": 1}\n')


class TestMain(unittest.TestCase):
    """Test cases for the command line entry point."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def run_main(self, argv):
        with patch("sys.stdout", new_callable=io.StringIO) as out, \
                patch("sys.stderr", new_callable=io.StringIO) as err:
            code = main(argv + ["--cache-dir", self.temp_dir])
        return code, out.getvalue(), err.getvalue()

    def test_exponents_json(self):
        code, out, _ = self.run_main(["exponents", "--p", "3", "--format", "json"])
        self.assertEqual(code, 0)
        records = json.loads(out)
        self.assertEqual([r["z"] for r in records], ["-2", "2", "inf"])
        self.assertEqual(records[1]["exponents"], "-1/4 1/4")
        self.assertTrue(all(r["passed"] for r in records))

    def test_bounds_csv(self):
        code, out, _ = self.run_main(["bounds", "--p", "3", "--z", "-2", "--m-max", "3", "--format", "csv"])
        self.assertEqual(code, 0)
        lines = out.strip().split("\n")
        self.assertEqual(len(lines), 4)
        self.assertTrue(lines[0].startswith("p,z,m,"))
        # m = 3: g = 3, bound -9
        self.assertIn(",-9,", lines[3])

    def test_fiber(self):
        code, out, _ = self.run_main(["fiber", "--p", "5", "--M", "4", "--format", "json"])
        self.assertEqual(code, 0)
        summary = json.loads(out)
        self.assertEqual(summary["a_p"], -2)
        self.assertEqual(summary["a_p_from_count"], -2)

    def test_delta_check(self):
        code, out, _ = self.run_main(["delta-check", "--p", "3", "--imax", "10", "--format", "json"])
        self.assertEqual(code, 0)
        records = json.loads(out)
        self.assertEqual(len(records), 11)
        self.assertFalse(any(r["violation"] for r in records))

    def test_deform_then_verify(self):
        code, out, _ = self.run_main(["deform", "--p", "3", "--M", "2", "--K", "128", "--format", "json"])
        self.assertEqual(code, 0)
        summary = json.loads(out)
        self.assertEqual(summary["cache"], "written")
        self.assertGreaterEqual(summary["residual_valuation"], summary["acc"])

        code, out, _ = self.run_main(["verify", "--p", "3", "--M", "2", "--K", "128", "--m-max", "2",
                                      "--z", "-2", "--format", "json"])
        self.assertEqual(code, 0)
        records = json.loads(out)
        self.assertEqual([r["m"] for r in records], [1, 2])
        self.assertTrue(all(r["sharp"] for r in records))

    def test_hypothesis_failure_report(self):
        code, _, err = self.run_main(["bounds", "--p", "2", "--format", "json"])
        self.assertEqual(code, 2)
        self.assertIn("odd prime", err)
        records = json.loads(next(line for line in err.splitlines() if line.startswith("[")))
        by_point = {r["z"]: r for r in records}
        self.assertEqual(sorted(by_point), ["-2", "2", "inf"])
        self.assertTrue(all(r["failed"] for r in records))
        # exponents +-1/4 are not 2-integral and 2 - (-2) = 4 has positive valuation
        self.assertFalse(by_point["2"]["exponents_integral"])
        self.assertFalse(by_point["2"]["distinct_discs"])
        self.assertTrue(by_point["-2"]["exponents_integral"])
        self.assertFalse(by_point["inf"]["exponents_integral"])
        self.assertTrue(by_point["inf"]["distinct_discs"])
        self.assertIn("not 2-integral", by_point["2"]["notes"])

    def test_unsupported_prime(self):
        code, _, err = self.run_main(["exponents", "--p", "4"])
        self.assertEqual(code, 2)
        self.assertIn("odd prime", err)

    def test_missing_prime(self):
        with patch("sys.stderr", new_callable=io.StringIO):
            with self.assertRaises(SystemExit):
                main(["exponents"])

    def test_exit_codes(self):
        cases = [
            (PrecisionError("accuracy exhausted", required_increase=2), 3),
            (ReconstructionError("window test inconclusive"), 3),
            (TheoremViolationError("order below bound"), 4),
            (RuntimeError("boom"), 1),
        ]
        for error, expected in cases:
            with patch.object(Frobound, "run", side_effect=error):
                code, _, err = self.run_main(["exponents", "--p", "3"])
            self.assertEqual(code, expected)
            self.assertIn("Error", err)

    def test_precision_hint(self):
        with patch.object(Frobound, "run", side_effect=PrecisionError("accuracy exhausted", required_increase=2)):
            _, _, err = self.run_main(["exponents", "--p", "3"])
        self.assertIn("increase the working precision by 2", err)


if __name__ == "__main__":
    unittest.main()
