#!/usr/bin/env python3
"""
frobound - pole-order bounds for Frobenius structures on the projective line.

Usage:
    frobound exponents --family elliptic-example --p 3
    frobound bounds --family elliptic-example --p 3 --z -2 --m-max 10
    frobound verify --family elliptic-example --p 3 --M 6 --K 256 --format csv

Or import and use programmatically:
    from frobound.main import Frobound
    output = Frobound().run(job)
"""

import argparse
import os
import sys

import pandas as pd

from frobound import config
from frobound.modules.bounds import bound_table, profile_for
from frobound.modules.connection import format_point, residue_data, validate_theorem_hypotheses
from frobound.modules.fiber import family_fiber, fiber_summary
from frobound.modules.formatter import ResultsFormatter
from frobound.modules.frobenius import compute_frobenius, delta_valuation_check, frobeq_residual, local_lift_phi_check
from frobound.modules.input_processor import COMMANDS, FORMATS, InputProcessor, JobConfig
from frobound.modules.reconstruct import experiment_table, reports_to_frame
from frobound.utils.exceptions import FroboundError, HypothesisError, PrecisionError
from frobound.utils.helpers import format_rational, format_valuation
from frobound.utils.logger import logger, set_level


class Frobound:
    """
    Main class for the frobound command line.
    """

    def __init__(self):
        self.input_processor = InputProcessor()

    def run(self, job: JobConfig) -> str:
        """
        Run one validated job and return its stdout text.

        Raises:
            FroboundError: Propagated to the caller, which maps it to an exit code
        """
        logger.info(f"running {job.command}")
        self.formatter = ResultsFormatter(job.output_format)
        conn = self.input_processor.load_connection(job)
        handler = getattr(self, "cmd_" + job.command.replace("-", "_"))
        return handler(job, conn)

    def _points(self, job, conn):
        return job.points or list(conn.singular_points)

    def cmd_exponents(self, job, conn):
        if not conn.singular_points:
            return self.formatter.format_mapping({"singular_points": "none"}, title="no singular points")
        records = []
        for z in conn.singular_points:
            report = validate_theorem_hypotheses(conn, z)
            data = residue_data(conn, z) if report.simple_pole and report.exponents_integral else None
            records.append({
                "z": format_point(z),
                "residue": _matrix_text(data.residue) if data else "",
                "exponents": " ".join(format_rational(e) for e in report.exponents),
                "passed": report.passed,
                "notes": "; ".join(report.notes),
            })
        return self.formatter.format_records(records, highlight="passed",
                                             title=f"exponents of {conn.name}, p = {conn.p}")

    def cmd_bounds(self, job, conn):
        frames = []
        for z in self._points(job, conn):
            report = bound_table(conn, z, job.m_range, vPhi=job.v_phi, vPhiInv=job.v_phi_inv,
                                 include_zero=job.include_zero)
            frames.append(pd.DataFrame.from_records(report.to_records()))
        frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
        return self.formatter.format_frame(frame, title=f"order bounds for {conn.name}, p = {conn.p}")

    def cmd_deform(self, job, conn):
        data, hit = compute_frobenius(conn, job.M, job.K, job.buffer, job.cache_dir)
        residual = frobeq_residual(conn, data)
        return self.formatter.format_mapping({
            "family": data.family,
            "p": data.p,
            "M": data.M,
            "Mw": data.Mw,
            "K": data.K,
            "acc": data.acc,
            "residual_valuation": residual,
            "cache": "cache hit" if hit else "written",
        }, title="deformation")

    def cmd_verify(self, job, conn):
        points = [z for z in self._points(job, conn) if z in conn.finite_singular_points]
        reports = experiment_table(conn, job.M, job.m_range, job.K, job.window, job.buffer, points, job.cache_dir)
        frame = reports_to_frame(reports)
        return self.formatter.format_frame(frame, highlight="sharp",
                                           title=f"measured orders for {conn.name}, p = {conn.p}")

    def cmd_fiber(self, job, conn):
        summary = fiber_summary(family_fiber(0, job.p, job.M))
        summary["phi0"] = _matrix_text(summary["phi0"])
        return self.formatter.format_mapping(summary, title=f"fiber at t = 0, p = {job.p}")

    def cmd_delta_check(self, job, conn):
        z = self._points(job, conn)[0] if self._points(job, conn) else 0
        profile = profile_for(conn, z, job.v_phi, job.v_phi_inv, job.include_zero)
        report = delta_valuation_check(conn, profile, job.i_max, job.cache_dir)
        records = [{**row, "valuation": format_valuation(row["valuation"]), "violation": not row["ok"]}
                   for row in report.rows]
        title = f"{len(report.violations)} violations up to i = {job.i_max}"
        if report.flagged:
            title += " (v_p(N) < 0: reported, not asserted)"
        return self.formatter.format_records(records, alert=None if report.flagged else "violation", title=title)

    def cmd_lift_change(self, job, conn):
        data, _ = compute_frobenius(conn, job.M, job.K, job.buffer, job.cache_dir)
        records = []
        for z in self._points(job, conn):
            if z not in conn.finite_singular_points:
                continue
            for m in job.m_range:
                records.append(local_lift_phi_check(data, conn, z, m, job.window).to_dict())
        return self.formatter.format_records(records, highlight="passed", title="centered-lift check")


def _matrix_text(matrix):
    return "[" + ", ".join("[" + ", ".join(format_rational(x) for x in row) + "]" for row in matrix) + "]"


def _hypothesis_record(report):
    return {
        "z": format_point(report.z),
        "simple_pole": report.simple_pole,
        "exponents_integral": report.exponents_integral,
        "distinct_discs": report.distinct_discs,
        "point_integral": report.point_integral,
        "failed": not report.passed,
        "notes": "; ".join(report.notes),
    }


def parse_arguments(argv=None):
    """
    Parse command line arguments.

    Returns:
        argparse.Namespace: Parsed arguments
    """
    parser = argparse.ArgumentParser(prog="frobound", description="Pole-order bounds for Frobenius structures")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--family", default=config.BUILTIN_FAMILIES[0],
                        help="Built-in family id or path to a connection file")
    parser.add_argument("--p", type=int, required=True, help="Odd prime")
    parser.add_argument("--M", type=int, help="Target precision exponent")
    parser.add_argument("--K", type=int, help="t-adic truncation order")
    parser.add_argument("--m", type=int, help="Single precision m (sets --m-min and --m-max)")
    parser.add_argument("--m-min", type=int)
    parser.add_argument("--m-max", type=int)
    parser.add_argument("--z", action="append", help="Singular point (repeatable; 'inf' for infinity)")
    parser.add_argument("--window", type=int, help="Vanishing window W for order measurement")
    parser.add_argument("--buffer", type=int, help="Extra p-adic digits B")
    parser.add_argument("--imax", type=int, help="Largest i for delta-check")
    parser.add_argument("--vphi", type=int, help="v_p(Phi) used by the bounds")
    parser.add_argument("--vphi-inv", type=int, help="v_p(Phi^-1) used by the bounds")
    parser.add_argument("--exclude-zero", action="store_true", help="Start the index set of c and g at i = 1")
    parser.add_argument("--format", choices=FORMATS, default="table")
    parser.add_argument("--cache-dir", default=config.CACHE_DIR)
    parser.add_argument("--verbose", "-v", action="count", default=0)
    return parser.parse_args(argv)


def build_job(args) -> JobConfig:
    m_min, m_max = (args.m, args.m) if args.m is not None else (args.m_min, args.m_max)
    M = args.M
    if M is None and m_max is not None:
        M = max(config.DEFAULT_M, m_max)
    return InputProcessor().process_input(
        args.command, args.family, args.p,
        M=M, K=args.K, m_min=m_min, m_max=m_max, window=args.window, buffer=args.buffer,
        i_max=args.imax, v_phi=args.vphi, v_phi_inv=args.vphi_inv,
        include_zero=not args.exclude_zero, output_format=args.format, cache_dir=args.cache_dir,
        points=args.z or [],
    )


def main(argv=None):
    """Main entry point; returns the process exit code."""
    args = parse_arguments(argv)
    if args.verbose:
        set_level("DEBUG" if args.verbose > 1 else "INFO")
    formatter = ResultsFormatter(args.format)
    try:
        job = build_job(args)
        if job.cache_dir:
            os.makedirs(job.cache_dir, exist_ok=True)
        sys.stdout.write(Frobound().run(job))
        return 0
    except PrecisionError as e:
        logger.error(f"Precision error: {str(e)}")
        hint = f" (increase the working precision by {e.required_increase})" if e.required_increase else ""
        sys.stderr.write(formatter.format_error(f"{str(e)}{hint}"))
        return e.exit_code
    except HypothesisError as e:
        logger.error(f"HypothesisError: {str(e)}")
        sys.stderr.write(formatter.format_error(e))
        if e.reports:
            sys.stderr.write(formatter.format_records([_hypothesis_record(r) for r in e.reports],
                                                      alert="failed", title="hypothesis report"))
        return e.exit_code
    except FroboundError as e:
        logger.error(f"{type(e).__name__}: {str(e)}")
        sys.stderr.write(formatter.format_error(e))
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected error: {str(e)}")
        sys.stderr.write(formatter.format_error(f"internal error: {str(e)}"))
        return 1


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
