#!/usr/bin/env python3
"""
Example usage of frobound.

This script shows the library calls behind the command line on the built-in elliptic family.
"""

from frobound.modules.bounds import bound_table
from frobound.modules.connection import builtin_connection, exponents
from frobound.modules.fiber import family_fiber, fiber_summary
from frobound.modules.frobenius import compute_frobenius, frobeq_residual
from frobound.modules.reconstruct import experiment_table, reports_to_frame


def example_run(p=3, M=4, K=256):
    """
    Exponents, bounds, the fiber matrix and a small experiment table for one prime.
    """
    print("frobound example")
    print("================\n")

    conn = builtin_connection("elliptic-example", p)
    for z in conn.singular_points:
        print(f"exponents at {z}: {[str(e) for e in exponents(conn, z)]}")
    print()

    report = bound_table(conn, -2, range(1, M + 1))
    print(f"bounds at z = -2: {[row.bound for row in report.rows]}\n")

    summary = fiber_summary(family_fiber(0, p, M))
    print(f"fiber at t = 0: a_p = {summary['a_p']} (point count gives {summary['a_p_from_count']})\n")

    data, _ = compute_frobenius(conn, M, K)
    print(f"Frobenius equation residual: valuation {frobeq_residual(conn, data)} (accuracy {data.acc})\n")

    reports = experiment_table(conn, M, range(1, M + 1), K, data=data)
    print(reports_to_frame(reports).to_string(index=False))


if __name__ == "__main__":
    example_run()
