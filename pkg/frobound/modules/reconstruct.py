"""
Reconstruction module for frobound.

Measures the pole order of the Frobenius matrix modulo p^m at the singular points,
recovers it as a matrix of rational functions, and assembles the experiment tables that
compare measured orders with the proven bounds.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import pandas as pd
from tqdm import tqdm

from .. import config
from ..utils.exceptions import PrecisionError, ReconstructionError, TheoremViolationError
from ..utils.logger import logger
from .arith import RatFunc, RatFuncMatrix, SeriesMatrix, symmetric_lift
from .bounds import BoundProfile, g_scan, order_bound, profile_for
from .connection import INFINITY_POINT, Connection, format_point
from .frobenius import FrobeniusData, compute_frobenius

TABLE_COLUMNS = ["p", "z", "m", "measured_order", "bound", "variant", "sharp"]


@dataclass
class PoleOrderRow:
    m: int
    measured_order: int
    bound: int
    variant: str
    diagonal_condition: bool = None

    @property
    def sharp(self):
        return self.measured_order == self.bound


@dataclass
class PoleOrderReport:
    """Measured orders against the bound at one point, one row per m."""

    p: int
    z: object
    window: int
    degree_cap: int
    rows: list = field(default_factory=list)

    @property
    def sharp_set(self):
        return [row.m for row in self.rows if row.sharp]

    def to_records(self):
        return [{
            "p": self.p,
            "z": format_point(self.z),
            "m": row.m,
            "measured_order": row.measured_order,
            "bound": row.bound,
            "variant": row.variant,
            "sharp": row.sharp,
        } for row in self.rows]


def _is_polynomial(H: SeriesMatrix, window, D_max):
    """Largest entry degree when every entry of H is a polynomial of degree <= D_max, else None."""
    K = H.K
    top = -1
    for row in H.rows:
        for e in row:
            D = e.degree()
            if D >= K - window or D > D_max:
                return None
            top = max(top, D)
    return top


def clear_other_poles(Phi: SeriesMatrix, others: dict) -> SeriesMatrix:
    """Multiply by (t - z')^b for every (z', b) in ``others``."""
    G = Phi
    for z, b in sorted(others.items(), key=lambda item: str(item[0])):
        for _ in range(b):
            G = G.map(lambda e, z=z: e.mul_linear(z))
    return G


def measured_order_series(Phi: SeriesMatrix, z, m: int, others: dict, window: int = None, D_max: int = None,
                          cap: int = None) -> int:
    """
    Order at z of the rational matrix that Phi mod p^m expands.

    ``others`` maps every other finite singular point to the power of (t - z') that clears
    its pole. An order o passes when every entry of (t - z')^b Phi / (t - z)^o mod p^m is a
    polynomial of degree at most D_max ending at least ``window`` coefficients before K.
    The largest passing o is returned; the zero matrix returns ``cap``.

    Raises:
        ReconstructionError: If K is too small for the window or no order passes
    """
    window = config.DEFAULT_WINDOW if window is None else window
    cap = config.DEFAULT_ORDER_CAP if cap is None else cap
    if D_max is None:
        D_max = 2 * sum(others.values()) + config.DEFAULT_DEGREE_SLACK
    G = clear_other_poles(Phi.reduce(m), others)
    K = G.K
    if K < D_max + window:
        raise ReconstructionError(f"K = {K} is below D_max + W = {D_max + window}; increase K")
    if G.valuation() >= m:
        return cap

    H = G
    for _ in range(cap):
        H = H.map(lambda e: e.div_linear(z))
    o = cap
    while o >= -D_max:
        if _is_polynomial(H, window, D_max) is not None:
            logger.debug(f"order at {format_point(z)} modulo p^{m}: {o}")
            return o
        H = H.map(lambda e: e.mul_linear(z))
        o -= 1
    raise ReconstructionError(f"no order in [{-D_max}, {cap}] passes the window test at {format_point(z)}; "
                              f"increase K")


def pole_budget(conn: Connection, z, m: int, profiles: dict = None) -> dict:
    """Powers of (t - z') clearing the other finite singular points, from their order bounds."""
    profiles = profiles or {}
    budget = {}
    for other in conn.finite_singular_points:
        if other == z:
            continue
        profile = profiles.get(other) or profile_for(conn, other)
        bound = order_bound(m, profile).bound
        budget[other] = abs(min(0, bound)) + config.POLE_SLACK
    return budget


def lift_change_pole_budget(conn: Connection, z, m: int, profile: BoundProfile) -> dict:
    """
    Pole budget after moving to the lift centered at z.

    sigma(Delta^(i)) has poles at p-th roots near z'; modulo p^m they look like a pole of
    order p (i + m) at z'.
    """
    g, empty = g_scan(m, profile, c=0)
    terms = 1 if empty else g + 1
    budget = pole_budget(conn, z, m)
    return {other: b + conn.p * (terms + m) for other, b in budget.items()}


def degree_cap(conn: Connection, z, m: int, others: dict) -> int:
    """D_max = 2 (sum of pole guesses) + slack, including the bound at z and at infinity."""
    guesses = sum(others.values())
    for point in (z, INFINITY_POINT):
        if point in conn.singular_points:
            guesses += abs(min(0, order_bound(m, profile_for(conn, point)).bound))
    return 2 * guesses + config.DEFAULT_DEGREE_SLACK


def measured_order_at(data, conn: Connection, z, m: int, window: int = None, D_max: int = None) -> int:
    """
    Measured order at z of the Frobenius matrix modulo p^m.

    Raises:
        PrecisionError: If m exceeds the accuracy of the data
        ReconstructionError: If the window test is inconclusive
    """
    Phi = data.Phi if isinstance(data, FrobeniusData) else data
    if m > Phi.acc:
        raise PrecisionError(f"m = {m} exceeds the accuracy {Phi.acc} of the Frobenius data",
                             required_increase=m - Phi.acc)
    others = pole_budget(conn, z, m)
    D_max = degree_cap(conn, z, m, others) if D_max is None else D_max
    return measured_order_series(Phi, z, m, others, window, D_max)


def rational_reconstruction(data, orders: dict, m: int, window: int = None) -> RatFuncMatrix:
    """
    Rational-function matrix P / prod (t - z)^(a_z) congruent to Phi mod (p^m, t^(K - W)),
    with a_z = max(0, -order at z) and P of symmetric integer coefficients.

    Raises:
        ReconstructionError: If Phi times the denominator is not a polynomial, or the
            result does not re-expand to Phi
    """
    window = config.DEFAULT_WINDOW if window is None else window
    Phi = (data.Phi if isinstance(data, FrobeniusData) else data).reduce(m)
    p, K = Phi.p, Phi.K
    powers = {z: max(0, -o) for z, o in orders.items() if z != INFINITY_POINT}
    numerators = clear_other_poles(Phi, powers)
    top = _is_polynomial(numerators, window, K)
    if top is None:
        raise ReconstructionError("Phi times the pole denominator is not a polynomial; increase K or recheck orders")

    modulus = p ** m
    denominator = RatFunc.const(1)
    for z, a in powers.items():
        denominator = denominator * RatFunc.linear(z) ** a
    entries = tuple(tuple(RatFunc.from_coeffs([symmetric_lift(c, modulus) for c in e.coeffs[:top + 1]] or [0])
                          / denominator for e in row) for row in numerators.rows)
    result = RatFuncMatrix(entries)

    expanded = result.to_series_matrix(p, m, K)
    if (expanded - Phi).valuation(upto=K - window) < m:
        raise ReconstructionError("re-expansion of the reconstructed matrix does not match Phi")
    logger.info(f"reconstructed Phi modulo {p}^{m} with denominator {denominator}")
    return result


def _measure_row(data, conn, z, m, profile, window):
    order = measured_order_at(data, conn, z, m, window)
    row = order_bound(m, profile)
    return PoleOrderRow(m, order, row.bound, row.variant, row.diagonal_condition)


def experiment_table(conn: Connection, M: int, m_values, K: int = None, window: int = None, buffer: int = None,
                     points=None, cache_dir=None, data: FrobeniusData = None, workers: int = None):
    """
    Measured orders against the bounds for every point and m.

    Returns:
        list: PoleOrderReport per point, in the order of ``points``

    Raises:
        TheoremViolationError: If a measured order falls below its bound
    """
    K = config.DEFAULT_K if K is None else K
    window = config.DEFAULT_WINDOW if window is None else window
    workers = config.MAX_WORKERS if workers is None else workers
    points = list(points) if points is not None else conn.finite_singular_points
    if data is None:
        data, hit = compute_frobenius(conn, M, K, buffer, cache_dir)
        logger.info("Frobenius data from cache" if hit else "Frobenius data computed")
    m_values = sorted(set(m_values))

    profiles = {z: profile_for(conn, z) for z in points}
    jobs = [(z, m) for z in points for m in m_values]
    results = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_job = {
            executor.submit(_measure_row, data, conn, z, m, profiles[z], window): (z, m)
            for z, m in jobs
        }
        for future in tqdm(as_completed(future_to_job), total=len(jobs), desc="orders", disable=None, leave=False):
            results[future_to_job[future]] = future.result()

    reports = []
    top_m = max(m_values)
    for z in points:
        report = PoleOrderReport(conn.p, z, window, degree_cap(conn, z, top_m, pole_budget(conn, z, top_m)))
        report.rows = [results[(z, m)] for m in m_values]
        reports.append(report)
        for row in report.rows:
            if row.measured_order < row.bound:
                raise TheoremViolationError(f"measured order {row.measured_order} below the bound {row.bound} "
                                            f"at z = {format_point(z)}, p = {conn.p}, m = {row.m}")
        logger.info(f"z = {format_point(z)}: sharp for m in {report.sharp_set}")
    return reports


def reports_to_frame(reports) -> pd.DataFrame:
    """One DataFrame with the table columns, rows ordered by point then m."""
    records = [record for report in reports for record in report.to_records()]
    return pd.DataFrame.from_records(records, columns=TABLE_COLUMNS)


def monotone_violations(report: PoleOrderReport):
    """Consecutive m where the measured order increased."""
    return [(a.m, b.m) for a, b in zip(report.rows, report.rows[1:]) if b.measured_order > a.measured_order]
