"""
Frobenius module for frobound.

Builds the Frobenius matrix Phi(t) of a connection by deformation from one fiber,
checks it against the Frobenius differential equation, changes the Frobenius lift, and
keeps computed matrices in a deterministic on-disk cache.
"""

import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .. import config
from ..utils.exceptions import (
    ArithmeticDomainError,
    CacheError,
    PrecisionError,
    TheoremViolationError,
    UnsupportedInputError,
)
from ..utils.helpers import atomic_write_text, ceil_log, generate_cache_key
from ..utils.logger import logger
from .arith import (
    PAdicApprox,
    PAdicMatrix,
    RatFunc,
    RatFuncMatrix,
    SeriesMatrix,
    TruncSeries,
    int_val,
    poly_sub,
    rational_val_p,
)
from .bounds import BoundProfile, c_value, f_of_i, g_scan, profile_for
from .connection import Connection, DeltaTower, format_point
from .fiber import family_fiber, kedlaya_fiber_matrix

CACHE_MAGIC = "FROBCACHE1"


# ---------------------------------------------------------------------------
# Frobenius lifts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StandardLift:
    """sigma(t) = t^p."""

    def polynomial(self, p):
        return [Fraction(0)] * p + [Fraction(1)]

    def apply(self, f: RatFunc, p):
        return f.compose(self.polynomial(p))

    def series_apply(self, series: TruncSeries):
        return series.frobenius_substitute()

    @property
    def descriptor(self):
        return "standard"


@dataclass(frozen=True)
class CenteredLift:
    """sigma(t) = (t - z)^p + z, the lift fixing z."""

    z: Fraction

    def polynomial(self, p):
        base = [Fraction(1)]
        for _ in range(p):
            base = [a - Fraction(self.z) * b for a, b in zip([Fraction(0)] + base, base + [Fraction(0)])]
        base[0] += Fraction(self.z)
        return base

    def apply(self, f: RatFunc, p):
        return f.compose(self.polynomial(p))

    @property
    def descriptor(self):
        return f"centered:{self.z}"


def parse_lift(descriptor):
    if descriptor == "standard":
        return StandardLift()
    if descriptor.startswith("centered:"):
        return CenteredLift(Fraction(descriptor.split(":", 1)[1]))
    raise CacheError(f"unknown lift descriptor '{descriptor}'")


# ---------------------------------------------------------------------------
# Frobenius data and precision
# ---------------------------------------------------------------------------

@dataclass
class FrobeniusData:
    """Phi(t) mod (p^Mw, t^K), correct modulo p^acc."""

    family: str
    p: int
    M: int
    Mw: int
    K: int
    scale: int
    Phi: SeriesMatrix
    Phi0: PAdicMatrix
    lift: object = field(default_factory=StandardLift)

    @property
    def acc(self):
        return self.Phi.acc


def working_precision(p, M, K, buffer=None):
    """
    Working modulus exponent and solution scale for a deformation to accuracy M + B.

    Returns:
        tuple: (Mw, E) with E = LOG_WEIGHT * ceil(log_p K) + 1 and Mw = M + B + 2E + 3 ceil(log_p K)
    """
    buffer = config.DEFAULT_BUFFER if buffer is None else buffer
    depth = ceil_log(K, p)
    E = config.LOG_WEIGHT * depth + 1
    return M + buffer + 2 * E + 3 * depth, E


def _integral_recurrence_data(conn: Connection, p):
    """Integer d and P with N = P / d, and d(0) a p-adic unit."""
    den, num = conn.N.common_denominator()
    scale = 1
    for c in den + [c for row in num for e in row for c in e]:
        scale = lcm(scale, Fraction(c).denominator)
    d = [int(Fraction(c) * scale) for c in den]
    P = [[[int(Fraction(c) * scale) for c in e] for e in row] for row in num]
    if not d or d[0] == 0:
        raise ArithmeticDomainError("the connection has a pole at t = 0")
    if d[0] % p == 0:
        raise ArithmeticDomainError(f"a singular point reduces to 0 modulo {p}")
    return d, P


def _solve(conn: Connection, K, Mw, scale, inverse):
    """
    Coefficients of p^scale C (inverse=False) or p^scale C^-1 (inverse=True), where C' = -N C.

    Uses d C' = -P C, i.e. (k+1) d_0 C_{k+1} = -sum P_j C_{k-j} - sum_{j>=1} d_j (k+1-j) C_{k+1-j},
    and d Y' = Y P for the inverse.
    """
    p = conn.p
    r = conn.r
    modulus = p ** Mw
    d, P = _integral_recurrence_data(conn, p)
    coeffs = [[[p ** scale if i == j else 0 for j in range(r)] for i in range(r)]]
    for k in range(K - 1):
        X = [[0] * r for _ in range(r)]
        for j, Pj in enumerate(_coefficient_matrices(P, r)):
            if k - j < 0:
                break
            C = coeffs[k - j]
            for a in range(r):
                for b in range(r):
                    if inverse:
                        X[a][b] += sum(C[a][c] * Pj[c][b] for c in range(r))
                    else:
                        X[a][b] -= sum(Pj[a][c] * C[c][b] for c in range(r))
        for j in range(1, len(d)):
            if k + 1 - j < 0:
                break
            C = coeffs[k + 1 - j]
            factor = d[j] * (k + 1 - j)
            for a in range(r):
                for b in range(r):
                    X[a][b] -= factor * C[a][b]
        coeffs.append(_divide(X, (k + 1) * d[0], p, modulus))
    return coeffs


def _coefficient_matrices(P, r):
    degree = max(len(e) for row in P for e in row)
    return [[[P[a][b][j] if j < len(P[a][b]) else 0 for b in range(r)] for a in range(r)] for j in range(degree)]


def _divide(X, divisor, p, modulus):
    v = int_val(divisor, p)
    pv = p ** v
    unit_inverse = pow(divisor // pv, -1, modulus)
    out = []
    for row in X:
        new_row = []
        for x in row:
            x %= modulus
            if x % pv:
                raise PrecisionError(f"solution coefficient not divisible by {p}^{v}; raise the working precision",
                                     required_increase=v)
            new_row.append(x // pv * unit_inverse % modulus)
        out.append(new_row)
    return out


def _to_series_matrix(coeffs, p, Mw, acc):
    r = len(coeffs[0])
    return SeriesMatrix(tuple(tuple(TruncSeries(p, Mw, tuple(c[a][b] for c in coeffs), acc) for b in range(r))
                              for a in range(r)))


def fundamental_solution(conn: Connection, K: int, Mw: int, scale: int = 0) -> SeriesMatrix:
    """
    p^scale C with C(0) = I and dC/dt = -N C, modulo (p^Mw, t^K).

    Raises:
        ArithmeticDomainError: If N has a pole at 0
        PrecisionError: If a division by k + 1 runs out of digits
    """
    coeffs = _solve(conn, K, Mw, scale, inverse=False)
    return _to_series_matrix(coeffs, conn.p, Mw, Mw - 2 * ceil_log(K, conn.p))


def inverse_fundamental_solution(conn: Connection, K: int, Mw: int, scale: int = 0) -> SeriesMatrix:
    """p^scale C^-1, solving dY/dt = Y N with Y(0) = I."""
    coeffs = _solve(conn, K, Mw, scale, inverse=True)
    return _to_series_matrix(coeffs, conn.p, Mw, Mw - 2 * ceil_log(K, conn.p))


def deformation_phi(conn: Connection, Phi0: PAdicMatrix, K: int, Mw: int, scale: int, M: int,
                    family: str = None) -> FrobeniusData:
    """
    Phi(t) = C(t) Phi0 C(t^p)^-1 modulo (p^Mw, t^K), from the scaled solutions p^E C and p^E C^-1.

    Raises:
        PrecisionError: If the scaled product is not divisible by p^(2E)
    """
    p = conn.p
    if Phi0.prec != Mw:
        raise PrecisionError(f"Phi0 must be given to working precision {Mw}", required_increase=Mw - Phi0.prec)
    logger.info(f"deforming Phi: p = {p}, K = {K}, Mw = {Mw}, scale = {scale}")
    D = fundamental_solution(conn, K, Mw, scale)
    Y = inverse_fundamental_solution(conn, K, Mw, scale)
    product = D * Phi0.to_series_matrix(K) * Y.frobenius_substitute()
    try:
        Phi = product.divide_by_p(2 * scale)
    except ArithmeticDomainError as e:
        raise PrecisionError(f"deformation lost too many digits: {str(e)}", required_increase=scale)
    acc = Mw - 2 * scale - 3 * ceil_log(K, p)
    Phi = Phi.map(lambda e: TruncSeries(e.p, e.prec, e.coeffs, acc))
    return FrobeniusData(family or conn.name, p, M, Mw, K, scale, Phi, Phi0)


def frobeq_residual(conn: Connection, data: FrobeniusData):
    """
    Minimum valuation of N Phi + dPhi/dt - p t^(p-1) Phi sigma(N) over degrees < K - p.
    """
    p, K = data.p, data.K
    N = conn.N.to_series_matrix(p, data.Mw, K)
    Phi = data.Phi
    residual = N * Phi + Phi.derivative() - (Phi * N.frobenius_substitute()).shift(p - 1) * p
    value = residual.valuation(upto=K - p)
    logger.info(f"Frobenius equation residual: valuation {value}, accuracy {data.acc}")
    return value


# ---------------------------------------------------------------------------
# Change of Frobenius lift
# ---------------------------------------------------------------------------

def lift_truncation_index(m, profile: BoundProfile):
    """Least I with i + v_p(Phi) + f(i) >= m for every i >= I."""
    g, empty = g_scan(m, profile, c=0)
    return 1 if empty else g + 1


def _polynomial_series(coeffs, p, prec, K):
    return TruncSeries.from_rationals(list(coeffs), p, prec, K)


def _lifted_delta_series(tower: DeltaTower, i, lift, p, prec, K):
    """Series at 0 of sigma(p^i Delta^(i)) modulo p^prec."""
    scaled = tower.matrix(i) * RatFunc.const(Fraction(p) ** i)
    if isinstance(lift, StandardLift):
        return scaled.to_series_matrix(p, prec, K).frobenius_substitute()
    return scaled.compose(lift.polynomial(p)).to_series_matrix(p, prec, K)


def change_frobenius_lift(Phi1, conn: Connection, lift1, lift2, m: int, profile: BoundProfile = None,
                          tower: DeltaTower = None, K: int = None) -> SeriesMatrix:
    """
    Frobenius matrix for lift2 from the one for lift1, modulo p^m:
    Phi2 = sum_i (sigma2(t) - sigma1(t))^i Phi1 sigma1(Delta^(i)), truncated at the index where
    every remaining term is divisible by p^m.

    ``Phi1`` is a SeriesMatrix or a rational-function representative (expanded to K terms).

    Raises:
        ArithmeticDomainError: If sigma2(t) - sigma1(t) is not divisible by p
    """
    p = conn.p
    if isinstance(Phi1, RatFuncMatrix):
        Phi1 = Phi1.to_series_matrix(p, m, K or config.DEFAULT_K)
    K = Phi1.K
    Phi1 = Phi1.reduce(m)
    if profile is None and conn.singular_points:
        profile = profile_for(conn, conn.singular_points[0])
    if profile is None:
        profile = BoundProfile(p, conn.r, 0, config.FROB_VALUATION, config.FROB_INVERSE_VALUATION, (Fraction(0),))
    tower = tower or DeltaTower(conn)

    difference = poly_sub(lift2.polynomial(p), lift1.polynomial(p))
    if any(rational_val_p(c, p) < 1 for c in difference if c):
        raise ArithmeticDomainError("the two lifts do not agree modulo p")
    if not difference:
        return Phi1
    u = _polynomial_series([c / p for c in difference], p, m, K)

    I = lift_truncation_index(m, profile)
    logger.info(f"change of lift {lift1.descriptor} -> {lift2.descriptor}: {I} terms modulo {p}^{m}")
    result = Phi1
    u_power = TruncSeries.constant(1, p, m, K)
    for i in range(1, I):
        u_power = u_power * u
        if tower.matrix(i).is_zero:
            break
        term = Phi1 * _lifted_delta_series(tower, i, lift1, p, m, K)
        result = result + term.map(lambda e: e * u_power)
    return result


def round_trip_lift_change(data: FrobeniusData, conn: Connection, z, m: int, profile: BoundProfile = None):
    """
    Change the lift to the one centered at z and back; returns the number of digits on which the
    round trip agrees with Phi (m when it reproduces Phi mod p^m).
    """
    profile = profile or profile_for(conn, z)
    tower = DeltaTower(conn)
    centered = CenteredLift(Fraction(z))
    there = change_frobenius_lift(data.Phi, conn, data.lift, centered, m, profile, tower)
    back = change_frobenius_lift(there, conn, centered, data.lift, m, profile, tower)
    difference = back - data.Phi.reduce(m)
    agreement = difference.valuation()
    loss = abs(c_value(profile))
    if agreement < m - loss:
        raise TheoremViolationError(f"lift round trip at {format_point(z)} agrees only modulo {data.p}^{agreement}")
    return min(int(agreement), m)


# ---------------------------------------------------------------------------
# Consistency checks
# ---------------------------------------------------------------------------

@dataclass
class LiftCheckReport:
    z: object
    m: int
    measured_order: int
    required_order: int
    valuation: object
    required_valuation: int

    @property
    def passed(self):
        return self.measured_order >= self.required_order and self.valuation >= self.required_valuation

    def to_dict(self):
        return {
            "z": format_point(self.z),
            "m": self.m,
            "measured_order": self.measured_order,
            "required_order": self.required_order,
            "valuation": str(self.valuation),
            "required_valuation": self.required_valuation,
            "passed": self.passed,
        }


def local_lift_phi_check(data: FrobeniusData, conn: Connection, z, m: int, window: int = None) -> LiftCheckReport:
    """
    Move Phi to the lift centered at z and check its order there against -alpha1
    (0 when the exponents vanish or N has no pole), and v_p(Phi') >= v_p(Phi) + c.

    Raises:
        TheoremViolationError: If either check fails
    """
    from .reconstruct import lift_change_pole_budget, measured_order_series

    profile = profile_for(conn, z)
    tower = DeltaTower(conn)
    lift = CenteredLift(Fraction(z))
    Phi2 = change_frobenius_lift(data.Phi, conn, data.lift, lift, m, profile, tower)

    others = lift_change_pole_budget(conn, z, m, profile)
    order = measured_order_series(Phi2, z, m, others, window=window)
    if profile.z_case == "no-pole" or all(e == 0 for e in profile.exponents):
        required = 0
    else:
        from .bounds import alpha1
        required = -alpha1(profile.exponents, conn.p)
    valuation = Phi2.valuation()
    report = LiftCheckReport(z, m, order, required, valuation, profile.vPhi + c_value(profile))
    logger.info(f"lift check at {format_point(z)}, m = {m}: order {order} (required {required})")
    if not report.passed:
        raise TheoremViolationError(
            f"centered-lift Frobenius at {format_point(z)} modulo {conn.p}^{m} has order {order} < {required} "
            f"or valuation {valuation} < {report.required_valuation}")
    return report


@dataclass
class DeltaCheckReport:
    p: int
    i_max: int
    rows: list
    flagged: bool = False

    @property
    def violations(self):
        return [row for row in self.rows if not row["ok"]]


def delta_valuation_check(conn: Connection, profile: BoundProfile, i_max: int, cache_dir=None) -> DeltaCheckReport:
    """Compare the valuation of Delta^(i) on V with f(i) for i = 0..i_max."""
    flagged = profile.vN < 0
    if flagged:
        logger.warning("v_p(N) < 0: the valuation bound is reported, not asserted")
    tower = DeltaTower(conn, cache_dir)
    values = tower.valuations(conn.p, i_max)
    rows = []
    for i, v in enumerate(values):
        f = f_of_i(i, profile)
        rows.append({"i": i, "valuation": v, "f": f, "ok": v >= f})
    report = DeltaCheckReport(conn.p, i_max, rows, flagged)
    logger.info(f"Delta valuation check up to {i_max}: {len(report.violations)} violations")
    return report


# ---------------------------------------------------------------------------
# Cache
# ---------------------------------------------------------------------------

def _header(data: FrobeniusData):
    fields = {
        "acc": data.acc,
        "family": data.family,
        "K": data.K,
        "kernel": config.KERNEL_VERSION,
        "lift": data.lift.descriptor,
        "M": data.M,
        "Mw": data.Mw,
        "p": data.p,
        "scale": data.scale,
    }
    return " ".join(f"{key}={fields[key]}" for key in sorted(fields, key=str.lower))


def cache_path(cache_dir, family, p, M, K, buffer):
    key = generate_cache_key(family, p, M, K, buffer, config.KERNEL_VERSION)
    return os.path.join(cache_dir, f"phi-p{p}-M{M}-K{K}-{key[:12]}.frobcache")


def serialize_phi(data: FrobeniusData) -> str:
    lines = [CACHE_MAGIC, _header(data)]
    for a, row in enumerate(data.Phi.rows):
        for b, series in enumerate(row):
            lines.append(" ".join([str(a), str(b)] + [str(c) for c in series.coeffs]))
    return "\n".join(lines) + "\n"


def write_phi_cache(data: FrobeniusData, path):
    atomic_write_text(path, serialize_phi(data))
    logger.info(f"wrote Frobenius cache {path}")


def read_phi_cache(path) -> FrobeniusData:
    """
    Raises:
        CacheError: If the file is missing pieces or has the wrong magic line
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except IOError as e:
        raise CacheError(f"cannot read cache {path}: {str(e)}")
    if len(lines) < 2 or lines[0] != CACHE_MAGIC:
        raise CacheError(f"{path} is not a Frobenius cache file")
    try:
        header = dict(item.split("=", 1) for item in lines[1].split())
        p, Mw, K, acc = (int(header[k]) for k in ("p", "Mw", "K", "acc"))
        entries = {}
        for line in lines[2:]:
            parts = line.split()
            entries[(int(parts[0]), int(parts[1]))] = tuple(int(x) for x in parts[2:])
        r = int(round(len(entries) ** 0.5))
        rows = tuple(tuple(TruncSeries(p, Mw, entries[(a, b)], acc) for b in range(r)) for a in range(r))
    except (KeyError, ValueError, IndexError) as e:
        raise CacheError(f"corrupt cache {path}: {str(e)}")
    if header.get("kernel") != config.KERNEL_VERSION:
        raise CacheError(f"{path} was written by kernel version {header.get('kernel')}")
    Phi = SeriesMatrix(rows)
    Phi0 = PAdicMatrix(tuple(tuple(PAdicApprox(p, e.coeffs[0], Mw, acc) for e in row) for row in rows))
    return FrobeniusData(header["family"], p, int(header["M"]), Mw, K, int(header["scale"]), Phi, Phi0,
                         parse_lift(header["lift"]))


def compute_frobenius(conn: Connection, M: int, K: int, buffer: int = None, cache_dir=None):
    """
    Frobenius matrix of a built-in family, through the cache when possible.

    Returns:
        tuple: (FrobeniusData, cache_hit)

    Raises:
        UnsupportedInputError: If the connection has no built-in fiber algorithm
    """
    if conn.name not in config.BUILTIN_FAMILIES:
        raise UnsupportedInputError("deformation needs a built-in family with a known initial fiber")
    buffer = config.DEFAULT_BUFFER if buffer is None else buffer
    p = conn.p
    path = cache_path(cache_dir, conn.name, p, M, K, buffer) if cache_dir else None
    if path and os.path.exists(path):
        logger.debug(f"cache hit: {path}")
        return read_phi_cache(path), True
    Mw, E = working_precision(p, M, K, buffer)
    Phi0 = kedlaya_fiber_matrix(family_fiber(0, p, Mw))
    data = deformation_phi(conn, Phi0, K, Mw, E, M, conn.name)
    if path:
        write_phi_cache(data, path)
    return data, False
