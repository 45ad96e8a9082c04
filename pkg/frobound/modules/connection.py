"""
Connection module for frobound.

A connection on the projective line is given by the matrix N of nabla_{d/dt} in a fixed
basis. This module finds its singular points, residues and exponents, checks the
hypotheses of the pole-order bound at a point, performs shearing transformations, and
builds the matrices of the divided-power operators D^i / i!.
"""

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm

import sympy as sym
from tqdm import tqdm

from .. import config
from ..utils.exceptions import ArithmeticDomainError, UnsupportedInputError
from ..utils.helpers import generate_cache_key, get_cached_data, save_to_cache
from ..utils.logger import logger
from .arith import (
    INFINITY,
    RatFunc,
    RatFuncMatrix,
    frac_charpoly,
    frac_identity,
    frac_inverse,
    frac_matmul,
    frac_matrix_val,
    frac_scale,
    frac_sub,
    from_sympy_matrix,
    poly_add,
    poly_deriv,
    poly_gauss_val,
    poly_mul,
    poly_scale,
    poly_sub,
    rational_roots,
    rational_val_p,
    taylor_coefficients,
    to_sympy_matrix,
)

INFINITY_POINT = "infinity"

ELLIPTIC_EXAMPLE = (
    ("(-t/2 - 1/2)/(t^2 - 4)", "(t/2 + 3/2)/(t^2 - 4)"),
    ("(-1/2)/(t^2 - 4)", "(t/2 + 1/2)/(t^2 - 4)"),
)


def format_point(z):
    return "inf" if z == INFINITY_POINT else str(z)


def parse_point(text):
    """Parse '2', '-1/3' or 'inf'/'infinity'."""
    if str(text).strip().lower() in ("inf", "infinity", "oo"):
        return INFINITY_POINT
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise UnsupportedInputError(f"not a rational point: {text}")


def _invert_variable(f):
    """f(1/s) as a rational function of s."""
    num, den = f.numerator_coeffs(), f.denominator_coeffs()
    if not num:
        return f
    shift = (len(den) - 1) - (len(num) - 1)
    rnum, rden = list(reversed(num)), list(reversed(den))
    if shift >= 0:
        rnum = [0] * shift + rnum
    else:
        rden = [0] * (-shift) + rden
    return RatFunc.from_coeffs(rnum, rden)


def matrix_at_infinity(N):
    """The dt-twisted matrix -N(1/s)/s^2 in the coordinate s = 1/t."""
    factor = RatFunc.from_coeffs([-1], [0, 0, 1])
    return N.map(lambda e: _invert_variable(e) * factor)


@dataclass(frozen=True)
class Connection:
    """
    A connection on the projective line over Q_p, given by the matrix N of nabla_{d/dt}.

    ``singular_points`` lists the rational poles of N in increasing order, followed by
    INFINITY_POINT when N dt has a pole at infinity.
    """

    p: int
    N: RatFuncMatrix
    name: str = "connection"
    singular_points: tuple = field(init=False)

    def __post_init__(self):
        points = list(self.N.poles())
        if matrix_at_infinity(self.N).order_at(0) < 0:
            points.append(INFINITY_POINT)
        object.__setattr__(self, "singular_points", tuple(points))

    @property
    def r(self):
        return self.N.r

    @property
    def finite_singular_points(self):
        return [z for z in self.singular_points if z != INFINITY_POINT]

    @classmethod
    def from_rows(cls, rows, p, name="connection"):
        """Build from rows of 'P(t)/Q(t)' strings."""
        return cls(p, RatFuncMatrix.parse(rows), name)

    def with_prime(self, p):
        return Connection(p, self.N, self.name)

    def local_matrix(self, z):
        """(matrix, point) in the local coordinate at z: N at finite z, the twisted matrix at s = 0."""
        if z == INFINITY_POINT:
            return matrix_at_infinity(self.N), Fraction(0)
        return self.N, Fraction(z)


def builtin_connection(name, p):
    """
    Connection of a built-in family.

    Raises:
        UnsupportedInputError: For an unknown family identifier
    """
    if name == "elliptic-example":
        return Connection.from_rows(ELLIPTIC_EXAMPLE, p, name)
    raise UnsupportedInputError(f"unknown built-in family '{name}' (known: {', '.join(config.BUILTIN_FAMILIES)})")


# ---------------------------------------------------------------------------
# Residues and exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidueData:
    """Residue matrix, exponents and (when one exists) a diagonalizer at a point."""

    z: object
    residue: tuple
    exponents: tuple
    diagonalizer: tuple = None
    has_pole: bool = True

    def v_s_sum(self, p):
        """v_p(S) + v_p(S^-1) for the diagonalizer, None when there is none."""
        if self.diagonalizer is None:
            return None
        return frac_matrix_val(self.diagonalizer, p) + frac_matrix_val(frac_inverse(self.diagonalizer), p)


def residue_matrix(conn: Connection, z):
    """
    Exact residue (t - z) N |_{t=z}.

    Raises:
        UnsupportedInputError: If N has a pole of order >= 2 at z
    """
    M, point = conn.local_matrix(z)
    order = M.order_at(point)
    if order < -1:
        raise UnsupportedInputError(f"pole of order {-order} at {format_point(z)}; only simple poles are supported")
    return (M * RatFunc.linear(point)).evaluate(point)


def exponents(conn: Connection, z):
    """
    Eigenvalues of the residue at z with multiplicity, sorted.

    Raises:
        UnsupportedInputError: If the characteristic polynomial does not split over Q
    """
    residue = residue_matrix(conn, z)
    return _eigenvalues(residue, z)


def _eigenvalues(residue, z):
    roots, splits = rational_roots(frac_charpoly(residue))
    if not splits:
        raise UnsupportedInputError(f"irrational exponents at {format_point(z)}")
    return tuple(root for root, mult in roots for _ in range(mult))


def _primitive_integer_vector(vector):
    values = [Fraction(x) for x in vector]
    scale = 1
    for x in values:
        scale = lcm(scale, x.denominator)
    ints = [int(x * scale) for x in values]
    g = 0
    for x in ints:
        g = gcd(g, x)
    ints = [x // g for x in ints]
    first = next(x for x in ints if x)
    return [-x for x in ints] if first < 0 else ints


def canonical_diagonalizer(residue, eigenvalues):
    """
    Matrix S of primitive integer eigenvectors (columns ordered like ``eigenvalues``)
    with S^-1 R S diagonal, or None when R is not diagonalizable over Q.
    """
    r = len(residue)
    R = to_sympy_matrix(residue)
    columns = []
    for value in sorted(set(eigenvalues)):
        basis = (R - sym.Rational(value.numerator, value.denominator) * sym.eye(r)).nullspace()
        if len(basis) != eigenvalues.count(value):
            return None
        columns.extend(_primitive_integer_vector(from_sympy_matrix(v.T)[0]) for v in basis)
    return tuple(tuple(Fraction(columns[j][i]) for j in range(r)) for i in range(r))


def residue_data(conn: Connection, z) -> ResidueData:
    """Residue, exponents and canonical diagonalizer at z."""
    M, point = conn.local_matrix(z)
    if M.is_zero or M.order_at(point) >= 0:
        zero = frac_scale(frac_identity(conn.r), 0)
        return ResidueData(z, zero, (Fraction(0),) * conn.r, frac_identity(conn.r), has_pole=False)
    residue = residue_matrix(conn, z)
    eigenvalues = _eigenvalues(residue, z)
    S = canonical_diagonalizer(residue, list(eigenvalues))
    logger.debug(f"residue at {format_point(z)}: exponents {[str(e) for e in eigenvalues]}")
    return ResidueData(z, residue, eigenvalues, S, has_pole=True)


# ---------------------------------------------------------------------------
# Hypotheses of the pole-order bound
# ---------------------------------------------------------------------------

@dataclass
class HypothesisReport:
    """Pass/fail per hypothesis at one point, with human-readable notes."""

    z: object
    p: int
    simple_pole: bool = True
    exponents_integral: bool = True
    distinct_discs: bool = True
    point_integral: bool = True
    no_pole: bool = False
    exponents: tuple = ()
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.simple_pole and self.exponents_integral and self.distinct_discs and self.point_integral

    def to_dict(self):
        return {
            "z": format_point(self.z),
            "p": self.p,
            "simple_pole": self.simple_pole,
            "exponents_integral": self.exponents_integral,
            "distinct_discs": self.distinct_discs,
            "point_integral": self.point_integral,
            "no_pole": self.no_pole,
            "exponents": [str(e) for e in self.exponents],
            "passed": self.passed,
            "notes": list(self.notes),
        }


def validate_theorem_hypotheses(conn: Connection, z) -> HypothesisReport:
    """Check the hypotheses at z; never raises, failures are recorded in the report."""
    p = conn.p
    report = HypothesisReport(z, p)

    if z != INFINITY_POINT and rational_val_p(z, p) < 0:
        report.point_integral = False
        report.notes.append(f"{format_point(z)} is not {p}-integral")

    M, point = conn.local_matrix(z)
    if M.is_zero or M.order_at(point) >= 0:
        report.no_pole = True
        report.notes.append("no pole")
    elif M.order_at(point) < -1:
        report.simple_pole = False
        report.exponents_integral = False
        report.notes.append(f"pole of order {-M.order_at(point)}")
    else:
        try:
            report.exponents = exponents(conn, z)
            bad = [e for e in report.exponents if e.denominator % p == 0]
            if bad:
                report.exponents_integral = False
                report.notes.append(f"exponents {[str(e) for e in bad]} are not {p}-integral")
        except UnsupportedInputError as e:
            report.exponents_integral = False
            report.notes.append(str(e))

    for other in conn.singular_points:
        if other == z:
            continue
        if z == INFINITY_POINT or other == INFINITY_POINT:
            finite = other if z == INFINITY_POINT else z
            if rational_val_p(finite, p) < 0:
                report.distinct_discs = False
                report.notes.append(f"{format_point(finite)} lies in the residue disc of infinity")
        elif rational_val_p(Fraction(z) - Fraction(other), p) > 0:
            report.distinct_discs = False
            report.notes.append(f"{format_point(other)} has the same reduction mod {p}")
    return report


# ---------------------------------------------------------------------------
# Shearing
# ---------------------------------------------------------------------------

def gauge_transform(N, W):
    """Matrix of the connection in the basis v W: W^-1 N W + W^-1 dW/dt."""
    W_inv = W.inverse()
    return W_inv * N * W + W_inv * W.derivative()


def _completed_basis(vectors, r):
    """Extend independent rational vectors to a basis of Q^r with standard vectors."""
    basis = [list(v) for v in vectors]
    for i in range(r):
        if len(basis) == r:
            break
        candidate = [Fraction(int(i == j)) for j in range(r)]
        if to_sympy_matrix(basis + [candidate]).rank() == len(basis) + 1:
            basis.append(candidate)
    return tuple(tuple(basis[j][i] for j in range(r)) for i in range(r))


def shearing_transform(conn: Connection, z):
    """
    Basis change W with integer exponents at z all moved to 0.

    First every exponent is raised by -min by the scalar (t - z)^(-min); then the eigenspace
    of the largest positive exponent is repeatedly sheared by (t - z)^-1, lowering those
    exponents by one per step.

    Returns:
        tuple: (W, N') with N' = W^-1 N W + W^-1 W'

    Raises:
        UnsupportedInputError: If an exponent is not an integer or z is infinity
    """
    if z == INFINITY_POINT:
        raise UnsupportedInputError("shearing is implemented at finite points only")
    z = Fraction(z)
    r = conn.r
    current = residue_data(conn, z)
    if any(e.denominator != 1 for e in current.exponents):
        raise UnsupportedInputError(f"non-integer exponents at {z}: {[str(e) for e in current.exponents]}")
    if not current.has_pole or all(e == 0 for e in current.exponents):
        return RatFuncMatrix.identity(r), conn.N

    u = RatFunc.linear(z)
    low = int(min(current.exponents))
    W = RatFuncMatrix.identity(r) * (u ** (-low))
    N = gauge_transform(conn.N, W)

    while True:
        shifted = Connection(conn.p, N, conn.name)
        residue = residue_matrix(shifted, z)
        values = _eigenvalues(residue, z)
        top = max(values)
        if top == 0:
            break
        R = to_sympy_matrix(residue)
        kernel = [from_sympy_matrix(v.T)[0] for v in (R - int(top) * sym.eye(r)).nullspace()]
        P = RatFuncMatrix.constant(_completed_basis(kernel, r))
        D = RatFuncMatrix.diagonal([u ** -1 if i < len(kernel) else RatFunc.const(1) for i in range(r)])
        step = P * D
        W = W * step
        N = gauge_transform(N, step)
        logger.debug(f"shearing step at {z}: lowered exponent {top} on a {len(kernel)}-dimensional eigenspace")
    return W, N


# ---------------------------------------------------------------------------
# Divided-power operators
# ---------------------------------------------------------------------------

def _poly_matmul(a, b):
    r = len(a)
    out = []
    for i in range(r):
        row = []
        for j in range(r):
            acc = []
            for k in range(r):
                acc = poly_add(acc, poly_mul(a[i][k], b[k][j]))
            row.append(acc)
        out.append(row)
    return out


class DeltaTower:
    """
    The matrices Delta^(i) of D^i / i! in common-denominator form.

    With N = P / d, every Delta^(i) equals A_i / d^i for a polynomial matrix A_i, and
    A_{i+1} = (d A_i' - i d' A_i + P A_i) / (i + 1).
    """

    def __init__(self, conn: Connection, cache_dir=None):
        self.conn = conn
        self.r = conn.r
        self.den, self.num = conn.N.common_denominator()
        self.den_deriv = poly_deriv(self.den)
        self.numerators = [[[[Fraction(int(i == j))] if i == j else [] for j in range(self.r)]
                            for i in range(self.r)]]
        self.cache_dir = cache_dir
        self._lock = threading.Lock()

    def _step(self):
        i = len(self.numerators) - 1
        A = self.numerators[-1]
        PA = _poly_matmul(self.num, A)
        nxt = []
        for j in range(self.r):
            row = []
            for k in range(self.r):
                a = A[j][k]
                entry = poly_sub(poly_mul(self.den, poly_deriv(a)), poly_scale(poly_mul(self.den_deriv, a), i))
                entry = poly_add(entry, PA[j][k])
                row.append(poly_scale(entry, Fraction(1, i + 1)))
            nxt.append(row)
        self.numerators.append(nxt)

    def extend(self, i_max):
        """Make Delta^(0..i_max) available."""
        with self._lock:
            if len(self.numerators) > i_max:
                return self
            missing = i_max + 1 - len(self.numerators)
            if missing > 0:
                logger.info(f"computing Delta^(i) up to i = {i_max}")
                for _ in tqdm(range(missing), desc="Delta tower", disable=None, leave=False):
                    self._step()
        return self

    def denominator_power(self, i):
        d = [Fraction(1)]
        for _ in range(i):
            d = poly_mul(d, self.den)
        return d

    def matrix(self, i) -> RatFuncMatrix:
        self.extend(i)
        den = self.denominator_power(i)
        return RatFuncMatrix(tuple(tuple(RatFunc.from_coeffs(e, den) for e in row)
                                   for row in self.numerators[i]))

    def gauss_valuation(self, i, p):
        """Exact Gauss valuation of Delta^(i) at p."""
        self.extend(i)
        vals = [poly_gauss_val(e, p) for row in self.numerators[i] for e in row]
        return min(vals) - i * poly_gauss_val(self.den, p)

    def valuations(self, p, i_max):
        """
        Gauss valuations of Delta^(0..i_max) at p.

        The table is cached on disk per (N, p); the exact numerators stay in memory.
        """
        key = generate_cache_key("delta-valuations", config.KERNEL_VERSION, str(self.conn.N), p)
        if self.cache_dir and config.DELTA_CACHE:
            cached = get_cached_data(key, self.cache_dir)
            if cached and len(cached) > i_max:
                logger.debug(f"delta valuation cache hit for p = {p}")
                return [INFINITY if v is None else v for v in cached[:i_max + 1]]
        self.extend(i_max)
        table = [self.gauss_valuation(i, p) for i in range(i_max + 1)]
        if self.cache_dir and config.DELTA_CACHE:
            save_to_cache([None if v == INFINITY else v for v in table], key, self.cache_dir)
        return table


def delta_matrices(conn: Connection, i_max: int, cache_dir=None):
    """Delta^(0), ..., Delta^(i_max) as exact rational-function matrices."""
    if i_max < 0:
        raise ValueError("i_max must be non-negative")
    tower = DeltaTower(conn, cache_dir).extend(i_max)
    return [tower.matrix(i) for i in range(i_max + 1)]


def delta_leading_term(conn: Connection, z, i):
    """(R_z - (i-1) I) ... (R_z - I) R_z / i!, the predicted coefficient of (t - z)^-i in Delta^(i)."""
    R = residue_matrix(conn, z)
    r = conn.r
    out = frac_identity(r)
    factorial = 1
    for k in range(i):
        out = frac_matmul(frac_sub(R, frac_scale(frac_identity(r), k)), out)
        factorial *= k + 1
    return frac_scale(out, Fraction(1, factorial))


# ---------------------------------------------------------------------------
# Sup norm on V
# ---------------------------------------------------------------------------

def v_on_V(f: RatFuncMatrix, p: int, K_probe: int = 64, method: str = "gauss"):
    """
    p-adic valuation of f for the supremum norm on V.

    ``method="gauss"`` returns the Gauss valuation, exact when all poles lie in removed
    residue discs of valuation-0 points. ``method="probe"`` takes the minimum coefficient
    valuation of the expansions at 0 and at infinity truncated at K_probe.

    Raises:
        ArithmeticDomainError: If f has a pole whose valuation is not 0
    """
    for z in f.poles():
        if rational_val_p(z, p) != 0:
            raise ArithmeticDomainError(f"pole at {z} inside a probed disc")
    if method == "gauss":
        return f.gauss_valuation(p)
    if method != "probe":
        raise ValueError(f"unknown method: {method}")
    best = INFINITY
    for e in f.entries():
        if e.is_zero:
            continue
        num, den = e.numerator_coeffs(), e.denominator_coeffs()
        at_zero = taylor_coefficients(num, den, K_probe)
        rnum, rden = list(reversed(num)), list(reversed(den))
        at_infinity = taylor_coefficients(rnum, rden, K_probe)
        vals = [rational_val_p(c, p) for c in at_zero + at_infinity if c != 0]
        if vals:
            best = min(best, min(vals))
    return best
