"""
Bound calculus module for frobound.

Closed-form pole-order bounds for Frobenius matrices at a singular point, including the
Teichmüller-lift and diagonalizable-residue improvements and the effect of a basis change.
Every logarithm is computed by integer digit counting.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor

from .. import config
from ..utils.exceptions import ArithmeticDomainError, InputError, UnsupportedInputError
from ..utils.helpers import ceil_log, floor_log
from ..utils.logger import logger
from .arith import INFINITY
from .connection import INFINITY_POINT, Connection, format_point, residue_data, v_on_V

NO_POLE = "no-pole"
ZERO_OR_INFINITY = "z-is-0-or-inf"
GENERIC_POLE = "generic-pole"


@dataclass(frozen=True)
class BoundProfile:
    """Everything the bound formulas depend on at one point."""

    p: int
    r: int
    vN: int
    vPhi: int
    vPhiInv: int
    exponents: tuple
    z_case: str = GENERIC_POLE
    teichmuller: bool = False
    vS_sum: int = None
    include_zero: bool = True

    def __post_init__(self):
        if not self.exponents:
            raise InputError("a bound profile needs at least one exponent")
        bad = [e for e in self.exponents if Fraction(e).denominator % self.p == 0]
        if bad:
            raise UnsupportedInputError(f"exponents {[str(e) for e in bad]} are not {self.p}-integral")
        if self.vPhi + self.vPhiInv > 0:
            raise InputError("v_p(Phi) + v_p(Phi^-1) must be <= 0")
        if self.z_case not in (NO_POLE, ZERO_OR_INFINITY, GENERIC_POLE):
            raise InputError(f"unknown point case '{self.z_case}'")

    @property
    def s(self):
        return self.vPhi + self.vPhiInv

    @property
    def first_index(self):
        return 0 if self.include_zero else 1


@dataclass
class BoundRow:
    """Order bound at one precision m."""

    m: int
    alpha1: int
    alpha2: int
    g: int
    c: int
    base_bound: int
    bound: int
    teichmuller_applied: bool = False
    diagonal_applied: bool = False
    diagonal_condition: bool = None
    empty_set: bool = False

    @property
    def variant(self):
        names = [name for name, used in (("teichmuller", self.teichmuller_applied),
                                          ("diagonal-residue", self.diagonal_applied)) if used]
        return "+".join(names) if names else "base"


@dataclass
class BoundReport:
    """Bound rows for a range of m at one point."""

    z: object
    profile: BoundProfile
    rows: list = field(default_factory=list)

    def to_records(self):
        return [{
            "p": self.profile.p,
            "z": format_point(self.z),
            "m": row.m,
            "alpha1": row.alpha1,
            "alpha2": row.alpha2,
            "g": row.g,
            "bound": row.bound,
            "base_bound": row.base_bound,
            "variant": row.variant,
            "diagonal_condition": "" if row.diagonal_condition is None else str(row.diagonal_condition).lower(),
        } for row in self.rows]


def f_of_i(i: int, profile: BoundProfile) -> int:
    """max{s * ceil(log_p i), (r - 1) vN + s * floor(log_p i)} with s = vPhi + vPhiInv."""
    if i < 0:
        raise ValueError("i must be non-negative")
    s = profile.s
    return max(s * ceil_log(i, profile.p), (profile.r - 1) * profile.vN + s * floor_log(i, profile.p))


def _blocks(p, start):
    """Yield (k, indices) where ceil(log_p i) = k on every index of the block."""
    yield 0, range(start, 2)
    k = 1
    while True:
        yield k, range(p ** (k - 1) + 1, p ** k + 1)
        k += 1


def _tail_certified(profile, k, offset, threshold):
    """
    True when i + offset + f(i) >= threshold for every i in block k and every later block.

    On block k, f(i) >= s * k, so the block minimum is at least p^(k-1) + 1 + offset + s k;
    this lower bound increases from block to block once p^(k-1) (p - 1) >= -s.
    """
    p, s = profile.p, profile.s
    if k == 0:
        return False
    lower = p ** (k - 1) + 1 + offset + s * k
    return lower >= threshold and p ** (k - 1) * (p - 1) >= -s


def c_value(profile: BoundProfile) -> int:
    """0 if vN >= 0, otherwise min{0, i + f(i)} over the index set."""
    if profile.vN >= 0:
        return 0
    best = 0
    for k, block in _blocks(profile.p, profile.first_index):
        if _tail_certified(profile, k, 0, 1):
            break
        for i in block:
            best = min(best, i + f_of_i(i, profile))
    return best


def g_scan(m: int, profile: BoundProfile, c: int = None):
    """
    max{i : i + vPhi + c + f(i) < m} with an emptiness flag.

    Returns:
        tuple: (g, empty) where g is 0 when the set is empty
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    c = c_value(profile) if c is None else c
    offset = profile.vPhi + c
    best = None
    for k, block in _blocks(profile.p, profile.first_index):
        if _tail_certified(profile, k, offset, m):
            break
        for i in block:
            if i + offset + f_of_i(i, profile) < m:
                best = i
    if best is None:
        return 0, True
    return best, False


def g_of_m(m: int, profile: BoundProfile) -> int:
    """The largest i with i + vPhi + c + f(i) < m (0 when no index qualifies)."""
    return g_scan(m, profile)[0]


def alpha1(exponents, p: int) -> int:
    """floor(-p min(exponents) + max(exponents))."""
    if not exponents:
        raise InputError("alpha1 needs at least one exponent")
    values = [Fraction(e) for e in exponents]
    return floor(-p * min(values) + max(values))


def coefficient_vanishing_threshold(exponents, p: int) -> Fraction:
    """p min(exponents) - max(exponents); Laurent coefficients of index strictly below it vanish."""
    values = [Fraction(e) for e in exponents]
    return p * min(values) - max(values)


def order_bound(m: int, profile: BoundProfile) -> BoundRow:
    """
    Lower bound for the order at the point of the Frobenius matrix modulo p^m.

    Raises:
        InputError: If m < 1
    """
    if m < 1:
        raise InputError("m must be at least 1")
    p = profile.p
    c = c_value(profile)
    g, empty = g_scan(m, profile, c)
    a1 = alpha1(profile.exponents, p)

    if profile.z_case == NO_POLE:
        return BoundRow(m, a1, 0, g, c, 0, 0, empty_set=empty)
    alpha2 = g if profile.z_case == GENERIC_POLE else 0
    base = -(a1 + p * alpha2)

    effective = alpha2
    condition = None
    diagonal = False
    if profile.z_case == GENERIC_POLE and profile.vS_sum is not None:
        condition = g + profile.vPhi + c + profile.vS_sum >= m
        if condition and alpha2 > 0:
            effective = alpha2 - 1
            diagonal = True
    multiplier = p - 1 if profile.teichmuller else p
    bound = -(a1 + multiplier * effective)
    return BoundRow(m, a1, alpha2, g, c, base, bound,
                    teichmuller_applied=profile.teichmuller and alpha2 > 0,
                    diagonal_applied=diagonal, diagonal_condition=condition, empty_set=empty)


@dataclass(frozen=True)
class BasisChangeBound:
    precision: int
    bound: int


def basis_change_bound(row: BoundRow, W, z, p: int) -> BasisChangeBound:
    """
    Precision and order bound after the basis change Phi' = W Phi sigma(W)^-1.

    Raises:
        ArithmeticDomainError: If W is singular
    """
    W_inv = W.inverse()
    if z == INFINITY_POINT:
        ord_w, ord_w_inv = W.order_at_infinity(), W_inv.order_at_infinity()
    else:
        ord_w, ord_w_inv = W.order_at(z), W_inv.order_at(z)
    if INFINITY in (ord_w, ord_w_inv):
        raise ArithmeticDomainError("basis change matrix is zero")
    precision = row.m + W.gauss_valuation(p) + W_inv.gauss_valuation(p)
    return BasisChangeBound(int(precision), int(row.bound + ord_w + p * ord_w_inv))


def is_teichmuller(z, p: int) -> bool:
    """z^p = z for a rational point, i.e. z in {0, 1, -1}."""
    if z == INFINITY_POINT:
        return False
    z = Fraction(z)
    return z ** p == z


def profile_for(conn: Connection, z, vPhi=None, vPhiInv=None, include_zero=None) -> BoundProfile:
    """Assemble the bound profile of a connection at z."""
    p = conn.p
    vPhi = config.FROB_VALUATION if vPhi is None else vPhi
    vPhiInv = config.FROB_INVERSE_VALUATION if vPhiInv is None else vPhiInv
    include_zero = config.INCLUDE_ZERO if include_zero is None else include_zero
    data = residue_data(conn, z)
    if not data.has_pole:
        z_case = NO_POLE
    elif z == INFINITY_POINT or z == 0:
        z_case = ZERO_OR_INFINITY
    else:
        z_case = GENERIC_POLE
    try:
        vN = v_on_V(conn.N, p)
    except ArithmeticDomainError as e:
        logger.warning(f"using the Gauss valuation of N: {str(e)}")
        vN = conn.N.gauss_valuation(p)
    if vN == INFINITY:
        vN = 0
    return BoundProfile(p, conn.r, int(vN), vPhi, vPhiInv, tuple(data.exponents), z_case,
                        is_teichmuller(z, p), data.v_s_sum(p) if data.has_pole else None, include_zero)


def bound_table(conn: Connection, z, m_values, **kwargs) -> BoundReport:
    """Order bounds at z for every m in m_values."""
    profile = profile_for(conn, z, **kwargs)
    logger.info(f"bounds at z = {format_point(z)}, p = {conn.p}, m = {min(m_values)}..{max(m_values)}")
    return BoundReport(z, profile, [order_bound(m, profile) for m in m_values])
