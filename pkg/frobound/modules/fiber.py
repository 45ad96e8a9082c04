"""
Fiber module for frobound.

Computes the matrix of the p-power Frobenius on the odd cohomology of one elliptic fiber
y^2 = Q(x), in the basis [dx/y, x dx/y], by expanding sigma(1/y) as a truncated series and
reducing the resulting differentials with the exact Monsky-Washnitzer relations.
"""

from dataclasses import dataclass
from fractions import Fraction

import sympy as sym

from ..utils.exceptions import InputError, PrecisionError, UnsupportedInputError
from ..utils.helpers import ceil_log
from ..utils.logger import logger
from .arith import (
    PAdicMatrix,
    T,
    poly_add,
    poly_deriv,
    poly_divmod,
    poly_from_coeffs,
    poly_coeffs,
    poly_mul,
    poly_scale,
    poly_sub,
    rational_val_p,
    symmetric_lift,
    to_residue,
)


@dataclass(frozen=True)
class FiberCurve:
    """The curve y^2 = Q(x) with Q an integer cubic (coefficients lowest degree first)."""

    Q: tuple
    p: int
    M: int

    def __post_init__(self):
        Q = tuple(int(c) for c in self.Q)
        while Q and Q[-1] == 0:
            Q = Q[:-1]
        object.__setattr__(self, "Q", Q)
        if self.p == 2 or not sym.isprime(self.p):
            raise UnsupportedInputError(f"p must be an odd prime, got {self.p}")
        if len(Q) != 4:
            raise UnsupportedInputError("only cubic fibers are supported")
        if self.M < 1:
            raise InputError("precision M must be at least 1")
        if Q[-1] % self.p == 0:
            raise UnsupportedInputError(f"{self.p} divides the leading coefficient of Q")
        if self.discriminant() % self.p == 0:
            raise UnsupportedInputError(f"Q is not squarefree modulo {self.p}")

    def discriminant(self):
        return int(sym.discriminant(poly_from_coeffs(self.Q), T))

    def evaluate(self, x):
        return sum(c * x ** i for i, c in enumerate(self.Q))


def family_fiber(t_value, p, M):
    """The fiber y^2 = x^3 + 1 + (t + 1)(x^2 + x) of the built-in family at an integer t."""
    a = int(t_value) + 1
    return FiberCurve((1, a, a, 1), p, M)


def count_points(curve: FiberCurve) -> int:
    """Number of points over F_p of the projective curve, by brute force."""
    p = curve.p
    squares = {}
    for y in range(p):
        squares[y * y % p] = squares.get(y * y % p, 0) + 1
    affine = sum(squares.get(curve.evaluate(x) % p, 0) for x in range(p))
    return affine + 1


def trace_from_count(curve: FiberCurve) -> int:
    return curve.p + 1 - count_points(curve)


class _Truncator:
    """Rounds rationals to a fixed absolute p-adic precision, keeping only p in denominators."""

    def __init__(self, p, precision):
        self.p = p
        self.precision = precision

    def __call__(self, q):
        if q == 0:
            return Fraction(0)
        v = rational_val_p(q, self.p)
        if v >= self.precision:
            return Fraction(0)
        unit = q / Fraction(self.p) ** v
        digits = self.precision - v
        return Fraction(symmetric_lift(to_residue(unit, self.p, digits), self.p ** digits)) * Fraction(self.p) ** v

    def poly(self, a):
        out = [self(c) for c in a]
        while out and out[-1] == 0:
            out.pop()
        return out


def _loss(k, p):
    """Digits lost while reducing the k-th series term to the basis."""
    return 2 * ceil_log(3 * p * (2 * k + 1), p) + 1


def series_length(p, N):
    """Smallest L such that every term k >= L contributes only multiples of p^N."""
    L = 0
    while any(1 + k - _loss(k, p) < N for k in range(L, L + p * p)):
        L += 1
    return L


class KedlayaSolver:
    """
    Frobenius matrix of an elliptic curve in odd characteristic.

    Differentials A(x) dx / y^(2m+1) are stored per pole level m and reduced downwards with
    A = U Q + V Q'  =>  A dx / y^(2m+1) ~ (U + 2 V' / (2m - 1)) dx / y^(2m-1),
    then the degree of the m = 0 part is lowered with the exact forms d(x^j y).
    """

    def __init__(self, curve: FiberCurve, precision=None):
        self.curve = curve
        self.p = curve.p
        self.N = curve.M if precision is None else precision
        self.L = series_length(self.p, self.N)
        self.working = self.N + _loss(self.L, self.p) + 2
        self.round = _Truncator(self.p, self.working)
        self.Q = [Fraction(c) for c in curve.Q]
        self.dQ = poly_deriv(self.Q)
        _, t, h = sym.gcdex(poly_from_coeffs(self.Q), poly_from_coeffs(self.dQ))
        # t * Q' = 1 mod Q
        self.dQ_inverse = poly_scale(poly_coeffs(t), 1 / poly_coeffs(h)[0])

    def _frobenius_error(self):
        p = self.p
        sigma_Q = [0] * (3 * p + 1)
        for i, c in enumerate(self.Q):
            sigma_Q[i * p] = c
        power = [Fraction(1)]
        for _ in range(p):
            power = poly_mul(power, self.Q)
        return poly_sub(sigma_Q, power)

    def _initial_forms(self, j):
        """sigma(x^j dx / y) as {m: A_m} with A_m dx / y^(2m+1)."""
        p = self.p
        E = self._frobenius_error()
        forms = {}
        prefix = [Fraction(0)] * (p * (j + 1) - 1) + [Fraction(p)]
        binomial = Fraction(1)
        E_power = [Fraction(1)]
        for k in range(self.L):
            m = (p * (2 * k + 1) - 1) // 2
            forms[m] = self.round.poly(poly_scale(poly_mul(prefix, E_power), binomial))
            E_power = self.round.poly(poly_mul(E_power, E))
            binomial *= Fraction(-1, 2) - k
            binomial /= k + 1
        return forms

    def _reduce_pole(self, A, m):
        """One pole-order step: returns the level m - 1 numerator."""
        _, remainder = poly_divmod(A, self.Q)
        _, V = poly_divmod(poly_mul(remainder, self.dQ_inverse), self.Q)
        U, rest = poly_divmod(poly_sub(A, poly_mul(V, self.dQ)), self.Q)
        if any(self.round(c) for c in rest):
            raise PrecisionError("pole reduction left a nonzero remainder", required_increase=1)
        return poly_add(U, poly_scale(poly_deriv(V), Fraction(2, 2 * m - 1)))

    def _reduce_degree(self, A):
        """Lower the degree of A dx / y below 2 using d(x^j y) = (j x^(j-1) Q + x^j Q' / 2) dx / y."""
        lead_Q = self.Q[-1]
        A = list(A)
        while len(A) > 2:
            d = len(A) - 1
            j = d - 2
            relation = poly_add(poly_scale(poly_mul([0] * (j - 1) + [1], self.Q), j) if j else [],
                                poly_scale(poly_mul([0] * j + [1], self.dQ), Fraction(1, 2)))
            coef = A[-1] / (lead_Q * Fraction(2 * j + 3, 2))
            A = self.round.poly(poly_sub(A, poly_scale(relation, coef)))
            if len(A) > d:
                A = A[:d]
        return A + [Fraction(0)] * (2 - len(A))

    def column(self, j):
        forms = self._initial_forms(j)
        for m in range(max(forms), 0, -1):
            A = forms.pop(m, None)
            if not A:
                continue
            lower = self._reduce_pole(A, m)
            forms[m - 1] = self.round.poly(poly_add(forms.get(m - 1, []), lower))
        return self._reduce_degree(forms.get(0, []))

    def solve(self) -> PAdicMatrix:
        """
        The 2 x 2 Frobenius matrix modulo p^N.

        Raises:
            PrecisionError: If the result is not integral or fails the Weil check
        """
        logger.info(f"fiber Frobenius: p = {self.p}, N = {self.N}, terms = {self.L}, working digits = {self.working}")
        columns = [self.column(j) for j in range(2)]
        entries = [[columns[j][i] for j in range(2)] for i in range(2)]
        if any(c and rational_val_p(c, self.p) < 0 for row in entries for c in row):
            raise PrecisionError("fiber Frobenius matrix is not integral; raise the working precision",
                                 required_increase=2)
        matrix = PAdicMatrix.from_integers(entries, self.p, self.N)
        self._weil_check(matrix)
        return matrix

    def _weil_check(self, matrix):
        p, modulus = self.p, self.p ** self.N
        det = matrix.determinant().mantissa
        trace = symmetric_lift(matrix.trace().mantissa, modulus)
        if det != p % modulus or trace * trace > 4 * p:
            raise PrecisionError(f"fiber Frobenius fails the Weil check (det {det}, trace {trace})",
                                 required_increase=2)


def kedlaya_fiber_matrix(curve: FiberCurve, precision=None) -> PAdicMatrix:
    """Matrix of Frobenius on [dx/y, x dx/y] with entry (i, j) the dx-coefficient i of sigma(v_j)."""
    return KedlayaSolver(curve, precision).solve()


def trace_of_frobenius(phi0: PAdicMatrix) -> int:
    """a_p as the symmetric lift of the trace."""
    return symmetric_lift(phi0.trace().mantissa, phi0.p ** phi0.acc)


def fiber_summary(curve: FiberCurve, precision=None) -> dict:
    """Frobenius matrix, trace, valuations and the brute-force cross-check for one fiber."""
    phi0 = kedlaya_fiber_matrix(curve, precision)
    a_p = trace_of_frobenius(phi0)
    expected = trace_from_count(curve)
    if a_p != expected:
        logger.warning(f"trace {a_p} disagrees with the point count ({expected})")
    return {
        "p": curve.p,
        "Q": list(curve.Q),
        "a_p": a_p,
        "a_p_from_count": expected,
        "points": count_points(curve),
        "v_phi": int(phi0.valuation()),
        "v_phi_inv": int(phi0.inverse_valuation()),
        "phi0": phi0.lifted(),
        "precision": phi0.acc,
    }
