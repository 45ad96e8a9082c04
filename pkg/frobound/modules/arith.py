"""
Exact and truncated p-adic arithmetic kernel for frobound.

Four families of values live here:

* exact rationals (``fractions.Fraction``) and dense polynomials over them,
* ``PAdicApprox``: an element of Z/p^Mw with a guaranteed-accuracy floor,
* ``TruncSeries`` / ``SeriesMatrix``: power series in t truncated at order K,
* ``RatFunc`` / ``RatFuncMatrix``: normalized rational functions over Q (sympy ``Poly``).

Every value is immutable; operations return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import sympy as sym

from ..utils.exceptions import ArithmeticDomainError, UnsupportedInputError

T = sym.Symbol("t")
QQ = sym.QQ

INFINITY = float("inf")


class AtLeast(int):
    """A valuation known only as a lower bound: the element is 0 mod p^Mw."""

    def __repr__(self):
        return f"≥{int(self)}"

    __str__ = __repr__


# ---------------------------------------------------------------------------
# Valuations of exact numbers
# ---------------------------------------------------------------------------

def int_val(n: int, p: int) -> int | float:
    """p-adic valuation of an integer, INFINITY for 0."""
    if n == 0:
        return INFINITY
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def rational_val_p(q, p: int) -> int | float:
    """
    Exact p-adic valuation of a rational number.

    Args:
        q: Fraction, int or anything Fraction accepts
        p: Prime

    Returns:
        int, negative when p divides the denominator; INFINITY for q = 0
    """
    q = Fraction(q)
    if q == 0:
        return INFINITY
    return int_val(q.numerator, p) - int_val(q.denominator, p)


def to_residue(q, p: int, prec: int) -> int:
    """
    Map a p-integral rational to Z/p^prec.

    Raises:
        ArithmeticDomainError: If the denominator is divisible by p
    """
    q = Fraction(q)
    if q.denominator % p == 0:
        raise ArithmeticDomainError(f"{q} is not {p}-integral")
    modulus = p ** prec
    return q.numerator * pow(q.denominator, -1, modulus) % modulus


def symmetric_lift(mantissa: int, modulus: int) -> int:
    """Representative of mantissa mod modulus in (-modulus/2, modulus/2]."""
    mantissa %= modulus
    if 2 * mantissa > modulus:
        mantissa -= modulus
    return mantissa


# ---------------------------------------------------------------------------
# PAdicApprox
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PAdicApprox:
    """
    An element of Z/p^prec known to be correct modulo p^acc.

    ``prec`` is the working-modulus exponent Mw, ``acc`` the guaranteed accuracy.
    A mantissa of 0 means "congruent to 0 mod p^prec", never "exactly 0".
    """

    p: int
    mantissa: int
    prec: int
    acc: int

    def __post_init__(self):
        if self.prec < 1:
            raise ArithmeticDomainError("working precision must be positive")
        object.__setattr__(self, "mantissa", self.mantissa % self.p ** self.prec)
        object.__setattr__(self, "acc", max(0, min(self.acc, self.prec)))

    @classmethod
    def from_rational(cls, q, p, prec, acc=None):
        """Reduce a p-integral rational modulo p^prec."""
        return cls(p, to_residue(q, p, prec), prec, prec if acc is None else acc)

    @property
    def modulus(self):
        return self.p ** self.prec

    def _coerce(self, other):
        if isinstance(other, PAdicApprox):
            if other.p != self.p or other.prec != self.prec:
                raise ArithmeticDomainError("mismatched p or working precision")
            return other
        return PAdicApprox.from_rational(other, self.p, self.prec)

    def __add__(self, other):
        other = self._coerce(other)
        return PAdicApprox(self.p, self.mantissa + other.mantissa, self.prec, min(self.acc, other.acc))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return PAdicApprox(self.p, self.mantissa - other.mantissa, self.prec, min(self.acc, other.acc))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return PAdicApprox(self.p, -self.mantissa, self.prec, self.acc)

    def __mul__(self, other):
        other = self._coerce(other)
        return PAdicApprox(self.p, self.mantissa * other.mantissa, self.prec, min(self.acc, other.acc))

    __rmul__ = __mul__

    def inverse(self):
        """
        Inverse of a unit.

        Raises:
            ArithmeticDomainError: If the element is not a unit
        """
        if self.mantissa % self.p == 0:
            raise ArithmeticDomainError(f"{self.mantissa} is not a unit mod {self.p}")
        return PAdicApprox(self.p, pow(self.mantissa, -1, self.modulus), self.prec, self.acc)

    def divide_by_p(self, k=1):
        """
        Exact division by p^k; the accuracy drops by k.

        Raises:
            ArithmeticDomainError: If the valuation is below k
        """
        if k == 0:
            return self
        pk = self.p ** k
        if self.mantissa % pk != 0:
            raise ArithmeticDomainError(
                f"cannot divide {self.mantissa} by {self.p}^{k}: valuation too small")
        return PAdicApprox(self.p, self.mantissa // pk, self.prec, self.acc - k)

    def valuation(self):
        """Valuation of the mantissa, an AtLeast(prec) when the mantissa is 0."""
        if self.mantissa == 0:
            return AtLeast(self.prec)
        return int_val(self.mantissa, self.p)

    def lift(self):
        """Symmetric integer representative modulo p^acc."""
        return symmetric_lift(self.mantissa, self.p ** self.acc) if self.acc > 0 else 0

    def __repr__(self):
        return f"PAdicApprox({self.mantissa} mod {self.p}^{self.prec}, acc={self.acc})"


def padic_val(x: PAdicApprox):
    """min(v_p(mantissa), Mw), flagged as AtLeast(Mw) when the mantissa is 0."""
    return x.valuation()


# ---------------------------------------------------------------------------
# Dense polynomials over Q (coefficient lists, lowest degree first)
#
# Inner loops of the Delta tower and the fiber reduction; RatFunc uses sympy Poly.
# ---------------------------------------------------------------------------

def poly_trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def poly_add(a, b):
    n = max(len(a), len(b))
    return poly_trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def poly_sub(a, b):
    n = max(len(a), len(b))
    return poly_trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def poly_scale(a, c):
    if c == 0:
        return []
    return [c * x for x in a]


def poly_mul(a, b):
    if not a or not b:
        return []
    res = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            res[i + j] += x * y
    return poly_trim(res)


def poly_deriv(a):
    return poly_trim([i * a[i] for i in range(1, len(a))])


def poly_eval(a, x):
    acc = 0
    for c in reversed(a):
        acc = acc * x + c
    return acc


def poly_compose(a, g):
    """a(g(t)) by Horner's rule."""
    res = []
    for c in reversed(a):
        res = poly_add(poly_mul(res, g), [c])
    return res


def poly_divmod(a, b):
    """Quotient and remainder of a by a nonzero b."""
    b = poly_trim(b)
    if not b:
        raise ArithmeticDomainError("polynomial division by zero")
    a = [Fraction(x) for x in a]
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    lead = Fraction(b[-1])
    for k in range(len(a) - len(b), -1, -1):
        coef = a[k + len(b) - 1] / lead
        q[k] = coef
        if coef:
            for j, y in enumerate(b):
                a[k + j] -= coef * y
    return poly_trim(q), poly_trim(a[:len(b) - 1])


def poly_gauss_val(a, p):
    """Minimum coefficient valuation (Gauss valuation); INFINITY for the zero polynomial."""
    vals = [rational_val_p(c, p) for c in a if c != 0]
    return min(vals) if vals else INFINITY


def taylor_coefficients(num, den, n):
    """
    First n Taylor coefficients at 0 of num/den over Q.

    Raises:
        ArithmeticDomainError: If den(0) = 0
    """
    if not den or den[0] == 0:
        raise ArithmeticDomainError("pole at the expansion point")
    inv0 = 1 / Fraction(den[0])
    out = []
    for k in range(n):
        s = Fraction(num[k]) if k < len(num) else Fraction(0)
        for j in range(1, min(k, len(den) - 1) + 1):
            s -= den[j] * out[k - j]
        out.append(s * inv0)
    return out


def shift_polynomial(a, z):
    """Coefficients of a(z + u) as a polynomial in u."""
    return poly_compose(a, [Fraction(z), Fraction(1)])


# ---------------------------------------------------------------------------
# Truncated power series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncSeries:
    """
    A power series mod (p^prec, t^K), stored as dense mantissas (index i is t^i).

    The series shares one accuracy floor ``acc`` across its coefficients.
    """

    p: int
    prec: int
    coeffs: tuple
    acc: int

    def __post_init__(self):
        modulus = self.p ** self.prec
        object.__setattr__(self, "coeffs", tuple(c % modulus for c in self.coeffs))
        object.__setattr__(self, "acc", max(0, min(self.acc, self.prec)))

    @property
    def K(self):
        return len(self.coeffs)

    @property
    def modulus(self):
        return self.p ** self.prec

    @classmethod
    def zero(cls, p, prec, K):
        return cls(p, prec, (0,) * K, prec)

    @classmethod
    def constant(cls, value, p, prec, K):
        coeffs = [0] * K
        if K:
            coeffs[0] = to_residue(value, p, prec)
        return cls(p, prec, tuple(coeffs), prec)

    @classmethod
    def from_rationals(cls, values, p, prec, K):
        """Series whose first coefficients are the given p-integral rationals."""
        coeffs = [0] * K
        for i, value in enumerate(values[:K]):
            coeffs[i] = to_residue(value, p, prec)
        return cls(p, prec, tuple(coeffs), prec)

    def coefficient(self, i):
        """Coefficient of t^i as a PAdicApprox."""
        return PAdicApprox(self.p, self.coeffs[i], self.prec, self.acc)

    def _check(self, other):
        if (other.p, other.prec, other.K) != (self.p, self.prec, self.K):
            raise ArithmeticDomainError("mismatched (p, Mw, K) in series arithmetic")

    def _new(self, coeffs, acc=None):
        return TruncSeries(self.p, self.prec, tuple(coeffs), self.acc if acc is None else acc)

    def __add__(self, other):
        self._check(other)
        return self._new([a + b for a, b in zip(self.coeffs, other.coeffs)], min(self.acc, other.acc))

    def __sub__(self, other):
        self._check(other)
        return self._new([a - b for a, b in zip(self.coeffs, other.coeffs)], min(self.acc, other.acc))

    def __neg__(self):
        return self._new([-a for a in self.coeffs])

    def scale(self, c):
        """Multiply by an integer (or p-integral rational) constant."""
        if isinstance(c, Fraction):
            c = to_residue(c, self.p, self.prec)
        return self._new([c * a for a in self.coeffs])

    def __mul__(self, other):
        if not isinstance(other, TruncSeries):
            return self.scale(other)
        self._check(other)
        K = self.K
        modulus = self.modulus
        res = [0] * K
        a_coeffs, b = self.coeffs, other.coeffs
        # loop over the sparser factor
        if sum(1 for x in b if x) < sum(1 for x in a_coeffs if x):
            a_coeffs, b = b, a_coeffs
        for i, a in enumerate(a_coeffs):
            if a == 0:
                continue
            res[i:] = [x + a * y for x, y in zip(res[i:], b[:K - i])]
        return self._new([x % modulus for x in res], min(self.acc, other.acc))

    def derivative(self):
        """d/dt; the top coefficient of the truncated result is unknown and set to 0."""
        c = self.coeffs
        return self._new([i * c[i] for i in range(1, self.K)] + [0])

    def inverse(self):
        """
        Multiplicative inverse of a series with unit constant term.

        Raises:
            ArithmeticDomainError: If the constant term is not a unit
        """
        c = self.coeffs
        if not c or c[0] % self.p == 0:
            raise ArithmeticDomainError("series inverse needs a unit constant term")
        modulus = self.modulus
        inv0 = pow(c[0], -1, modulus)
        out = [inv0]
        for k in range(1, self.K):
            s = 0
            for j in range(1, k + 1):
                if c[j]:
                    s += c[j] * out[k - j]
            out.append(-s * inv0 % modulus)
        return self._new(out)

    def frobenius_substitute(self, K=None, p=None):
        """sum a_i t^i -> sum a_i t^(p i), truncated at K (default: same K)."""
        K = self.K if K is None else K
        p = self.p if p is None else p
        out = [0] * K
        for i, a in enumerate(self.coeffs):
            if p * i >= K:
                break
            out[p * i] = a
        return TruncSeries(self.p, self.prec, tuple(out), self.acc)

    def mul_linear(self, z):
        """Multiply by (t - z) for a p-integral rational z."""
        zr = to_residue(z, self.p, self.prec)
        c = self.coeffs
        return self._new([(c[i - 1] if i else 0) - zr * c[i] for i in range(self.K)])

    def div_linear(self, z):
        """Divide by (t - z); requires z to be a p-adic unit."""
        zr = to_residue(z, self.p, self.prec)
        if zr % self.p == 0:
            raise ArithmeticDomainError("(t - z) is not invertible in the series ring")
        inv = pow(-zr, -1, self.modulus)
        out = []
        prev = 0
        for a in self.coeffs:
            prev = (a - prev) * inv % self.modulus
            out.append(prev)
        return self._new(out)

    def shift(self, k):
        """Multiply by t^k."""
        return self._new(([0] * k + list(self.coeffs))[:self.K])

    def divide_by_p(self, k):
        """Exact division by p^k of every coefficient; the accuracy drops by k."""
        if k == 0:
            return self
        pk = self.p ** k
        if any(c % pk for c in self.coeffs):
            raise ArithmeticDomainError(f"series not divisible by {self.p}^{k}")
        return self._new([c // pk for c in self.coeffs], self.acc - k)

    def reduce(self, m):
        """The same series viewed modulo p^m (m <= prec)."""
        return TruncSeries(self.p, m, self.coeffs, min(self.acc, m))

    def truncate(self, K):
        return TruncSeries(self.p, self.prec, self.coeffs[:K], self.acc)

    def valuation(self, upto=None):
        """Minimum coefficient valuation over degrees < upto; AtLeast(prec) if all vanish."""
        vals = [int_val(c, self.p) for c in self.coeffs[:upto] if c]
        return min(vals) if vals else AtLeast(self.prec)

    def degree(self):
        """Index of the last nonzero coefficient, -1 for the zero series."""
        for i in range(self.K - 1, -1, -1):
            if self.coeffs[i]:
                return i
        return -1


_SERIES_OPS = {
    "add": lambda f, g: f + g,
    "sub": lambda f, g: f - g,
    "mul": lambda f, g: f * g,
    "derivative": lambda f, _: f.derivative(),
    "inverse": lambda f, _: f.inverse(),
    "frobenius_substitute": lambda f, K: f.frobenius_substitute(K),
}

_SCALAR_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "inverse": lambda a, _: a.inverse(),
    "divide_by_p": lambda a, k: a.divide_by_p(1 if k is None else k),
}


def series_ops(f: TruncSeries, g=None, op: str = "mul") -> TruncSeries:
    """
    Dispatch a series operation.

    Binary ops ('add', 'sub', 'mul') take a second series ``g``. The unary ops
    'derivative' and 'inverse' ignore it, and 'frobenius_substitute' reads it as
    the output truncation order (None keeps K).
    """
    try:
        fn = _SERIES_OPS[op]
    except KeyError:
        raise ValueError(f"unknown series operation: {op}") from None
    return fn(f, g)


def scalar_ring_ops(a: PAdicApprox, b=None, op: str = "mul") -> PAdicApprox:
    """
    Dispatch a scalar operation: 'add', 'sub', 'mul', 'inverse' (of a unit) or
    'divide_by_p', where ``b`` is the exponent k (default 1).
    """
    try:
        fn = _SCALAR_OPS[op]
    except KeyError:
        raise ValueError(f"unknown scalar operation: {op}") from None
    return fn(a, b)


@dataclass(frozen=True)
class SeriesMatrix:
    """Square matrix of TruncSeries with uniform (p, Mw, K)."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.rows)
        if any(len(row) != len(rows) for row in rows):
            raise ArithmeticDomainError("series matrices must be square")
        object.__setattr__(self, "rows", rows)

    @property
    def r(self):
        return len(self.rows)

    @property
    def p(self):
        return self.rows[0][0].p

    @property
    def prec(self):
        return self.rows[0][0].prec

    @property
    def K(self):
        return self.rows[0][0].K

    @property
    def acc(self):
        return min(e.acc for row in self.rows for e in row)

    def entry(self, i, j):
        return self.rows[i][j]

    @classmethod
    def identity(cls, r, p, prec, K):
        return cls(tuple(tuple(TruncSeries.constant(1 if i == j else 0, p, prec, K) for j in range(r))
                         for i in range(r)))

    @classmethod
    def constant(cls, matrix, p, prec, K):
        """Constant series matrix from integer/rational or PAdicApprox entries."""
        def lift(x):
            if isinstance(x, PAdicApprox):
                s = TruncSeries.constant(0, p, prec, K)
                coeffs = list(s.coeffs)
                if K:
                    coeffs[0] = x.mantissa
                return TruncSeries(p, prec, tuple(coeffs), x.acc)
            return TruncSeries.constant(x, p, prec, K)
        return cls(tuple(tuple(lift(x) for x in row) for row in matrix))

    def map(self, fn):
        return SeriesMatrix(tuple(tuple(fn(e) for e in row) for row in self.rows))

    def __add__(self, other):
        return SeriesMatrix(tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.rows, other.rows)))

    def __sub__(self, other):
        return SeriesMatrix(tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(self.rows, other.rows)))

    def __mul__(self, other):
        if not isinstance(other, SeriesMatrix):
            return self.map(lambda e: e.scale(other))
        r = self.r
        out = []
        for i in range(r):
            row = []
            for j in range(r):
                acc = self.rows[i][0] * other.rows[0][j]
                for k in range(1, r):
                    acc = acc + self.rows[i][k] * other.rows[k][j]
                row.append(acc)
            out.append(tuple(row))
        return SeriesMatrix(tuple(out))

    def derivative(self):
        return self.map(lambda e: e.derivative())

    def frobenius_substitute(self, K=None):
        return self.map(lambda e: e.frobenius_substitute(K))

    def reduce(self, m):
        return self.map(lambda e: e.reduce(m))

    def shift(self, k):
        return self.map(lambda e: e.shift(k))

    def divide_by_p(self, k):
        return self.map(lambda e: e.divide_by_p(k))

    def constant_term(self):
        """The matrix of t^0 coefficients as PAdicApprox entries."""
        return tuple(tuple(e.coefficient(0) for e in row) for row in self.rows)

    def valuation(self, upto=None):
        """Entrywise minimum valuation."""
        return min(e.valuation(upto) for row in self.rows for e in row)

    def inverse(self):
        """
        Inverse by Gauss-Jordan elimination with unit pivots.

        Raises:
            ArithmeticDomainError: If the constant-term matrix is singular mod p
        """
        r = self.r
        p, prec, K = self.p, self.prec, self.K
        a = [list(row) for row in self.rows]
        b = [list(row) for row in SeriesMatrix.identity(r, p, prec, K).rows]
        for col in range(r):
            pivot = next((i for i in range(col, r) if a[i][col].coeffs[0] % p), None)
            if pivot is None:
                raise ArithmeticDomainError("series matrix is not invertible (singular mod p)")
            a[col], a[pivot] = a[pivot], a[col]
            b[col], b[pivot] = b[pivot], b[col]
            inv = a[col][col].inverse()
            a[col] = [e * inv for e in a[col]]
            b[col] = [e * inv for e in b[col]]
            for i in range(r):
                if i != col and any(a[i][col].coeffs):
                    factor = a[i][col]
                    a[i] = [x - factor * y for x, y in zip(a[i], a[col])]
                    b[i] = [x - factor * y for x, y in zip(b[i], b[col])]
        return SeriesMatrix(tuple(tuple(row) for row in b))


# ---------------------------------------------------------------------------
# Rational functions over Q
# ---------------------------------------------------------------------------

def _to_sympy_rational(q):
    q = Fraction(q)
    return sym.Rational(q.numerator, q.denominator)


def _to_fraction(c):
    c = sym.Rational(c)
    return Fraction(int(c.p), int(c.q))


def poly_from_coeffs(coeffs):
    """sympy Poly in t over QQ from a low-to-high coefficient list."""
    coeffs = poly_trim(coeffs)
    if not coeffs:
        return sym.Poly(0, T, domain=QQ)
    return sym.Poly([_to_sympy_rational(c) for c in reversed(coeffs)], T, domain=QQ)


def poly_coeffs(poly):
    """Low-to-high Fraction coefficients of a sympy Poly (empty for 0)."""
    if poly.is_zero:
        return []
    return [_to_fraction(c) for c in reversed(poly.all_coeffs())]


def rational_roots(poly):
    """
    Rational roots (with multiplicity) of a nonzero polynomial over Q.

    Returns:
        tuple: (sorted list of (root, multiplicity), True if the polynomial splits over Q)
    """
    if poly.degree() <= 0:
        return [], True
    _, factors = poly.factor_list()
    roots = {}
    splits = True
    for factor, mult in factors:
        if factor.degree() == 1:
            a, b = factor.all_coeffs()
            root = -_to_fraction(b) / _to_fraction(a)
            roots[root] = roots.get(root, 0) + mult
        else:
            splits = False
    return sorted(roots.items()), splits


@dataclass(frozen=True)
class RatFunc:
    """
    A rational function num/den over Q in lowest terms with a monic denominator.
    """

    num: sym.Poly
    den: sym.Poly

    def __post_init__(self):
        num, den = self.num, self.den
        if den.is_zero:
            raise ArithmeticDomainError("zero denominator")
        if num.is_zero:
            num, den = sym.Poly(0, T, domain=QQ), sym.Poly(1, T, domain=QQ)
        else:
            g = num.gcd(den)
            if g.degree() > 0:
                num = num.exquo(g)
                den = den.exquo(g)
            lc = den.LC()
            num = num.quo_ground(lc)
            den = den.quo_ground(lc)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_coeffs(cls, num, den=(1,)):
        return cls(poly_from_coeffs(num), poly_from_coeffs(den))

    @classmethod
    def const(cls, value):
        return cls.from_coeffs([Fraction(value)])

    @classmethod
    def t(cls):
        return cls.from_coeffs([0, 1])

    @classmethod
    def linear(cls, z):
        """t - z."""
        return cls.from_coeffs([-Fraction(z), 1])

    @classmethod
    def from_expr(cls, expr):
        """
        Build from a sympy expression in t.

        Raises:
            UnsupportedInputError: If the expression is not a rational function of t over Q
        """
        expr = sym.sympify(expr)
        extra = expr.free_symbols - {T}
        if extra:
            raise UnsupportedInputError(f"unexpected symbols {sorted(map(str, extra))}")
        num, den = sym.fraction(sym.cancel(sym.together(expr)))
        try:
            return cls(sym.Poly(num, T, domain=QQ), sym.Poly(den, T, domain=QQ))
        except (sym.PolynomialError, sym.CoercionFailed) as e:
            raise UnsupportedInputError(f"not a rational function over Q: {expr} ({str(e)})")

    @classmethod
    def parse(cls, text):
        """Parse a string such as '(t+3)/(2*t^2-8)'."""
        try:
            expr = sym.sympify(text.replace("^", "**"), locals={"t": T})
        except (sym.SympifyError, SyntaxError, TypeError) as e:
            raise UnsupportedInputError(f"cannot parse rational function '{text}': {str(e)}")
        return cls.from_expr(expr)

    # -- arithmetic ---------------------------------------------------------

    @staticmethod
    def coerce(value):
        if isinstance(value, RatFunc):
            return value
        return RatFunc.const(value)

    def __add__(self, other):
        other = RatFunc.coerce(other)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other):
        other = RatFunc.coerce(other)
        return RatFunc(self.num * other.den - other.num * self.den, self.den * other.den)

    def __rsub__(self, other):
        return RatFunc.coerce(other) - self

    def __neg__(self):
        return RatFunc(-self.num, self.den)

    def __mul__(self, other):
        other = RatFunc.coerce(other)
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = RatFunc.coerce(other)
        if other.is_zero:
            raise ArithmeticDomainError("division by the zero rational function")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __pow__(self, k):
        if k < 0:
            return RatFunc.const(1) / self ** (-k)
        return RatFunc(self.num ** k, self.den ** k)

    @property
    def is_zero(self):
        return self.num.is_zero

    @property
    def is_polynomial(self):
        return self.den.degree() == 0

    def derivative(self):
        return RatFunc(self.num.diff(T) * self.den - self.num * self.den.diff(T), self.den ** 2)

    def compose(self, g):
        """f(g(t)) for a polynomial g (sympy Poly or coefficient list)."""
        if not isinstance(g, sym.Poly):
            g = poly_from_coeffs(g)
        return RatFunc(self.num.compose(g), self.den.compose(g))

    # -- evaluation and local data ------------------------------------------

    def has_pole_at(self, z):
        return self.den.eval(_to_sympy_rational(z)) == 0

    def evaluate(self, z):
        """
        Exact value at a rational point.

        Raises:
            ArithmeticDomainError: At a pole
        """
        zq = _to_sympy_rational(z)
        d = self.den.eval(zq)
        if d == 0:
            raise ArithmeticDomainError(f"pole at t = {z}")
        return _to_fraction(self.num.eval(zq)) / _to_fraction(d)

    def order_at(self, z):
        """ord_z as an integer (negative for poles), INFINITY for the zero function."""
        if self.is_zero:
            return INFINITY
        lin = sym.Poly(T - _to_sympy_rational(z), T, domain=QQ)
        return _multiplicity(self.num, lin) - _multiplicity(self.den, lin)

    def order_at_infinity(self):
        """ord_infinity in the coordinate s = 1/t."""
        if self.is_zero:
            return INFINITY
        return self.den.degree() - self.num.degree()

    def gauss_valuation(self, p):
        """v_p of the Gauss norm: content valuation of num minus that of den."""
        if self.is_zero:
            return INFINITY
        return poly_gauss_val(poly_coeffs(self.num), p) - poly_gauss_val(poly_coeffs(self.den), p)

    def laurent_coefficient(self, z, k):
        """Coefficient of (t - z)^k in the Laurent expansion at z."""
        num = shift_polynomial(poly_coeffs(self.num), z)
        den = shift_polynomial(poly_coeffs(self.den), z)
        e = 0
        while den and den[0] == 0:
            den = den[1:]
            e += 1
        index = k + e
        if index < 0:
            return Fraction(0)
        return taylor_coefficients(num, den, index + 1)[index]

    def poles(self):
        """
        Finite poles as sorted rationals.

        Raises:
            UnsupportedInputError: If the denominator has irrational roots
        """
        roots, splits = rational_roots(self.den)
        if not splits:
            raise UnsupportedInputError(f"irrational singular points in denominator {self.den.as_expr()}")
        return [root for root, _ in roots]

    def numerator_coeffs(self):
        return poly_coeffs(self.num)

    def denominator_coeffs(self):
        return poly_coeffs(self.den)

    def to_series(self, p, prec, K):
        return ratfunc_to_series(self, p, prec, K)

    def __str__(self):
        return str(sym.factor(self.num.as_expr() / self.den.as_expr()))


def _multiplicity(poly, lin):
    m = 0
    while not poly.is_zero and poly.rem(lin).is_zero:
        poly = poly.quo(lin)
        m += 1
    return m


def ratfunc_to_series(f: RatFunc, p: int, prec: int, K: int) -> TruncSeries:
    """
    First K Taylor coefficients of f at t = 0 reduced mod p^prec.

    Raises:
        ArithmeticDomainError: If f has a pole at 0 or a coefficient denominator divisible by p
    """
    num = f.numerator_coeffs()
    den = f.denominator_coeffs()
    if den[0] == 0:
        raise ArithmeticDomainError("pole at t = 0")
    shift = poly_gauss_val(den, p)
    scale = Fraction(p) ** (-shift)
    den = [c * scale for c in den]
    num = [c * scale for c in num]
    if rational_val_p(den[0], p) != 0:
        raise ArithmeticDomainError(f"expansion at 0 has coefficients with unbounded {p}-adic denominators")
    if any(c and rational_val_p(c, p) < 0 for c in num):
        raise ArithmeticDomainError(f"Taylor coefficients have denominators divisible by {p}")
    modulus = p ** prec
    a = [to_residue(c, p, prec) for c in num]
    b = [to_residue(c, p, prec) for c in den]
    inv0 = pow(b[0], -1, modulus)
    out = []
    for k in range(K):
        s = a[k] if k < len(a) else 0
        for j in range(1, min(k, len(b) - 1) + 1):
            s -= b[j] * out[k - j]
        out.append(s * inv0 % modulus)
    return TruncSeries(p, prec, tuple(out), prec)


# ---------------------------------------------------------------------------
# Constant matrices over Q (tuples of Fraction rows)
# ---------------------------------------------------------------------------

def frac_matrix(rows):
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def frac_identity(r):
    return tuple(tuple(Fraction(int(i == j)) for j in range(r)) for i in range(r))


def frac_matmul(a, b):
    return tuple(tuple(sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0))
                       for j in range(len(b[0]))) for i in range(len(a)))


def frac_add(a, b):
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def frac_sub(a, b):
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def frac_scale(a, c):
    return tuple(tuple(Fraction(c) * x for x in row) for row in a)


def to_sympy_matrix(a):
    return sym.Matrix([[_to_sympy_rational(x) for x in row] for row in a])


def from_sympy_matrix(m):
    return tuple(tuple(_to_fraction(m[i, j]) for j in range(m.cols)) for i in range(m.rows))


def frac_det(a):
    return _to_fraction(to_sympy_matrix(a).det())


def frac_inverse(a):
    """
    Exact inverse of a rational matrix.

    Raises:
        ArithmeticDomainError: If the matrix is singular
    """
    if frac_det(a) == 0:
        raise ArithmeticDomainError("singular rational matrix")
    return from_sympy_matrix(to_sympy_matrix(a).inv())


def frac_matrix_val(a, p):
    """Entrywise minimum p-adic valuation; INFINITY for the zero matrix."""
    return min((rational_val_p(x, p) for row in a for x in row), default=INFINITY)


def frac_charpoly(a):
    """Characteristic polynomial det(x I - a) as a sympy Poly in t."""
    return sym.Poly(to_sympy_matrix(a).charpoly(T).as_expr(), T, domain=QQ)


def is_diagonal(a):
    return all(a[i][j] == 0 for i in range(len(a)) for j in range(len(a)) if i != j)


# ---------------------------------------------------------------------------
# Matrices of rational functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RatFuncMatrix:
    """Square matrix of RatFunc entries."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(RatFunc.coerce(e) for e in row) for row in self.rows)
        if any(len(row) != len(rows) for row in rows):
            raise ArithmeticDomainError("rational-function matrices must be square")
        object.__setattr__(self, "rows", rows)

    @property
    def r(self):
        return len(self.rows)

    def entry(self, i, j):
        return self.rows[i][j]

    def entries(self):
        return [e for row in self.rows for e in row]

    @classmethod
    def identity(cls, r):
        return cls(tuple(tuple(RatFunc.const(int(i == j)) for j in range(r)) for i in range(r)))

    @classmethod
    def zero(cls, r):
        return cls(tuple(tuple(RatFunc.const(0) for _ in range(r)) for _ in range(r)))

    @classmethod
    def diagonal(cls, entries):
        r = len(entries)
        return cls(tuple(tuple(entries[i] if i == j else RatFunc.const(0) for j in range(r))
                         for i in range(r)))

    @classmethod
    def constant(cls, matrix):
        return cls(tuple(tuple(RatFunc.const(x) for x in row) for row in matrix))

    @classmethod
    def parse(cls, rows):
        """Build from rows of strings such as '(t+1)/(t^2-4)'."""
        return cls(tuple(tuple(RatFunc.parse(s) for s in row) for row in rows))

    def map(self, fn):
        return RatFuncMatrix(tuple(tuple(fn(e) for e in row) for row in self.rows))

    @property
    def is_zero(self):
        return all(e.is_zero for e in self.entries())

    def __add__(self, other):
        return RatFuncMatrix(tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.rows, other.rows)))

    def __sub__(self, other):
        return RatFuncMatrix(tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(self.rows, other.rows)))

    def __neg__(self):
        return self.map(lambda e: -e)

    def __mul__(self, other):
        if not isinstance(other, RatFuncMatrix):
            other = RatFunc.coerce(other)
            return self.map(lambda e: e * other)
        r = self.r
        out = []
        for i in range(r):
            row = []
            for j in range(r):
                acc = RatFunc.const(0)
                for k in range(r):
                    acc = acc + self.rows[i][k] * other.rows[k][j]
                row.append(acc)
            out.append(tuple(row))
        return RatFuncMatrix(tuple(out))

    __rmul__ = __mul__

    def derivative(self):
        return self.map(lambda e: e.derivative())

    def compose(self, g):
        return self.map(lambda e: e.compose(g))

    def transpose(self):
        return RatFuncMatrix(tuple(zip(*self.rows)))

    def determinant(self):
        """Determinant by fraction-free cofactor expansion on small matrices."""
        rows = self.rows
        if self.r == 1:
            return rows[0][0]
        total = RatFunc.const(0)
        for j in range(self.r):
            if rows[0][j].is_zero:
                continue
            minor = RatFuncMatrix(tuple(tuple(row[:j] + row[j + 1:]) for row in rows[1:]))
            term = rows[0][j] * minor.determinant()
            total = total + term if j % 2 == 0 else total - term
        return total

    def inverse(self):
        """
        Inverse over the field Q(t) by Gauss-Jordan elimination.

        Raises:
            ArithmeticDomainError: If the determinant is zero
        """
        r = self.r
        a = [list(row) for row in self.rows]
        b = [list(row) for row in RatFuncMatrix.identity(r).rows]
        for col in range(r):
            pivot = next((i for i in range(col, r) if not a[i][col].is_zero), None)
            if pivot is None:
                raise ArithmeticDomainError("singular rational-function matrix")
            a[col], a[pivot] = a[pivot], a[col]
            b[col], b[pivot] = b[pivot], b[col]
            inv = RatFunc.const(1) / a[col][col]
            a[col] = [e * inv for e in a[col]]
            b[col] = [e * inv for e in b[col]]
            for i in range(r):
                if i != col and not a[i][col].is_zero:
                    factor = a[i][col]
                    a[i] = [x - factor * y for x, y in zip(a[i], a[col])]
                    b[i] = [x - factor * y for x, y in zip(b[i], b[col])]
        return RatFuncMatrix(tuple(tuple(row) for row in b))

    # -- local data ---------------------------------------------------------

    def evaluate(self, z):
        """Exact value at a rational point as a Fraction matrix."""
        return tuple(tuple(e.evaluate(z) for e in row) for row in self.rows)

    def order_at(self, z):
        """Minimum entry order at z (INFINITY for the zero matrix)."""
        return min(e.order_at(z) for e in self.entries())

    def order_at_infinity(self):
        return min(e.order_at_infinity() for e in self.entries())

    def gauss_valuation(self, p):
        """Entrywise minimum Gauss valuation."""
        return min(e.gauss_valuation(p) for e in self.entries())

    def laurent_coefficient(self, z, k):
        return tuple(tuple(e.laurent_coefficient(z, k) for e in row) for row in self.rows)

    def common_denominator(self):
        """
        Monic least common denominator d and numerator polynomials with self = P / d.

        Returns:
            tuple: (d as coefficient list, r x r tuple of coefficient lists)
        """
        den = sym.Poly(1, T, domain=QQ)
        for e in self.entries():
            den = den.lcm(e.den)
        den = den.monic()
        numerators = tuple(tuple(poly_coeffs(e.num * den.exquo(e.den)) for e in row) for row in self.rows)
        return poly_coeffs(den), numerators

    def poles(self):
        """Sorted finite poles of all entries."""
        d, _ = self.common_denominator()
        return RatFunc.from_coeffs([1], d).poles() if len(d) > 1 else []

    def to_series_matrix(self, p, prec, K):
        return SeriesMatrix(tuple(tuple(e.to_series(p, prec, K) for e in row) for row in self.rows))

    def __str__(self):
        return "[" + ", ".join("[" + ", ".join(str(e) for e in row) + "]" for row in self.rows) + "]"


def matrix_ops(a, b=None, op="mul", point=None, p=None):
    """
    Dispatch the shared matrix operations for SeriesMatrix and RatFuncMatrix.

    ``op`` is one of 'add', 'mul', 'inverse', 'evaluate' (RatFuncMatrix at ``point``)
    or 'valuation' (entrywise minimum; ``p`` is required for rational-function matrices).
    """
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "inverse":
        return a.inverse()
    if op == "evaluate":
        return a.evaluate(point)
    if op == "valuation":
        if isinstance(a, RatFuncMatrix):
            return a.gauss_valuation(p)
        if isinstance(a, SeriesMatrix):
            return a.valuation()
        return frac_matrix_val(a, p)
    raise ValueError(f"unknown matrix operation: {op}")


# ---------------------------------------------------------------------------
# Constant p-adic matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PAdicMatrix:
    """Square matrix of PAdicApprox entries sharing p and working precision."""

    rows: tuple

    @property
    def r(self):
        return len(self.rows)

    @property
    def p(self):
        return self.rows[0][0].p

    @property
    def prec(self):
        return self.rows[0][0].prec

    @property
    def acc(self):
        return min(e.acc for row in self.rows for e in row)

    @classmethod
    def from_integers(cls, matrix, p, prec, acc=None):
        return cls(tuple(tuple(PAdicApprox.from_rational(x, p, prec, acc) for x in row) for row in matrix))

    def lifted(self):
        """Integer matrix of symmetric representatives modulo p^acc."""
        return [[e.lift() for e in row] for row in self.rows]

    def determinant(self):
        d = sym.Matrix(self.lifted()).det()
        return PAdicApprox(self.p, int(d), self.prec, self.acc)

    def trace(self):
        total = self.rows[0][0]
        for i in range(1, self.r):
            total = total + self.rows[i][i]
        return total

    def valuation(self):
        return min(e.valuation() for row in self.rows for e in row)

    def inverse_valuation(self):
        """
        v_p of the inverse matrix: min v_p(adjugate) - v_p(det).

        Raises:
            ArithmeticDomainError: If the determinant vanishes to the known accuracy
        """
        lifted = sym.Matrix(self.lifted())
        det = int(lifted.det())
        if det % self.p ** self.acc == 0:
            raise ArithmeticDomainError("determinant vanishes to the known accuracy")
        adj = lifted.adjugate()
        adj_val = min(int_val(int(x), self.p) for x in adj)
        return min(adj_val, self.acc) - int_val(det, self.p)

    def charpoly_coefficients(self):
        """Integer coefficients [c_0, ..., c_r] of det(T I - Phi), reduced symmetrically mod p^acc."""
        poly = sym.Matrix(self.lifted()).charpoly(T)
        modulus = self.p ** self.acc
        return [symmetric_lift(int(c), modulus) for c in reversed(poly.all_coeffs())]

    def to_series_matrix(self, K):
        return SeriesMatrix.constant(self.rows, self.p, self.prec, K)

    def __str__(self):
        return "[" + ", ".join("[" + ", ".join(str(e.lift()) for e in row) + "]" for row in self.rows) + "]"
