"""Exact formal q-series engine and Fourier coefficient polynomials.

The theta series theta(t) = 1 + 2*sum_{n>=1} q^{n^2} (q = e^{-pi t}) is
manipulated here as a formal power series over Q.  The central objects are
the coefficient polynomials c_m(w) of theta(t)^w = 1 + sum c_m(w) q^m,
computed once as exact polynomials in the weight variable and reused by the
numerical layers.

Also here: the integer-coefficient companions c*_m(w) = (-1)^m m! c_m(-w),
the log-theta coefficients c'_m by closed divisor-sum formula, truncated
Dirichlet series values D_u(s), the Euler-product/multiplicativity check,
and the Bessel main term of the large-m asymptotics of c_m(-u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
from mpmath import mp

from .context import ConvergenceError, DEFAULT_CTX, EvalContext
from .exact import Rat, RationalPolynomial, rat_str


class QSeries:
    """Truncated power series sum_{m<=order} coeffs[m] q^m over Q.

    Arithmetic is exact; the truncation order is explicit and all binary
    operations truncate to the shorter order.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        self.coeffs = [Rat(c) for c in coeffs]
        if not self.coeffs:
            raise ValueError("series needs at least the constant term")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, m: int):
        return self.coeffs[m]

    def __eq__(self, other):
        return isinstance(other, QSeries) and self.coeffs == other.coeffs

    def truncate(self, order: int) -> "QSeries":
        return QSeries(self.coeffs[: order + 1])

    def __add__(self, other: "QSeries") -> "QSeries":
        n = min(self.order, other.order)
        return QSeries([self.coeffs[m] + other.coeffs[m] for m in range(n + 1)])

    def __sub__(self, other: "QSeries") -> "QSeries":
        n = min(self.order, other.order)
        return QSeries([self.coeffs[m] - other.coeffs[m] for m in range(n + 1)])

    def __mul__(self, other):
        if isinstance(other, QSeries):
            n = min(self.order, other.order)
            out = [Rat(0)] * (n + 1)
            for i, a in enumerate(self.coeffs[: n + 1]):
                if a == 0:
                    continue
                for j in range(0, n + 1 - i):
                    b = other.coeffs[j]
                    if b != 0:
                        out[i + j] += a * b
            return QSeries(out)
        return QSeries([c * Rat(other) for c in self.coeffs])

    __rmul__ = __mul__


def series_log(a: QSeries) -> QSeries:
    """log of a series with constant term 1 (exact, same order)."""
    if a.coeffs[0] != 1:
        raise ValueError("series_log needs constant term 1")
    n = a.order
    out = [Rat(0)] * (n + 1)
    for m in range(1, n + 1):
        acc = m * a.coeffs[m]
        for k in range(1, m):
            acc -= k * out[k] * a.coeffs[m - k]
        out[m] = acc / m
    return QSeries(out)


def series_exp(a: QSeries) -> QSeries:
    """exp of a series with constant term 0 (exact, same order)."""
    if a.coeffs[0] != 0:
        raise ValueError("series_exp needs constant term 0")
    n = a.order
    out = [Rat(0)] * (n + 1)
    out[0] = Rat(1)
    for m in range(1, n + 1):
        acc = Rat(0)
        for k in range(1, m + 1):
            if a.coeffs[k] != 0:
                acc += k * a.coeffs[k] * out[m - k]
        out[m] = acc / m
    return QSeries(out)


def series_inverse(a: QSeries) -> QSeries:
    """Multiplicative inverse of a series with nonzero constant term."""
    if a.coeffs[0] == 0:
        raise ValueError("series not invertible: zero constant term")
    n = a.order
    out = [Rat(0)] * (n + 1)
    out[0] = 1 / Rat(a.coeffs[0])
    for m in range(1, n + 1):
        acc = Rat(0)
        for k in range(1, m + 1):
            acc += a.coeffs[k] * out[m - k]
        out[m] = -acc * out[0]
    return QSeries(out)


def series_pow(a: QSeries, k: int) -> QSeries:
    """Integer power of a series (negative k allowed when invertible)."""
    if k < 0:
        return series_pow(series_inverse(a), -k)
    result = QSeries([Rat(1)] + [Rat(0)] * a.order)
    base = a
    while k:
        if k & 1:
            result = result * base
        base = base * base if k > 1 else base
        k >>= 1
    return result


def theta_qseries(order: int) -> QSeries:
    """theta as a q-series: 1 + 2q + 2q^4 + 2q^9 + ..."""
    coeffs = [Rat(0)] * (order + 1)
    coeffs[0] = Rat(1)
    n = 1
    while n * n <= order:
        coeffs[n * n] = Rat(2)
        n += 1
    return QSeries(coeffs)


# ---------------------------------------------------------------------------
# Coefficient polynomials c_m(w)
# ---------------------------------------------------------------------------

class _CPolyTable:
    """Grow-on-demand table of the exact polynomials c_m(w).

    theta^w = exp(w log theta), so c_m(w) = sum_j [q^m](log theta)^j / j! w^j.
    The powers (log theta)^j are accumulated incrementally, which costs
    O(M^3) rational operations for the table through order M and avoids the
    nested multinomials of the direct binomial expansion.
    """

    def __init__(self):
        self.order = -1
        self.polys: List[RationalPolynomial] = []

    def ensure(self, m: int) -> None:
        if m <= self.order:
            return
        order = max(m, 16, 2 * self.order)
        log_theta = series_log(theta_qseries(order))
        cols: List[List] = [[Rat(0)] * (order + 1) for _ in range(order + 1)]
        cols[0][0] = Rat(1)
        power = QSeries([Rat(1)] + [Rat(0)] * order)
        for j in range(1, order + 1):
            power = power * log_theta
            power = QSeries(
                [c / j for c in power.coeffs]
            )  # maintain (log theta)^j / j!
            col = cols[j]
            for mm in range(j, order + 1):
                col[mm] = power.coeffs[mm]
            if all(c == 0 for c in power.coeffs):
                break
        polys = []
        for mm in range(order + 1):
            polys.append(RationalPolynomial([cols[j][mm] for j in range(mm + 1)]))
        self.order = order
        self.polys = polys


_TABLE = _CPolyTable()


def c_poly(m: int) -> RationalPolynomial:
    """Exact coefficient polynomial c_m(w), degree m, lead 2^m/m!."""
    if m < 0:
        raise ValueError("m must be >= 0")
    _TABLE.ensure(m)
    return _TABLE.polys[m]


def c_over_w_poly(m: int) -> RationalPolynomial:
    """c_m(w)/w as a polynomial (well-defined; c_m(0) = 0 for m >= 1)."""
    if m == 0:
        raise ValueError("c_0 = 1 is not divisible by w")
    return c_poly(m).shift_down()


def c_star(m: int) -> RationalPolynomial:
    """c*_m(w) = (-1)^m m! c_m(-w); nonnegative integer coefficients."""
    if m < 1:
        raise ValueError("m must be >= 1")
    sign = -1 if m % 2 else 1
    fact = math.factorial(m)
    return c_poly(m).subst_negate() * Rat(sign * fact)


def sigma_minus_one(m: int) -> "Rat":
    """sum of reciprocals of divisors for integral m >= 1, else 0."""
    if m < 1 or int(m) != m:
        return Rat(0)
    m = int(m)
    acc = Rat(0)
    d = 1
    while d * d <= m:
        if m % d == 0:
            acc += Rat(1, d)
            if d != m // d:
                acc += Rat(1, m // d)
        d += 1
    return acc


def c_prime(m: int):
    """q^m coefficient of log theta: 2s_{-1}(m) - 5s_{-1}(m/2) + 2s_{-1}(m/4)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    val = 2 * sigma_minus_one(m)
    if m % 2 == 0:
        val -= 5 * sigma_minus_one(m // 2)
    if m % 4 == 0:
        val += 2 * sigma_minus_one(m // 4)
    return val


def c_tilde_exact(m: int, w) -> "Rat":
    """Normalized coefficient c~_m(w) = c_m(w)/(2w) at an exact rational w.

    At w = 0 the derivative convention c~_m(0) = c'_m / 2 applies (the
    generic division is singular there).
    """
    w = Rat(w)
    p = c_over_w_poly(m)
    return p.eval_rat(w) / 2


# ---------------------------------------------------------------------------
# Dirichlet series values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirichletValue:
    value: object          # mpc
    tail_bound: object     # mpf, a priori bound on the dropped tail
    terms: int


def _c_values_at(u, m_max: int, prec: int) -> List:
    """Numeric c_m(u) for 1 <= m <= m_max via floating series exponentiation."""
    with mp.workprec(prec + 20):
        uu = mpmath.mpf(u) if not isinstance(u, (mpmath.mpf, mpmath.mpc)) else u
        log_theta = series_log(theta_qseries(m_max))
        a = [uu * mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator)
             for c in log_theta.coeffs]
        out = [mpmath.mpf(0)] * (m_max + 1)
        out[0] = mpmath.mpf(1)
        for m in range(1, m_max + 1):
            acc = mpmath.mpf(0)
            for k in range(1, m + 1):
                if a[k]:
                    acc += k * a[k] * out[m - k]
            out[m] = acc / m
        return out


def dirichlet_D(u, s, ctx: EvalContext = DEFAULT_CTX,
                m_max: Optional[int] = None) -> DirichletValue:
    """Truncated Dirichlet series D_u(s) = sum_m c_m(u) m^{-s}, u >= 0 real.

    The reported tail bound uses the explicit coefficient estimates
    |c_m(u)| <= 24 m^{u/2} (m >= 2) and |c_m(u)| <= 6u m^{u/2+1}; it closes
    only for Re(s) > u/2 + 1.  The bounds are far from sharp, so for tight
    tolerances pass m_max and read the achieved tail_bound off the result.
    """
    u = float(u)
    if u < 0:
        raise ValueError("dirichlet_D is defined for real u >= 0")
    with mp.workprec(ctx.precision_bits + 20):
        s = mpmath.mpc(s)
        sigma = float(mp.re(s))
        e1 = u / 2.0 - sigma          # exponent for the 24 m^{u/2} bound
        e2 = u / 2.0 + 1.0 - sigma    # exponent for the 6u bound
        if e1 >= -1.0:
            raise ConvergenceError(
                "tail bound needs Re(s) > u/2 + 1 (got Re(s)=%g, u=%g)"
                % (sigma, u)
            )

        def tail(M: float):
            b1 = 24.0 * M ** (e1 + 1.0) / (-(e1 + 1.0))
            b2 = 6.0 * u * M ** (e2 + 1.0) / (-(e2 + 1.0)) if e2 < -1.0 else b1
            return min(b1, b2)

        if m_max is None:
            m_max = 64
            while tail(m_max) > ctx.tol and m_max < ctx.max_terms:
                m_max *= 2
            m_max = min(m_max, ctx.max_terms)
        cs = _c_values_at(u, m_max, ctx.precision_bits)
        total = mpmath.mpc(0)
        for m in range(1, m_max + 1):
            if cs[m]:
                total += cs[m] * mpmath.power(m, -s)
        return DirichletValue(value=total,
                              tail_bound=mpmath.mpf(tail(m_max)),
                              terms=m_max)


# ---------------------------------------------------------------------------
# Euler products
# ---------------------------------------------------------------------------

def _chi4(m: int) -> int:
    if m % 2 == 0:
        return 0
    return 1 if m % 4 == 1 else -1


def _sigma_k(m: int, k: int) -> int:
    acc = 0
    d = 1
    while d * d <= m:
        if m % d == 0:
            acc += d ** k
            if d != m // d:
                acc += (m // d) ** k
        d += 1
    return acc


def _closed_form_coefficient(w: int, m: int):
    """Known Dirichlet coefficient of the normalized series at w in {0,1,2,4,6,8}.

    w=0:  coefficient of (1-2^{1-s})/(1-2^{-s}) prod_{p odd}(1-p^{-s})^{-1}(1-p^{-1-s})^{-1}
          which equals c'_m/2 by the closed divisor-sum formula,
    w=1:  indicator of perfect squares (zeta(2s)),
    w=2:  sum_{d|m} chi_{-4}(d)   (zeta(s) L(s, chi_{-4})),
    w=4:  sigma(m) - 4 sigma(m/4)   ((1-4*2^{-2s}) zeta(s) zeta(s-1)),
    w=6:  (4/3) sum_{de=m} chi(e) d^2 - (1/3) sum_{de=m} chi(d) d^2,
    w=8:  sigma_3(m) - 2 sigma_3(m/2) + 16 sigma_3(m/4).
    """
    if w == 0:
        return c_prime(m) / 2
    if w == 1:
        r = math.isqrt(m)
        return Rat(1 if r * r == m else 0)
    if w == 2:
        return Rat(sum(_chi4(d) for d in range(1, m + 1) if m % d == 0))
    if w == 4:
        val = _sigma_k(m, 1)
        if m % 4 == 0:
            val -= 4 * _sigma_k(m // 4, 1)
        return Rat(val)
    if w == 6:
        a = sum(_chi4(m // d) * d * d for d in range(1, m + 1) if m % d == 0)
        b = sum(_chi4(d) * (m // d) ** 2 for d in range(1, m + 1) if m % d == 0)
        return Rat(4, 3) * a - Rat(1, 3) * b
    if w == 8:
        val = _sigma_k(m, 3)
        if m % 2 == 0:
            val -= 2 * _sigma_k(m // 2, 3)
        if m % 4 == 0:
            val += 16 * _sigma_k(m // 4, 3)
        return Rat(val)
    raise ValueError("no closed form stored for w=%r" % (w,))


CLOSED_FORM_W = (0, 1, 2, 4, 6, 8)
EULER_PRODUCT_W = (0, 1, 2, 4, 8)


@dataclass
class EulerReport:
    w: object
    m_max: int
    multiplicative: bool
    first_counterexample: Optional[Tuple[int, int]]
    closed_form_checked: bool
    closed_form_ok: Optional[bool]
    first_closed_form_mismatch: Optional[int] = None

    @property
    def passed(self) -> bool:
        ok = self.multiplicative
        if self.closed_form_checked:
            ok = ok and bool(self.closed_form_ok)
        return ok


def euler_check(w, m_max: int = 100) -> EulerReport:
    """Test multiplicativity of c~_m(w) on coprime pairs up to m_max.

    For w in {0, 1, 2, 4, 8} the coefficients are additionally matched
    against the stored closed forms (for w = 6 the linear combination of
    the two chi_{-4} series is matched even though it is not an Euler
    product).  Exact rational arithmetic throughout.
    """
    if m_max < 6:
        raise ValueError("m_max must be >= 6 to see the c2*c3 = c6 test")
    w = Rat(w)
    c_poly(m_max)  # build table once
    ct = [None] + [c_tilde_exact(m, w) for m in range(1, m_max + 1)]
    first = None
    for a in range(2, m_max + 1):
        if first:
            break
        for b in range(a + 1, m_max // a + 1):
            if math.gcd(a, b) == 1 and ct[a] * ct[b] != ct[a * b]:
                first = (a, b)
                break
    is_int = (w.denominator == 1) if hasattr(w, "denominator") else False
    wi = int(w) if is_int and 0 <= w <= 8 else None
    closed_checked = wi in CLOSED_FORM_W
    closed_ok = None
    first_mismatch = None
    if closed_checked:
        closed_ok = True
        for m in range(1, m_max + 1):
            if ct[m] != _closed_form_coefficient(wi, m):
                closed_ok = False
                first_mismatch = m
                break
    return EulerReport(
        w=w,
        m_max=m_max,
        multiplicative=first is None,
        first_counterexample=first,
        closed_form_checked=closed_checked,
        closed_form_ok=closed_ok,
        first_closed_form_mismatch=first_mismatch,
    )


# ---------------------------------------------------------------------------
# Bessel main term of c_m(-u)
# ---------------------------------------------------------------------------

def bessel_main_term(u, m: int, ctx: EvalContext = DEFAULT_CTX):
    """Main term (-1)^m 2 pi u^{u/2} (4m)^{-(u+1)} I_{u+1}(pi sqrt(um)).

    The dropped error term is exponentially smaller than the main term as
    m grows, so c_m(-u)/main -> 1.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    with mp.workprec(ctx.precision_bits + 20):
        uu = mpmath.mpf(u)
        if uu <= 0:
            raise ValueError("u must be positive")
        sign = -1 if m % 2 else 1
        val = (2 * mp.pi * uu ** (uu / 2) * mpmath.power(4 * m, -(uu + 1))
               * mpmath.besseli(uu + 1, mp.pi * mp.sqrt(uu * m)))
        return sign * val


def c_value_exact(m: int, w) -> "Rat":
    """Exact value c_m(w) at a rational weight (via the polynomial table)."""
    return c_poly(m).eval_rat(Rat(w))


def coefficient_rows(m_max: int):
    """Rows (m, coefficients of c*_m) for CSV export."""
    c_poly(m_max)
    for m in range(1, m_max + 1):
        yield m, [rat_str(c) for c in c_star(m).coeffs]
