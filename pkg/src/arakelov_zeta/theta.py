"""Theta function, its powers and logarithmic derivatives, and kernels.

theta(t) = sum_{n in Z} e^{-pi n^2 t} on t > 0, with the transformation
law theta(t) = theta(1/t)/sqrt(t) used below t = 1 so that series are only
ever summed at arguments >= 1.  On top of it: the Jacobi theta ϑ3(z, q) and
its triple-product form, the characteristic-function kernel
f(r) = theta(1) e^{r/2} / theta(e^{-2r}), the Fourier-Laplace kernel
gamma(w, z) = (d^2/dz^2 + w d/dz) h(w, z), the log-theta derivatives R_k at
t = 1 (numeric and exact in Q[psi2]), and norm-form theta series of
imaginary quadratic fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import mpmath
from mpmath import mp

from .context import (DEFAULT_CTX, DomainError, EvalContext, TruncationError)
from .exact import PsiPolynomial, Rat, TriPolynomial, psi2_numeric
from .qseries import c_over_w_poly, c_prime


@dataclass(frozen=True)
class ThetaValue:
    """A theta value together with the bound on the dropped series tail."""

    value: object
    truncation_error_bound: object

    def __float__(self):
        return float(self.value)


def _tail_bound(N: int, t):
    # sum_{n > N} 2 e^{-pi n^2 t} <= 2 e^{-pi (N+1)^2 t} / (1 - e^{-pi (2N+3) t})
    lead = 2 * mp.e ** (-mp.pi * (N + 1) ** 2 * t)
    ratio = mp.e ** (-mp.pi * (2 * N + 3) * t)
    return lead / (1 - ratio)


def theta_minus_one(t, ctx: EvalContext = DEFAULT_CTX):
    """theta(t) - 1 = 2 sum_{n>=1} e^{-pi n^2 t} with full relative accuracy.

    For t < 1 the transformation law gives theta(1/t)/sqrt(t) - 1, where the
    subtraction is harmless because the value is large.
    Returns (value, tail_bound).
    """
    t = mpmath.mpf(t)
    if t <= 0:
        raise DomainError("theta requires t > 0")
    if t < 1:
        big, bound = theta_minus_one(1 / t, ctx)
        rt = mp.sqrt(t)
        return (big + 1) / rt - 1, bound / rt
    tol = ctx.mpf_tol()
    acc = mpmath.mpf(0)
    n = 1
    while True:
        acc += 2 * mp.e ** (-mp.pi * n * n * t)
        bound = _tail_bound(n, t)
        if bound < tol:
            return acc, bound
        if n > ctx.max_terms:
            raise TruncationError("theta series needs more than max_terms terms")
        n += 1


def theta(t, ctx: EvalContext = DEFAULT_CTX) -> ThetaValue:
    """theta(t) = 1 + 2 sum e^{-pi n^2 t} for t > 0, to ctx.tol."""
    with ctx.workprec(16):
        val, bound = theta_minus_one(t, ctx)
        return ThetaValue(value=val + 1, truncation_error_bound=bound)


_THETA1 = {}


def theta_one(prec: int):
    """theta(1) = pi^{1/4} / Gamma(3/4), computed from the series."""
    v = _THETA1.get(prec)
    if v is None:
        ctx = EvalContext(precision_bits=prec + 16,
                          tol=float(mpmath.mpf(2) ** (-prec - 8)))
        with mp.workprec(prec + 16):
            v = theta(1, ctx).value
        _THETA1[prec] = v
    return v


def jacobi_theta3(z, q, ctx: EvalContext = DEFAULT_CTX):
    """ϑ3(z, q) = sum_{n in Z} e^{2 pi i n z} q^{n^2}, |q| < 1."""
    with ctx.workprec(16):
        z = mpmath.mpc(z)
        q = mpmath.mpc(q)
        if abs(q) >= 1:
            raise DomainError("jacobi_theta3 requires |q| < 1")
        tol = ctx.mpf_tol()
        e_plus = mp.e ** (2j * mp.pi * z)
        e_minus = 1 / e_plus
        acc = mpmath.mpc(1)
        qn = mpmath.mpc(1)       # q^{n^2}
        pp = mpmath.mpc(1)       # e^{2 pi i n z}
        pm = mpmath.mpc(1)
        aq = abs(q)
        grow = max(abs(e_plus), abs(e_minus))
        n = 0
        while True:
            n += 1
            qn *= q ** (2 * n - 1)
            pp *= e_plus
            pm *= e_minus
            acc += qn * (pp + pm)
            # the term ratio is eventually |q|^{2n+1} * growth < 1; once it is
            # below 1/2 the tail is bounded by the next term's size
            ratio = aq ** (2 * n + 1) * grow
            nxt = aq ** ((n + 1) ** 2) * (abs(pp) + abs(pm)) * grow
            if ratio < mpmath.mpf(1) / 2 and 2 * nxt < tol:
                break
            if n > ctx.max_terms:
                raise TruncationError("theta3 series exceeded max_terms")
        return acc


def triple_product(z, q, ctx: EvalContext = DEFAULT_CTX):
    """Product form prod (1-q^{2n})(1+e^{2 pi i z}q^{2n-1})(1+e^{-2 pi i z}q^{2n-1})."""
    with ctx.workprec(16):
        z = mpmath.mpc(z)
        q = mpmath.mpc(q)
        if abs(q) >= 1:
            raise DomainError("triple_product requires |q| < 1")
        tol = ctx.mpf_tol()
        e_plus = mp.e ** (2j * mp.pi * z)
        e_minus = 1 / e_plus
        acc = mpmath.mpc(1)
        aq = abs(q)
        n = 0
        while True:
            n += 1
            q2n = q ** (2 * n)
            qodd = q ** (2 * n - 1)
            acc *= (1 - q2n) * (1 + e_plus * qodd) * (1 + e_minus * qodd)
            # |log of the remaining product| is geometrically bounded
            rem = (aq ** (2 * n + 2)
                   + (abs(e_plus) + abs(e_minus)) * aq ** (2 * n + 1)) \
                / (1 - aq ** 2)
            if rem < tol / 4:
                break
            if n > ctx.max_terms:
                raise TruncationError("triple product exceeded max_terms")
        return acc


def f_char(r, ctx: EvalContext = DEFAULT_CTX):
    """f(r) = theta(1) e^{r/2} / theta(e^{-2r}), characteristic function kernel.

    Evaluated through the symmetric form theta(1)/sqrt(theta(e^{2r}) theta(e^{-2r}))
    for |r| large to avoid huge intermediate exponentials.
    """
    with ctx.workprec(16):
        r = mpmath.mpf(r)
        t1 = theta_one(mp.prec)
        if abs(r) < 40:
            return t1 * mp.e ** (r / 2) / theta(mp.e ** (-2 * r), ctx).value
        tp = theta(mp.e ** (2 * abs(r)), ctx).value   # ~ 1
        # theta(e^{-2|r|}) = e^{|r|/2} ... use the law directly:
        tm = mp.sqrt(mp.e ** (2 * abs(r))) * tp        # theta(e^{-2|r|})
        return t1 * mp.e ** (abs(r) / 2) / tm


# ---------------------------------------------------------------------------
# gamma kernel
# ---------------------------------------------------------------------------

_CW_NUM_CACHE: dict = {}


def _w_key(w, prec: int):
    with mp.workprec(max(prec, 64)):
        wc = mpmath.mpc(w)
        return (mp.nstr(wc.real, 40), mp.nstr(wc.imag, 40), prec)


def ctilde_numeric(w, m_max: int, prec: int) -> List:
    """Numeric values of c_m(w)/w for 1 <= m <= m_max (index 0 unused).

    Well-defined at w = 0 where the value is the log-theta coefficient c'_m.
    """
    key = _w_key(w, prec)
    cached = _CW_NUM_CACHE.get(key)
    if cached is not None and len(cached) > m_max:
        return cached
    with mp.workprec(prec + 32):
        wc = mpmath.mpc(w)
        if wc.imag == 0:
            wc = wc.real
        vals = [None]
        for m in range(1, m_max + 1):
            vals.append(c_over_w_poly(m).eval_numeric(wc))
    _CW_NUM_CACHE[key] = vals
    if len(_CW_NUM_CACHE) > 64:
        _CW_NUM_CACHE.pop(next(iter(_CW_NUM_CACHE)))
    return vals


def gamma_kernel_series(w, z, ctx: EvalContext, cw=None):
    """gamma(w, z) for Re(z) >= 0 by the termwise-differentiated q-expansion."""
    E = mp.e ** (2 * z)
    reE = mp.re(E)
    if reE <= 0:
        raise DomainError("q-expansion needs Re(e^{2z}) > 0")
    tol = ctx.mpf_tol()
    acc = mpmath.mpc(0)
    m = 0
    small = 0
    piE = mp.pi * E
    decay = mp.e ** (-mp.pi * reE)
    m_cap = 64
    if cw is None:
        cw = ctilde_numeric(w, m_cap, mp.prec)
    while True:
        m += 1
        if m >= len(cw):
            m_cap = max(2 * m_cap, m + 16)
            if m_cap > ctx.max_terms:
                raise TruncationError("gamma kernel series exceeded max_terms")
            cw = ctilde_numeric(w, m_cap, mp.prec)
        term = cw[m] * (4 * m * m * piE * piE - (4 + 2 * w) * m * piE) \
            * mp.e ** (-m * piE)
        acc += term
        if abs(term) < tol / 8:
            small += 1
            if small >= 3 and decay ** m < tol:
                break
        else:
            small = 0
    return acc


def gamma_kernel(w, z, ctx: EvalContext = DEFAULT_CTX):
    """gamma(w, z) = (d^2/dz^2 + w d/dz) h(w, z), |Im z| < pi/4.

    h(w, z) = (theta(e^{2z})^w - 1)/w for w != 0 and log theta(e^{2z}) at
    w = 0; the q-expansion makes the kernel continuous in w at 0.  Negative
    real part is handled through gamma(w, z) = e^{-wz} gamma(w, -z).
    """
    with ctx.workprec(16):
        z = mpmath.mpc(z)
        w = mpmath.mpc(w)
        if abs(mp.im(z)) >= mp.pi / 4:
            raise DomainError("gamma kernel requires |Im z| < pi/4")
        if mp.re(z) < 0:
            return mp.e ** (-w * z) * gamma_kernel_series(w, -z, ctx)
        return gamma_kernel_series(w, z, ctx)


# ---------------------------------------------------------------------------
# log-theta derivatives at t = 1
# ---------------------------------------------------------------------------

def log_theta_deriv(k: int, ctx: EvalContext = DEFAULT_CTX):
    """R_k = (d/dt)^k log theta(t) at t = 1, by termwise differentiation."""
    if k < 1:
        raise ValueError("k must be >= 1")
    with ctx.workprec(16):
        tol = ctx.mpf_tol()
        acc = mpmath.mpf(0)
        m = 0
        small = 0
        while True:
            m += 1
            cp = c_prime(m)
            term = (mpmath.mpf(cp.numerator) / mpmath.mpf(cp.denominator)) \
                * (-m * mp.pi) ** k * mp.e ** (-m * mp.pi)
            acc += term
            if abs(term) < tol / 8:
                small += 1
                if small >= 2:
                    break
            else:
                small = 0
            if m > ctx.max_terms:
                raise TruncationError("log theta derivative exceeded max_terms")
        return acc


_R_SYMBOLIC: List[PsiPolynomial] = []
_R_STATE: List[TriPolynomial] = []


def R_symbolic(k: int) -> PsiPolynomial:
    """Exact R_k in Q[psi2] via the closed weight-two derivation system.

    The ring Q[x, y, z] with x = pi theta^4, y = (pi/3)E_2, z = y + 4 theta'/theta
    is closed under d/dt:
        x' = x(z - y),  y' = -y^2/2 + x^2/24 + z^2/8,  z' = x^2/6 - yz - z^2/2,
    and d/dt log theta = (z - y)/4.  Evaluation at t = 1 sends
    (x, y, z) -> (psi2, 1, 0).  Only even powers of psi2 survive.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x = TriPolynomial.var("x")
    y = TriPolynomial.var("y")
    z = TriPolynomial.var("z")
    dx = x * (z - y)
    dy = y * y * Rat(-1, 2) + x * x * Rat(1, 24) + z * z * Rat(1, 8)
    dz = x * x * Rat(1, 6) - y * z - z * z * Rat(1, 2)
    if not _R_STATE:
        _R_STATE.append((z - y) * Rat(1, 4))
        _R_SYMBOLIC.append(_R_STATE[0].eval_at_unit())
    while len(_R_SYMBOLIC) < k:
        nxt = _R_STATE[-1].derive(dx, dy, dz)
        _R_STATE.append(nxt)
        _R_SYMBOLIC.append(nxt.eval_at_unit())
    return _R_SYMBOLIC[k - 1]


# ---------------------------------------------------------------------------
# norm-form theta series
# ---------------------------------------------------------------------------

def _lattice_sum(a: int, b: int, c: int, scale, B: float):
    """sum over (m, n) != (0,0) with q(m,n) <= B of exp(-scale * q(m,n))."""
    disc = 4 * a * c - b * b
    acc = mpmath.mpf(0)
    m_max = int(math.floor(math.sqrt(4.0 * c * B / disc))) + 1
    for m in range(-m_max, m_max + 1):
        d = b * b * m * m - 4 * c * (a * m * m - B)
        if d < 0:
            continue
        rd = math.sqrt(d)
        n_lo = int(math.ceil((-b * m - rd) / (2.0 * c) - 1e-12))
        n_hi = int(math.floor((-b * m + rd) / (2.0 * c) + 1e-12))
        for n in range(n_lo, n_hi + 1):
            if m == 0 and n == 0:
                continue
            qv = a * m * m + b * m * n + c * n * n
            if qv <= B:
                acc += mp.e ** (-scale * qv)
    return acc


def norm_form_theta_minus_one(K, t, ctx: EvalContext = DEFAULT_CTX):
    """Theta_K(t) - 1 for t >= 1 (full relative accuracy of the tail part)."""
    t = mpmath.mpf(t)
    a, b, c = K.norm_form
    disc_abs = abs(K.discriminant)
    sq = mp.sqrt(mpmath.mpf(disc_abs))
    rate = 2 * mp.pi * t / sq
    tol = ctx.mpf_tol()
    # points with q in [k, k+1) number at most ~ 2 pi (k+1)/sqrt|disc| + O(1)
    B = 1.0
    while True:
        count = 2 * mp.pi * (B + 2) / sq + 8
        tail = count * mp.e ** (-rate * B) / (1 - mp.e ** (-rate))
        if tail < tol:
            break
        B += 1.0
        if B > ctx.max_terms:
            raise TruncationError("norm-form theta exceeded max_terms")
    return _lattice_sum(a, b, c, rate, B), tail


def norm_form_theta(K, t, ctx: EvalContext = DEFAULT_CTX):
    """Theta_K(t) = sum_{alpha in O_K} exp(-2 pi N(alpha) t / sqrt|Delta_K|).

    Covolume-one normalization: Theta_K(1/t) = t Theta_K(t), used below
    t = 1 to keep the lattice sum short.
    """
    if K.class_number != 1:
        raise DomainError("only class-number-one fields are supported")
    with ctx.workprec(16):
        t = mpmath.mpf(t)
        if t <= 0:
            raise DomainError("norm_form_theta requires t > 0")
        if t < 1:
            return norm_form_theta(K, 1 / t, ctx) / t
        val, _ = norm_form_theta_minus_one(K, t, ctx)
        return val + 1
