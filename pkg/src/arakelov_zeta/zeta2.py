"""The two-variable zeta function Z(w, s) and its entire completion xi(w, s).

Everything rests on two convergent representations with s-independent
kernels on the half line:

* the symmetric split of the defining integral,
      Z(w, s) = -1/s + 1/(s-w)
                + int_0^inf (theta(e^{2x})^w - 1)(e^{sx} + e^{(w-s)x}) dx,
  valid on all of C^2 off the polar lines s = 0 and s = w;

* the Fourier-Laplace form
      xi(w, s) = 1/2 int_0^inf gamma(w, x)(e^{sx} + e^{(w-s)x}) dx,
  entire in both variables (the reflection gamma(w,-x) = e^{wx} gamma(w,x)
  folds the negative half line onto the positive one).

Both kernels are cached on fixed quadrature panels per weight w, so a scan
over many s costs one dot product per point.  For real w, values below the
real axis come from Schwarz reflection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
from mpmath import mp

from .context import (AccuracyError, DEFAULT_CTX, DomainError, EvalContext,
                      RegionError, bits_for_cancellation)
from .quadrature import SymmetricLaplace, kernel_context, legendre_nodes
from .theta import (ctilde_numeric, gamma_kernel_series, theta_minus_one,
                    theta_one)


class RegionTag(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    BOUNDARY = "BOUNDARY"


def heaviside(s):
    """H(s) = 1, 1/2, 0 according to the sign of Re(s)."""
    re = mp.re(mpmath.mpc(s))
    if re > 0:
        return mpmath.mpf(1)
    if re == 0:
        return mpmath.mpf(1) / 2
    return mpmath.mpf(0)


def classify_region(w, s) -> RegionTag:
    """Convergence region of (Re w, Re s) for the corrected integrand."""
    rw = float(mp.re(mpmath.mpc(w)))
    rs = float(mp.re(mpmath.mpc(s)))
    if rs == 0.0 or rs == rw:
        return RegionTag.BOUNDARY
    if rs < 0 and rs > rw:
        return RegionTag.I
    if rs > 0 and rs > rw:
        return RegionTag.II
    if 0 < rs < rw:
        return RegionTag.III
    return RegionTag.IV


@dataclass(frozen=True)
class Zeta2Value:
    value: object
    quadrature_error_estimate: object
    region: RegionTag


def _cap_bucket(t: float) -> float:
    for cap in (2.0, 5.0, 12.0, 25.0, 60.0, 110.0, 220.0, 450.0):
        if t <= cap:
            return cap
    return float(2 ** math.ceil(math.log2(t)))


def _abs_bucket(x: float) -> float:
    for cap in (3.0, 6.0, 14.0, 30.0):
        if abs(x) <= cap:
            return cap
    return float(2 ** math.ceil(math.log2(abs(x))))


def _lo_bucket(x: float) -> float:
    x = min(x, 0.0)
    return 0.0 if x == 0.0 else -_abs_bucket(x)


def _hi_bucket(x: float) -> float:
    x = max(x, 0.0)
    return 0.0 if x == 0.0 else _abs_bucket(x)


def _w_cache_key(w, ctx: EvalContext):
    with mp.workprec(ctx.precision_bits + 64):
        wc = mpmath.mpc(w)
        return (mp.nstr(wc.real, 60), mp.nstr(wc.imag, 60),
                ctx.precision_bits, float(ctx.tol))


# ---------------------------------------------------------------------------
# cached evaluators
# ---------------------------------------------------------------------------

class XiEvaluator:
    """xi(w, .) through the cached gamma kernel; reflection for real w."""

    def __init__(self, w, ctx: EvalContext, t_cap: float = 12.0,
                 sigma_lo: float = -6.0, sigma_hi: float = 6.0):
        self.ctx = ctx
        with mp.workprec(ctx.precision_bits + 64):
            self.w = mpmath.mpc(w)
        self.w_is_real = (self.w.imag == 0)
        t_cap = t_cap + abs(float(self.w.imag))
        kctx = kernel_context(ctx, t_cap)

        def kernel(x):
            return gamma_kernel_series(self.w, x, kctx)

        self.rule = SymmetricLaplace(kernel, self.w, ctx, t_cap,
                                     sigma_lo, sigma_hi)

    def with_error(self, s) -> Tuple[object, object]:
        with mp.workprec(self.rule.wprec):
            s = mpmath.mpc(s)
            if self.w_is_real and s.imag < 0:
                v, e = self.with_error(mpmath.mpc(s.real, -s.imag))
                return mpmath.conj(v), e
            val, err = self.rule.integral(s)
            return val / 2, err / 2

    def __call__(self, s):
        return self.with_error(s)[0]

    def covers(self, t: float, sigma: float) -> bool:
        return self.rule.covers(abs(t) + abs(float(self.w.imag)), sigma)


class ZEvaluator:
    """Z(w, .) through the symmetric split formula with cached kernel."""

    def __init__(self, w, ctx: EvalContext, t_cap: float = 12.0,
                 sigma_lo: float = -6.0, sigma_hi: float = 6.0):
        self.ctx = ctx
        with mp.workprec(ctx.precision_bits + 64):
            self.w = mpmath.mpc(w)
        self.w_is_real = (self.w.imag == 0)
        t_cap = t_cap + abs(float(self.w.imag))
        kctx = kernel_context(ctx, t_cap)
        w_held = self.w

        def kernel(x):
            tm1, _ = theta_minus_one(mp.e ** (2 * x), kctx)
            return mp.expm1(w_held * mp.log1p(tm1))

        self.rule = SymmetricLaplace(kernel, self.w, ctx, t_cap,
                                     sigma_lo, sigma_hi)

    def with_error(self, s) -> Tuple[object, object]:
        with mp.workprec(self.rule.wprec):
            s = mpmath.mpc(s)
            if self.w_is_real and s.imag < 0:
                v, e = self.with_error(mpmath.mpc(s.real, -s.imag))
                return mpmath.conj(v), e
            if s == 0 or s == self.w:
                raise RegionError("Z has poles at s = 0 and s = w")
            val, err = self.rule.integral(s)
            val += -1 / s + 1 / (s - self.w)
            return val, err

    def __call__(self, s):
        return self.with_error(s)[0]


_XI_CACHE: dict = {}
_Z_CACHE: dict = {}
_CACHE_LIMIT = 48


def _get_cached(cache, key, builder):
    ev = cache.get(key)
    if ev is None:
        ev = builder()
        cache[key] = ev
        while len(cache) > _CACHE_LIMIT:
            cache.pop(next(iter(cache)))
    return ev


def get_xi_evaluator(w, ctx: EvalContext, t_cap: float = 10.0,
                     sigma_lo: float = -6.0, sigma_hi: float = 6.0) -> XiEvaluator:
    tb = _cap_bucket(t_cap)
    slo = _lo_bucket(sigma_lo)
    shi = _hi_bucket(sigma_hi)
    key = _w_cache_key(w, ctx) + (tb, slo, shi, "xi")
    return _get_cached(_XI_CACHE, key,
                       lambda: XiEvaluator(w, ctx, tb, slo, shi))


def get_z_evaluator(w, ctx: EvalContext, t_cap: float = 10.0,
                    sigma_lo: float = -6.0, sigma_hi: float = 6.0) -> ZEvaluator:
    tb = _cap_bucket(t_cap)
    slo = _lo_bucket(sigma_lo)
    shi = _hi_bucket(sigma_hi)
    key = _w_cache_key(w, ctx) + (tb, slo, shi, "z")
    return _get_cached(_Z_CACHE, key,
                       lambda: ZEvaluator(w, ctx, tb, slo, shi))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def Z(w, s, ctx: EvalContext = DEFAULT_CTX) -> Zeta2Value:
    """Z(w, s) for Re(s) off the boundary lines {0, Re w}, w != 0.

    Values on the boundary lines and the w = 0 plane route through xi;
    Z(0, .) is identically zero and s in {0, w} are the poles.
    """
    with mp.workprec(80):
        wc = mpmath.mpc(w)
        sc = mpmath.mpc(s)
    if wc == 0:
        raise DomainError("Z(0, .) is identically zero; use xi for w = 0")
    region = classify_region(wc, sc)
    if region is RegionTag.BOUNDARY:
        raise RegionError(
            "Re(s) lies on a boundary line {0, Re w}; evaluate xi instead")
    ev = get_z_evaluator(w, ctx,
                         t_cap=abs(float(sc.imag)),
                         sigma_lo=min(float(sc.real), 0.0),
                         sigma_hi=max(float(sc.real), 0.0))
    val, err = ev.with_error(s)
    return Zeta2Value(value=val, quadrature_error_estimate=err, region=region)


def xi(w, s, ctx: EvalContext = DEFAULT_CTX, y: float = 0.0):
    """Entire completion xi(w, s), uniformly valid on all of C^2.

    y is the imaginary offset of the integration line in the Fourier-Laplace
    representation; the default 0 is correct everywhere and fastest, nonzero
    y exists for the decay experiments.
    """
    if y != 0.0:
        return _xi_offset(w, s, y, ctx)
    with mp.workprec(80):
        sc = mpmath.mpc(s)
    ev = get_xi_evaluator(w, ctx,
                          t_cap=abs(float(sc.imag)),
                          sigma_lo=min(float(sc.real), 0.0),
                          sigma_hi=max(float(sc.real), 0.0))
    return ev(s)


def xi_with_error(w, s, ctx: EvalContext = DEFAULT_CTX):
    with mp.workprec(80):
        sc = mpmath.mpc(s)
    ev = get_xi_evaluator(w, ctx,
                          t_cap=abs(float(sc.imag)),
                          sigma_lo=min(float(sc.real), 0.0),
                          sigma_hi=max(float(sc.real), 0.0))
    return ev.with_error(s)


def _xi_offset(w, s, y: float, ctx: EvalContext):
    """xi via the line Im(z) = y: uncached, for the decay experiments.

    xi = 1/2 [ e^{isy} int_0^inf g+(x) e^{sx} dx
             + e^{-i(w-s)y} int_0^inf g-(x) e^{(w-s)x} dx ],
    with g+-(x) = gamma(w, x +- iy).
    """
    if abs(y) >= math.pi / 4:
        raise DomainError("offset must satisfy |y| < pi/4")
    with mp.workprec(80):
        wc = mpmath.mpc(w)
        sc = mpmath.mpc(s)
    cos2y = math.cos(2 * y)
    t_cap = abs(float(sc.imag)) + abs(float(wc.imag))
    kctx = kernel_context(ctx, t_cap)

    def kplus(x):
        return gamma_kernel_series(wc, x + 1j * mpmath.mpf(y), kctx)

    def kminus(x):
        return gamma_kernel_series(wc, x - 1j * mpmath.mpf(y), kctx)

    sig = max(abs(float(sc.real)), abs(float(wc.real) - float(sc.real)))
    rule_p = SymmetricLaplace(
        kplus, wc, ctx, t_cap, -sig, sig,
        decay_rate=lambda x: 2 * math.pi * cos2y * math.exp(2 * x))
    rule_m = SymmetricLaplace(
        kminus, wc, ctx, t_cap, -sig, sig,
        decay_rate=lambda x: 2 * math.pi * cos2y * math.exp(2 * x))
    with mp.workprec(max(rule_p.wprec, rule_m.wprec)):
        iy = mpmath.mpc(0, y)
        a = mpmath.mpc(0)
        for xx, gw in rule_p.nodes_main:
            a += gw * mp.exp(sc * xx)
        b = mpmath.mpc(0)
        for xx, gw in rule_m.nodes_main:
            b += gw * mp.exp((wc - sc) * xx)
        val = (mp.exp(sc * iy) * a + mp.exp(-(wc - sc) * iy) * b) / 2
        return val


def Z_region_integrand(w, s, ctx: EvalContext = DEFAULT_CTX):
    """Z by the two-sided corrected integrand (cross-check route).

    Z = int_{-inf}^{inf} (theta(e^{2x})^w - H(s) - H(w-s) e^{-wx}) e^{sx} dx,
    convergent exactly when Re(s) is off the boundary lines.  Uncached and
    slower than Z(); retained to validate the region classification.
    """
    with mp.workprec(80):
        wc = mpmath.mpc(w)
        sc = mpmath.mpc(s)
    region = classify_region(wc, sc)
    if region is RegionTag.BOUNDARY:
        raise RegionError("two-sided integrand diverges on the boundary lines")
    hs = heaviside(sc)
    hws = heaviside(wc - sc)
    sigma = float(sc.real)
    wre = float(wc.real)
    tol_ln = math.log(ctx.tol) + math.log(1e-3)
    pad = abs(sigma) + abs(wre)
    x_right = 1.0
    while math.pi * math.exp(2 * x_right) < -tol_ln + pad * x_right + 8:
        x_right += 0.25
    # left-end decay: the surviving terms are (1-H(w-s)) e^{(s-w)x} and
    # H(s) e^{sx}; in region IV both cancel and the decay is again
    # double-exponential
    rates = []
    if hws == 0:
        rates.append(sigma - wre)
    if hs == 1:
        rates.append(sigma)
    if rates:
        r_left = min(min(rates), 10.0)
        x_left = tol_ln / r_left - 2.0
    else:
        x_left = -x_right - 1.0
    t_cap = abs(float(sc.imag)) + abs(float(wc.imag))
    nats = 0.79 * t_cap + pad * max(abs(x_left), x_right) + 5
    wprec = bits_for_cancellation(nats, ctx.precision_bits)
    with mp.workprec(wprec):
        h_osc = 30.0 / max(t_cap, 8.0)
        xs, ws = legendre_nodes(32, wprec)

        def integrand(x):
            if x >= 0:
                tm1, _ = theta_minus_one(mp.e ** (2 * x), ctx)
                thw = mp.exp(wc * mp.log1p(tm1))
            else:
                tm1, _ = theta_minus_one(mp.e ** (-2 * x), ctx)
                thw = mp.exp(wc * (mp.log1p(tm1) - x))
            return (thw - hs - hws * mp.exp(-wc * x)) * mp.exp(sc * x)

        total = mpmath.mpc(0)
        x = mpmath.mpf(x_left)
        while x < x_right:
            h = min(h_osc, 0.45, max(0.04, 20.0 / (2 * math.pi * math.exp(2 * float(x)))),
                    x_right - float(x))
            c = x + h / 2
            r = mpmath.mpf(h) / 2
            for xi_, wi in zip(xs, ws):
                total += r * wi * integrand(c + r * xi_)
            x += h
        return total


# ---------------------------------------------------------------------------
# Riemann xi / completed zeta and the w = 0 closed form
# ---------------------------------------------------------------------------

def riemann_xi(z, prec: Optional[int] = None):
    """xi(z) = (z-1) pi^{-z/2} Gamma(z/2 + 1) zeta(z), entire, xi(0) = 1/2.

    Independent closed-form route (library zeta/gamma), used as the second
    leg of every dual check against the quadrature representations.
    """
    with mp.workprec(prec or mp.prec):
        z = mpmath.mpc(z)
        if abs(z - 1) < mpmath.mpf(1) / 1024:
            z = 1 - z
        val = (z - 1) * mp.pi ** (-z / 2) * mp.gamma(z / 2 + 1) * mp.zeta(z)
        return val if z.imag != 0 or val.imag != 0 else val.real


def completed_zeta_closed(s, prec: Optional[int] = None):
    """pi^{-s/2} Gamma(s/2) zeta(s) by library functions (oracle route)."""
    with mp.workprec(prec or mp.prec):
        s = mpmath.mpc(s)
        return mp.pi ** (-s / 2) * mp.gamma(s / 2) * mp.zeta(s)


def completed_zeta(s, ctx: EvalContext = DEFAULT_CTX):
    """Completed Riemann zeta by the symmetric theta integral (w = 1 slice).

    zhat(s) = -1/s - 1/(1-s) + int_1^inf psi(t)(t^{s/2} + t^{(1-s)/2}) dt/t
    with 2 psi(t) = theta(t) - 1; satisfies zhat(s) = zhat(1-s); poles 0, 1.
    """
    with mp.workprec(80):
        sc = mpmath.mpc(s)
    if sc == 0 or sc == 1:
        raise DomainError("completed zeta has poles at s = 0 and s = 1")
    return Z(1, s, ctx).value


def _two_power_factor(s, shift: int):
    """(1 - 2^{1 + shift*s/2}) / (s + 2*shift) with the removable point filled.

    shift is +1 or -1; the singular point is s = -2*shift.
    """
    s = mpmath.mpc(s)
    a = mp.log(2) / 2 * shift
    pole = mpmath.mpf(-2 * shift)
    eps = s - pole
    if abs(eps) < mpmath.mpf(1) / 64:
        # (1 - e^{a eps})/eps = -sum_{k>=1} a^k eps^{k-1} / k!
        acc = mpmath.mpc(0)
        for k in range(1, 40):
            term = (a ** k / mp.factorial(k)) * eps ** (k - 1)
            acc -= term
            if abs(term) < mp.eps * (1 + abs(acc)):
                break
        return acc
    return (1 - mp.exp(a * eps)) / eps


def xi0_closed(s, ctx: EvalContext = DEFAULT_CTX):
    """Closed form of xi(0, s) with all removable singularities filled.

    xi(0, s) = -(s^2/8)(1 - 2^{1+s/2})(1 - 2^{1-s/2}) zhat(s/2) zhat(-s/2)
             = -8 u+(s) u-(s) xi_R(s/2) xi_R(-s/2),
    where u+- divide out the zhat poles at s = +-2 and the double pole at 0
    is absorbed by s^2; xi0_closed(0) = 1/2 and xi0_closed(it) >= 0 on R.
    """
    with ctx.workprec(24):
        sc = mpmath.mpc(s)
        up = _two_power_factor(sc, +1)
        um = _two_power_factor(sc, -1)
        val = -8 * up * um * riemann_xi(sc / 2) * riemann_xi(-sc / 2)
        if sc.imag == 0 and abs(val.imag) < abs(mp.eps * 64 * (1 + abs(val))):
            val = val.real
        return val


# ---------------------------------------------------------------------------
# polynomial-moment transform
# ---------------------------------------------------------------------------

def _stirling2(k: int, j: int) -> int:
    if j == k:
        return 1
    if j == 0:
        return 1 if k == 0 else 0
    if j > k:
        return 0
    return j * _stirling2(k - 1, j) + _stirling2(k - 1, j - 1)


def moment_transform(Q: Sequence, w, sigma: float, z,
                     ctx: EvalContext = DEFAULT_CTX,
                     cross_check: bool = False):
    """Q(-d/dz)(theta(e^{2z})^w - H(sigma) - H(w - sigma) e^{-wz}) at z.

    Q is the coefficient list [a0, a1, ...] of the polynomial.  With
    cross_check=True the Fourier-side value
    (1/2pi) int Q(sigma+it) Z(w, sigma+it) e^{-(sigma+it)z} dt is computed as
    well and the pair is returned; the two agree within tolerance.
    """
    with ctx.workprec(32):
        wc = mpmath.mpc(w)
        zc = mpmath.mpc(z)
        if abs(zc.imag) >= mp.pi / 4:
            raise DomainError("moment transform needs |Im z| < pi/4")
        if sigma == 0 or sigma == float(wc.real):
            raise DomainError("sigma must avoid the boundary lines {0, Re w}")
        E = mp.exp(2 * zc)
        if mp.re(E) <= 0:
            raise DomainError("q-expansion needs Re(e^{2z}) > 0")
        tol = ctx.mpf_tol()
        coeffs = [mpmath.mpc(a) for a in Q]
        deg = len(coeffs) - 1
        # b_j = sum_k a_k (-2)^k S(k, j): Q(-d/dz) e^{-m pi E}
        #     = e^{-m pi E} sum_j b_j (-m pi E)^j
        b = [mpmath.mpc(0)] * (deg + 1)
        for k, a in enumerate(coeffs):
            for j in range(0, k + 1):
                b[j] += a * (-2) ** k * _stirling2(k, j)
        cw = ctilde_numeric(wc, 64, mp.prec)
        total = coeffs[0] * 1  # constant term of theta^w
        m = 0
        small = 0
        while True:
            m += 1
            if m >= len(cw):
                cw = ctilde_numeric(wc, 2 * len(cw), mp.prec)
                if len(cw) > ctx.max_terms:
                    raise AccuracyError("moment transform series too long")
            mpiE = -m * mp.pi * E
            inner = mpmath.mpc(0)
            for j, bj in enumerate(b):
                inner += bj * mpiE ** j
            term = (wc * cw[m]) * inner * mp.exp(mpiE)
            total += term
            if abs(term) < tol / 8:
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
        hs = heaviside(mpmath.mpf(sigma))
        hws = heaviside(wc - sigma)
        qw = mpmath.mpc(0)
        for k in reversed(range(deg + 1)):
            qw = qw * wc + coeffs[k]
        total -= hs * coeffs[0] + hws * qw * mp.exp(-wc * zc)
        if not cross_check:
            return total
        return total, _moment_transform_fourier(coeffs, wc, sigma, zc, ctx)


def _moment_transform_fourier(coeffs, wc, sigma, zc, ctx: EvalContext):
    """(1/2pi) int Q(sigma+it) Z(w, sigma+it) e^{-(sigma+it)z} dt."""
    y = float(zc.imag)
    x = float(zc.real)
    decay = math.pi / 4 - abs(y)
    L = max(8.0, (-math.log(ctx.tol) + 8) / decay)
    ev = get_z_evaluator(wc, ctx, t_cap=L, sigma_lo=min(sigma, 0.0),
                         sigma_hi=max(sigma, 0.0))
    with mp.workprec(ev.rule.wprec):
        xs, ws = legendre_nodes(32, mp.prec)
        h = min(0.5, 30.0 / max(abs(x), 8.0))
        total = mpmath.mpc(0)
        t = -L
        while t < L:
            hh = min(h, L - t)
            c = mpmath.mpf(t) + hh / 2
            r = mpmath.mpf(hh) / 2
            for xi_, wi in zip(xs, ws):
                tt = c + r * xi_
                s = mpmath.mpc(sigma, tt)
                qv = mpmath.mpc(0)
                for a in reversed(coeffs):
                    qv = qv * s + a
                total += r * wi * qv * ev(s) * mp.exp(-s * zc)
            t += hh
        return total / (2 * mp.pi)
