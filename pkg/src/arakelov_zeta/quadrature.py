"""Panel Gauss-Legendre quadrature for the symmetric Laplace integrals.

Every analytic-continuation formula in the package has the shape

    F(s) = c0(s) + integral_0^inf g(x) (e^{s x} + e^{(w-s) x}) dx

with a kernel g that does not depend on s and decays double-exponentially.
The evaluator below builds a fixed panel rule for the half line once, caches
the kernel values at the nodes, and then evaluates F at thousands of points
s for the cost of one short dot product each.  A coarser embedded rule on
the same panels provides a per-call error estimate, and the working
precision is raised with the oscillation height so that the massive
cancellation in the oscillatory integral (the values decay like
e^{-pi |t| / 4}) does not eat the answer.
"""

from __future__ import annotations

import math
from typing import Callable, List, Optional, Tuple

import mpmath
from mpmath import mp

from .context import AccuracyError, EvalContext, bits_for_cancellation


def kernel_context(ctx: EvalContext, t_cap: float) -> EvalContext:
    """Context for kernel evaluation inside a rule that must stay accurate
    down to the e^{-pi t/4} decay scale of the oscillatory integral."""
    tol = max(ctx.tol * math.exp(-0.786 * max(t_cap, 1.0)) * 1e-2, 1e-282)
    prec = max(ctx.precision_bits, int(-math.log2(tol)) + 24)
    return EvalContext(precision_bits=prec, tol=tol, max_terms=ctx.max_terms)

_NODE_CACHE = {}


def legendre_nodes(n: int, prec: int):
    """Nodes and weights of n-point Gauss-Legendre on [-1, 1] at prec bits."""
    key = (n, prec)
    cached = _NODE_CACHE.get(key)
    if cached is not None:
        return cached
    with mp.workprec(prec + 24):
        nodes = []
        weights = []
        for i in range(1, n // 2 + n % 2 + 1):
            x = mpmath.mpf(math.cos(math.pi * (i - 0.25) / (n + 0.5)))
            for _ in range(100):
                p0, p1 = mpmath.mpf(1), x
                for k in range(1, n):
                    p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
                dp = n * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < mpmath.mpf(2) ** (-prec - 8):
                    break
            p0, p1 = mpmath.mpf(1), x
            for k in range(1, n):
                p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
            dp = n * (x * p1 - p0) / (x * x - 1)
            wgt = 2 / ((1 - x * x) * dp * dp)
            nodes.append(x)
            weights.append(wgt)
        xs: List = []
        ws: List = []
        for x, wgt in zip(nodes, weights):
            xs.append(-x)
            ws.append(wgt)
        if n % 2 == 1:
            xs = xs[:-1]
            ws = ws[:-1]
            # middle node is x ~ 0 from the last iteration above
            xs.append(nodes[-1] * 0)
            ws.append(weights[-1])
        for x, wgt in zip(reversed(nodes[: n // 2]), reversed(weights[: n // 2])):
            xs.append(x)
            ws.append(wgt)
    _NODE_CACHE[key] = (xs, ws)
    return xs, ws


def _default_decay_rate(x: float) -> float:
    # local decay rate of e^{-pi e^{2x}}
    return 2 * math.pi * math.exp(2 * x)


class SymmetricLaplace:
    """Cached-kernel evaluator of ∫_0^∞ g(x)(e^{sx} + e^{(w-s)x}) dx.

    Parameters
    ----------
    kernel : callable x -> mpf/mpc, evaluated once per node at working
        precision; must decay at least like exp(-decay_rate(x)) eventually.
    w : the symmetry parameter (the second exponent is (w - s) x).
    t_cap : largest |Im s| (and |Im (w-s)|) the rule must resolve.
    sigma_lo, sigma_hi : range of Re(s) the rule will be used for.
    """

    MAIN_NODES = 32
    COARSE_NODES = 20

    def __init__(self, kernel: Callable, w, ctx: EvalContext, t_cap: float,
                 sigma_lo: float, sigma_hi: float,
                 decay_rate: Callable = _default_decay_rate,
                 x_min_len: float = 1.0, abs_target: Optional[float] = None):
        self.ctx = ctx
        self.t_cap = float(max(t_cap, 1.0))
        with mp.workprec(max(mp.prec, ctx.precision_bits) + 64):
            self.w = mpmath.mpc(w)
        wre = float(self.w.real)
        # largest positive exponent slope over the requested Re(s) range
        self.sigma_plus = max(sigma_hi, wre - sigma_lo, 0.0) + 0.5
        # absolute accuracy goal: the values themselves shrink like
        # e^{-pi |t| / 4}, so the rule must be this much better than tol
        if abs_target is None:
            abs_target = ctx.tol * math.exp(-0.786 * self.t_cap)
        self.abs_target = max(abs_target, 1e-280)
        self._kernel = kernel
        self._decay_rate = decay_rate
        self.x_max = self._find_upper_limit(x_min_len)
        nats = 0.79 * self.t_cap + self.sigma_plus * self.x_max + 3.0
        self.wprec = bits_for_cancellation(nats, ctx.precision_bits)
        self._build()

    # -- construction -------------------------------------------------------

    def _find_upper_limit(self, x_min_len: float) -> float:
        tol_ln = math.log(self.abs_target) - math.log(1e4)
        x = max(x_min_len, 0.5)
        probe_prec = max(80, int(-1.5 * tol_ln) + 40)
        with mp.workprec(probe_prec):
            while True:
                g = self._kernel(mpmath.mpf(x))
                mag = abs(g)
                ln_mag = float(mp.log(mag)) if mag > 0 else -1e18
                if ln_mag + self.sigma_plus * x < tol_ln:
                    return x
                x += 0.25
                if x > 60:
                    raise AccuracyError("kernel does not decay; no upper limit")

    def _build(self) -> None:
        X = self.x_max
        h_osc = 30.0 / max(self.t_cap, 8.0)
        panels = []
        x = 0.0
        while x < X:
            h = min(h_osc, 0.45, max(0.04, 20.0 / self._decay_rate(x)))
            h = min(h, X - x)
            panels.append((x, h))
            x += h
        self.panels = panels
        xs_a, ws_a = legendre_nodes(self.MAIN_NODES, self.wprec)
        xs_b, ws_b = legendre_nodes(self.COARSE_NODES, self.wprec)
        nodes_a: List = []
        nodes_b: List = []
        with mp.workprec(self.wprec):
            for (x0, h) in panels:
                c = mpmath.mpf(x0) + mpmath.mpf(h) / 2
                r = mpmath.mpf(h) / 2
                for xi, wi in zip(xs_a, ws_a):
                    xx = c + r * xi
                    nodes_a.append((xx, r * wi * self._kernel(xx)))
                for xi, wi in zip(xs_b, ws_b):
                    xx = c + r * xi
                    nodes_b.append((xx, r * wi * self._kernel(xx)))
            gX = abs(self._kernel(mpmath.mpf(X)))
        self.nodes_main = nodes_a
        self.nodes_coarse = nodes_b
        # the tail past X decays much faster than e^{-x}, crude bound suffices
        self.tail_bound = gX * mp.e ** (self.sigma_plus * X)

    # -- evaluation ---------------------------------------------------------

    def integral(self, s) -> Tuple[object, object]:
        """Return (integral value, error estimate) at the point s."""
        with mp.workprec(self.wprec):
            s = mpmath.mpc(s)
            s2 = self.w - s
            main = mpmath.mpc(0)
            for xx, gw in self.nodes_main:
                main += gw * (mp.exp(s * xx) + mp.exp(s2 * xx))
            coarse = mpmath.mpc(0)
            for xx, gw in self.nodes_coarse:
                coarse += gw * (mp.exp(s * xx) + mp.exp(s2 * xx))
            err = abs(main - coarse) + self.tail_bound
            return main, err

    def covers(self, t: float, sigma: float) -> bool:
        wre = float(self.w.real)
        t_need = abs(t) + abs(float(self.w.imag))
        return (t_need <= self.t_cap + 1e-9
                and max(sigma, wre - sigma, 0.0) <= self.sigma_plus - 0.25)
