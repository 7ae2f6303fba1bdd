"""Zero location, counting, certification and tracking for xi(u, .) at real u.

The argument principle is applied to xi itself: the winding number of a
rectangle boundary is read off accumulated phase increments of cached
evaluator values, with the boundary sampling refined until every increment
is below pi/2.  No logarithmic-derivative quadrature is used, so only the
values of xi need to be trusted, not its derivative.

Zeros are then isolated by recursive bisection of the winding number and
polished with a damped Newton iteration (central-difference derivative),
each zero ending up certified by a minimal rectangle whose winding equals
its multiplicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
from mpmath import mp

from .context import DEFAULT_CTX, EvalContext
from .zeta2 import XiEvaluator, get_xi_evaluator

Rect = Tuple[float, float, float, float]     # (re_lo, re_hi, im_lo, im_hi)


class BoundaryNearZero(ArithmeticError):
    """Contour refinement hit the resolution floor: a zero sits on/near it."""


@dataclass
class ZeroRecord:
    u: float
    s: object                 # mpc location
    residual: float           # |xi(u, s)| at convergence
    multiplicity: int
    contour: Rect             # certifying rectangle

    @property
    def re(self) -> float:
        return float(mp.re(self.s))

    @property
    def im(self) -> float:
        return float(mp.im(self.s))


@dataclass
class CountReport:
    u: float
    T: float                  # the (possibly nudged) height actually used
    N: int                    # zeros with |Im rho| <= T, with multiplicity
    main_term: float          # T/2pi log(T/2pi) - T/2pi + 7/8
    S: float                  # N/2 - main_term

    @property
    def half_N(self) -> float:
        return self.N / 2.0


def counting_main_term(T: float) -> float:
    x = T / (2 * math.pi)
    return x * math.log(x) - x + 7.0 / 8.0


class SliceScanner:
    """Memoizing xi(u, .) evaluator for one real slice u."""

    def __init__(self, u: float, ctx: EvalContext, t_cap: float,
                 sigma_lo: float, sigma_hi: float):
        self.u = float(u)
        self.ctx = ctx
        self.ev = get_xi_evaluator(u, ctx, t_cap=t_cap,
                                   sigma_lo=sigma_lo - 0.5,
                                   sigma_hi=sigma_hi + 0.5)
        self._memo: Dict[Tuple[float, float], object] = {}

    def __call__(self, re: float, im: float):
        key = (re, im)
        val = self._memo.get(key)
        if val is None:
            val = self.ev(mpmath.mpc(re, im))
            self._memo[key] = val
            self._memo[(re, -im)] = mpmath.conj(val)
        return val

    def at_point(self, s):
        return self.ev(s)


def _phase_step(v0, v1):
    """Argument increment of v1/v0 in (-pi, pi]."""
    r = v1 / v0
    return float(mp.atan2(mp.im(r), mp.re(r)))


def _march_edge(scanner: SliceScanner, p0: Tuple[float, float],
                p1: Tuple[float, float], min_seg: float,
                max_points: int = 40000) -> float:
    """Accumulated phase change along the segment p0 -> p1."""
    pts = [p0, p1]
    # seed a few interior points so long edges are not blind at the start
    n0 = 2 + int(2 * math.hypot(p1[0] - p0[0], p1[1] - p0[1]))
    for i in range(1, n0):
        f = i / n0
        pts.insert(-1, (p0[0] + f * (p1[0] - p0[0]),
                        p0[1] + f * (p1[1] - p0[1])))
    pts.sort(key=lambda p: (p[0] - p0[0]) ** 2 + (p[1] - p0[1]) ** 2)
    vals = [scanner(*p) for p in pts]
    for v in vals:
        if v == 0:
            raise BoundaryNearZero("exact zero on the contour")
    total = 0.0
    i = 0
    while i + 1 < len(pts):
        if len(pts) > max_points:
            raise BoundaryNearZero("contour refinement exploded")
        step = _phase_step(vals[i], vals[i + 1])
        seg = math.hypot(pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1])
        if abs(step) < 1.5 or seg < min_seg:
            if seg < min_seg and abs(step) >= 1.5:
                raise BoundaryNearZero(
                    "phase jump %.2f over segment %.2e" % (step, seg))
            total += step
            i += 1
            continue
        mid = ((pts[i][0] + pts[i + 1][0]) / 2.0,
               (pts[i][1] + pts[i + 1][1]) / 2.0)
        v = scanner(*mid)
        if v == 0:
            raise BoundaryNearZero("exact zero on the contour")
        pts.insert(i + 1, mid)
        vals.insert(i + 1, v)
    return total


def winding_number_scanner(scanner: SliceScanner, rect: Rect,
                           min_seg: float = 1e-9) -> int:
    """Exact winding of xi(u, .) around the rectangle boundary."""
    re0, re1, im0, im1 = rect
    corners = [(re0, im0), (re1, im0), (re1, im1), (re0, im1), (re0, im0)]
    total = 0.0
    for a, b in zip(corners, corners[1:]):
        total += _march_edge(scanner, a, b, min_seg)
    wind = total / (2 * math.pi)
    n = int(round(wind))
    if abs(wind - n) > 0.25:
        raise BoundaryNearZero("phase total %.4f not near a multiple of 2pi"
                               % wind)
    return n


def winding_number(u: float, rect: Rect, ctx: EvalContext = DEFAULT_CTX) -> int:
    """Winding of xi(u, .) around rect = (re_lo, re_hi, im_lo, im_hi)."""
    scanner = SliceScanner(u, ctx, t_cap=max(abs(rect[2]), abs(rect[3])) + 1,
                           sigma_lo=rect[0], sigma_hi=rect[1])
    return winding_number_scanner(scanner, rect)


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

def newton_refine(scanner: SliceScanner, s0, loc_tol: float = 1e-10,
                  max_iter: int = 60):
    """Damped Newton with central-difference derivative.

    Returns (s, residual_abs, converged).  Convergence requires the final
    residual to be of the size |xi'| * loc_tol expected at distance loc_tol
    from a genuine zero; this rejects the saddle points of |xi| between
    neighbouring on-line zeros, where steps also stall.
    """
    ctx = scanner.ctx
    s = mpmath.mpc(s0)
    h_base = float(ctx.tol) ** (1.0 / 3.0)
    f = scanner.at_point(s)
    fp = mpmath.mpc(1)
    for _ in range(max_iter):
        h = mpmath.mpf(h_base) * (1 + abs(s))
        fp = (scanner.at_point(s + h) - scanner.at_point(s - h)) / (2 * h)
        if fp == 0:
            return s, float(abs(f)), False
        step = f / fp
        damp = 1.0
        for _try in range(8):
            s_new = s - damp * step
            f_new = scanner.at_point(s_new)
            if abs(f_new) <= abs(f) or abs(step) * damp < loc_tol:
                break
            damp /= 2.0
        moved = abs(step) * damp
        s, f = s_new, f_new
        if moved < loc_tol:
            if abs(f) <= abs(fp) * loc_tol * 64:
                return s, float(abs(f)), True
            return s, float(abs(f)), False
    return s, float(abs(f)), False


def _split_rect(rect: Rect, frac: float) -> Tuple[Rect, Rect]:
    re0, re1, im0, im1 = rect
    if (re1 - re0) >= (im1 - im0):
        cut = re0 + frac * (re1 - re0)
        return (re0, cut, im0, im1), (cut, re1, im0, im1)
    cut = im0 + frac * (im1 - im0)
    return (re0, re1, im0, cut), (re0, re1, cut, im1)


def _winding_retry(scanner: SliceScanner, rect: Rect, nudges: int = 5) -> Tuple[int, Rect]:
    """Winding with up to ``nudges`` boundary perturbations on failure."""
    grow = 0.0
    for k in range(nudges + 1):
        r = (rect[0] - grow, rect[1] + grow, rect[2] - grow, rect[3] + grow)
        try:
            return winding_number_scanner(scanner, r), r
        except BoundaryNearZero:
            grow += 0.011 * (k + 1)
    raise BoundaryNearZero("contour keeps hitting zeros near %r" % (rect,))


def find_zeros(u: float, region: Rect, ctx: EvalContext = DEFAULT_CTX,
               loc_tol: float = 1e-10,
               scanner: Optional[SliceScanner] = None) -> List[ZeroRecord]:
    """All zeros of xi(u, .) inside the region, certified by winding.

    The region boundary must be zero free.  The sum of multiplicities of
    the returned records equals the winding of the full region boundary.
    """
    if scanner is None:
        scanner = SliceScanner(u, ctx,
                               t_cap=max(abs(region[2]), abs(region[3])) + 1,
                               sigma_lo=region[0], sigma_hi=region[1])
    records: List[ZeroRecord] = []
    total, region_used = _winding_retry(scanner, region)
    _subdivide(scanner, region_used, total, records, loc_tol)
    records.sort(key=lambda r: (r.im, r.re))
    return records


def _certify(scanner: SliceScanner, s, mult_expect: int, loc_tol: float
             ) -> Optional[ZeroRecord]:
    """Minimal certifying rectangle around a refined zero."""
    re_c, im_c = float(mp.re(s)), float(mp.im(s))
    half = max(64 * loc_tol, 1e-6)
    for _ in range(8):
        rect = (re_c - half, re_c + half, im_c - half, im_c + half)
        try:
            wind = winding_number_scanner(scanner, rect)
        except BoundaryNearZero:
            half *= 1.7
            continue
        if wind >= 1:
            return ZeroRecord(u=scanner.u, s=s,
                              residual=float(abs(scanner.at_point(s))),
                              multiplicity=wind, contour=rect)
        half *= 1.7
    return None


def _subdivide(scanner: SliceScanner, rect: Rect, wind: int,
               out: List[ZeroRecord], loc_tol: float, depth: int = 0) -> None:
    if wind == 0:
        return
    re0, re1, im0, im1 = rect
    maxdim = max(re1 - re0, im1 - im0)
    if wind >= 1 and maxdim < 0.75:
        center = mpmath.mpc((re0 + re1) / 2, (im0 + im1) / 2)
        s, res, ok = newton_refine(scanner, center, loc_tol)
        if ok and re0 - 1e-9 <= float(mp.re(s)) <= re1 + 1e-9 \
                and im0 - 1e-9 <= float(mp.im(s)) <= im1 + 1e-9:
            cert = _certify(scanner, s, wind, loc_tol)
            if cert is not None and cert.multiplicity == wind:
                out.append(cert)
                return
        if maxdim < 1e-5:
            # unresolvable cluster: record the center with the winding count
            out.append(ZeroRecord(
                u=scanner.u, s=center,
                residual=float(abs(scanner.at_point(center))),
                multiplicity=wind, contour=rect))
            return
    if depth > 60:
        raise BoundaryNearZero("subdivision depth exhausted at %r" % (rect,))
    for frac in (0.5, 0.43, 0.57, 0.61):
        try:
            r_a, r_b = _split_rect(rect, frac)
            w_a = winding_number_scanner(scanner, r_a)
            w_b = winding_number_scanner(scanner, r_b)
            if w_a + w_b != wind:
                continue
            _subdivide(scanner, r_a, w_a, out, loc_tol, depth + 1)
            _subdivide(scanner, r_b, w_b, out, loc_tol, depth + 1)
            return
        except BoundaryNearZero:
            continue
    raise BoundaryNearZero("cannot split %r without hitting zeros" % (rect,))


# ---------------------------------------------------------------------------
# counting and the strip certificate
# ---------------------------------------------------------------------------

def strip_half_width(u: float) -> float:
    return u / 2.0 + 8.0


def strip_certificate(u: float, zeros: Sequence[ZeroRecord]) -> bool:
    """True iff every zero satisfies |Re s - u/2| < u/2 + 8."""
    return all(abs(z.re - u / 2.0) < strip_half_width(u) for z in zeros)


def count_zeros(u: float, T: float, ctx: EvalContext = DEFAULT_CTX) -> CountReport:
    """N_u(T) by winding over the strip |Re s - u/2| <= u/2 + 8, |Im s| <= T.

    T is nudged upward by hundredths when the contour hits a zero; the
    report carries the T actually used.
    """
    half = strip_half_width(u)
    re0, re1 = u / 2.0 - half, u / 2.0 + half
    scanner = SliceScanner(u, ctx, t_cap=T + 1.0, sigma_lo=re0, sigma_hi=re1)
    T_used = float(T)
    last_exc: Optional[Exception] = None
    for _ in range(6):
        try:
            n = winding_number_scanner(scanner, (re0, re1, -T_used, T_used))
            main = counting_main_term(T_used)
            return CountReport(u=float(u), T=T_used, N=n, main_term=main,
                               S=n / 2.0 - main)
        except BoundaryNearZero as exc:
            last_exc = exc
            T_used += 0.011
    raise BoundaryNearZero("count_zeros failed after nudging: %s" % last_exc)


# ---------------------------------------------------------------------------
# tracking zeros along the weight line
# ---------------------------------------------------------------------------

@dataclass
class TrackPoint:
    u: float
    s: object
    off_line: bool
    residual: float

    @property
    def re(self) -> float:
        return float(mp.re(self.s))

    @property
    def im(self) -> float:
        return float(mp.im(self.s))


@dataclass
class TrackEvent:
    kind: str                 # COALESCE | OFF_LINE | ON_LINE
    u: float
    s: object


@dataclass
class TrackResult:
    points: List[TrackPoint]
    events: List[TrackEvent]
    truncated: bool = False
    note: str = ""

    def off_line_interval(self) -> Optional[Tuple[float, float]]:
        us = [p.u for p in self.points if p.off_line]
        return (min(us), max(us)) if us else None

    @property
    def path(self):
        return [(p.u, p.s) for p in self.points]


def _is_off_line(scanner: SliceScanner, u: float, s, off_eps: float) -> bool:
    """Certified off-line test: the zero and its mirror are distinct.

    A zero is declared off the critical line when its certifying box can be
    placed strictly on one side of Re = u/2 with winding 1 and the mirrored
    box also has winding 1.
    """
    delta = float(mp.re(s)) - u / 2.0
    if abs(delta) <= off_eps:
        return False
    re_c, im_c = float(mp.re(s)), float(mp.im(s))
    h = abs(delta) / 2.0
    box = (re_c - h, re_c + h, im_c - h, im_c + h)
    mirror = (u - re_c - h, u - re_c + h, im_c - h, im_c + h)
    try:
        return (winding_number_scanner(scanner, box) == 1
                and winding_number_scanner(scanner, mirror) == 1)
    except BoundaryNearZero:
        return False


def track_zero(u_start: float, u_end: float, seed, steps: int = 100,
               ctx: EvalContext = DEFAULT_CTX,
               loc_tol: float = 1e-10) -> TrackResult:
    """Continue a zero of xi(u, .) from u_start to u_end.

    seed is a complex location (or a ZeroRecord); it is snapped to the
    nearest certified zero in a window around it before tracking starts.
    Emitted events: COALESCE when a second zero enters the certifying box
    (the pair meets on the critical line), OFF_LINE / ON_LINE when the
    tracked zero leaves or rejoins the line Re s = u/2, certified by the
    split-box test.  On persistent loss of the zero the path is truncated.
    """
    if isinstance(seed, ZeroRecord):
        seed_loc = seed.s
    else:
        seed_loc = mpmath.mpc(seed)
    off_eps = max(10 * float(ctx.tol), 1e-7)
    im_hi = float(mp.im(seed_loc)) + 3.0
    u_lo, u_hi = min(u_start, u_end), max(u_start, u_end)
    sig_lo = min(u_lo / 2 - 3.0, -1.0)
    sig_hi = max(u_hi / 2 + 3.0, 1.0)

    def make_scanner(u: float) -> SliceScanner:
        return SliceScanner(u, ctx, t_cap=im_hi + 2.0,
                            sigma_lo=sig_lo, sigma_hi=sig_hi)

    scanner = make_scanner(u_start)
    window = (float(mp.re(seed_loc)) - 1.8, float(mp.re(seed_loc)) + 1.8,
              float(mp.im(seed_loc)) - 1.8, float(mp.im(seed_loc)) + 1.8)
    candidates = find_zeros(u_start, window, ctx, loc_tol, scanner=scanner)
    if not candidates:
        raise ValueError("no zero of xi(%g, .) found near %s"
                         % (u_start, seed_loc))
    current = min(candidates, key=lambda z: abs(z.s - seed_loc)).s
    points = [TrackPoint(u=u_start, s=current,
                         off_line=_is_off_line(scanner, u_start, current, off_eps),
                         residual=float(abs(scanner.at_point(current))))]
    events: List[TrackEvent] = []
    if steps < 1 or u_start == u_end:
        return TrackResult(points=points, events=events)

    du_full = (u_end - u_start) / steps
    u = u_start
    du = du_full
    coalesced = False
    off_state = points[0].off_line
    halvings = 0
    while (du > 0 and u < u_end - 1e-12) or (du < 0 and u > u_end + 1e-12):
        u_next = u + du
        if (du > 0 and u_next > u_end) or (du < 0 and u_next < u_end):
            u_next = u_end
        scanner_next = make_scanner(u_next)
        # predict by linear extrapolation of the last two accepted points
        if len(points) >= 2 and points[-2].u != points[-1].u:
            slope = (points[-1].s - points[-2].s) / (points[-1].u - points[-2].u)
        else:
            slope = 0
        pred = points[-1].s + slope * (u_next - points[-1].u)
        s_new, res, ok = newton_refine(scanner_next, pred, loc_tol)
        jump = abs(s_new - pred)
        if not ok or jump > max(0.5, 4 * abs(slope * du) + 0.2):
            if halvings < 7:
                du /= 2.0
                halvings += 1
                continue
            return TrackResult(points=points, events=events, truncated=True,
                               note="zero lost near u=%.6f" % u_next)
        halvings = 0
        du = du_full if abs(du) >= abs(du_full) else du * 2.0
        # coalescence: another zero inside the certifying box
        if not coalesced:
            box_h = max(4 * abs(s_new - points[-1].s), 0.02)
            box = (float(mp.re(s_new)) - box_h, float(mp.re(s_new)) + box_h,
                   float(mp.im(s_new)) - box_h, float(mp.im(s_new)) + box_h)
            try:
                wind = winding_number_scanner(scanner_next, box)
            except BoundaryNearZero:
                wind = 1
            if wind >= 2:
                coalesced = True
                events.append(TrackEvent(kind="COALESCE", u=u_next, s=s_new))
        off_now = _is_off_line(scanner_next, u_next, s_new, off_eps)
        if off_now and not off_state:
            events.append(TrackEvent(kind="OFF_LINE", u=u_next, s=s_new))
        elif off_state and not off_now:
            events.append(TrackEvent(kind="ON_LINE", u=u_next, s=s_new))
        off_state = off_now
        points.append(TrackPoint(u=u_next, s=s_new, off_line=off_now,
                                 residual=res))
        u = u_next
    return TrackResult(points=points, events=events)
