"""Exact rational arithmetic: polynomials in one variable over Q.

Two flavours are used throughout the package:

* RationalPolynomial -- dense polynomial in an abstract indeterminate with
  exact rational coefficients (used for the Fourier coefficient polynomials
  in the weight variable).
* PsiPolynomial -- polynomial in the transcendental psi2 = pi*theta(1)^4
  = pi^2/Gamma(3/4)^4, the generator of the coefficient ring of the exact
  log-theta derivatives and cumulants.

gmpy2.mpq is used when available (it is a drop-in for Fraction here and an
order of magnitude faster); plain fractions.Fraction otherwise.
"""

from __future__ import annotations

from typing import Iterable, List, Sequence, Union

import mpmath
from mpmath import mp

try:
    from gmpy2 import mpq as Rat
except ImportError:  # pragma: no cover
    from fractions import Fraction as Rat

RatLike = Union[int, "Rat"]


def rat_str(x) -> str:
    """Serialize an exact rational as "p/q" (or "p" when integral)."""
    return str(x)


def _as_rat(x) -> "Rat":
    if isinstance(x, float):
        raise TypeError("exact arithmetic does not accept floats")
    return Rat(x)


class RationalPolynomial:
    """Dense polynomial sum_j coeffs[j] * X^j with exact rational coeffs."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[RatLike] = ()):
        cs = [_as_rat(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = cs

    @property
    def degree(self) -> int:
        """Degree, with the convention degree(0) = -1."""
        return len(self.coeffs) - 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __getitem__(self, j: int):
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else Rat(0)

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalPolynomial):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def __add__(self, other: "RationalPolynomial") -> "RationalPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return RationalPolynomial(
            [self[j] + other[j] for j in range(n)]
        )

    def __sub__(self, other: "RationalPolynomial") -> "RationalPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return RationalPolynomial(
            [self[j] - other[j] for j in range(n)]
        )

    def __neg__(self) -> "RationalPolynomial":
        return RationalPolynomial([-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, RationalPolynomial):
            if not self or not other:
                return RationalPolynomial()
            out = [Rat(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return RationalPolynomial(out)
        return RationalPolynomial([c * _as_rat(other) for c in self.coeffs])

    __rmul__ = __mul__

    def scale(self, a: RatLike) -> "RationalPolynomial":
        return self * a

    def shift_down(self) -> "RationalPolynomial":
        """Exact division by X; requires vanishing constant term."""
        if self and self.coeffs[0] != 0:
            raise ValueError("constant term nonzero, not divisible by X")
        return RationalPolynomial(self.coeffs[1:])

    def subst_negate(self) -> "RationalPolynomial":
        """p(X) -> p(-X)."""
        return RationalPolynomial(
            [c if j % 2 == 0 else -c for j, c in enumerate(self.coeffs)]
        )

    def eval_rat(self, x: RatLike):
        """Exact evaluation at a rational point."""
        x = _as_rat(x)
        acc = Rat(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_numeric(self, x):
        """Horner evaluation at an mpf/mpc point (caller sets precision)."""
        acc = mpmath.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * x + mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator)
        return acc

    def __repr__(self):
        if not self:
            return "RationalPolynomial(0)"
        terms = [
            "%s*X^%d" % (rat_str(c), j)
            for j, c in enumerate(self.coeffs)
            if c != 0
        ]
        return "RationalPolynomial(%s)" % " + ".join(terms)


_PSI2_CACHE = {}


def psi2_numeric(prec: int):
    """psi2 = pi^2 / Gamma(3/4)^4 at ``prec`` bits."""
    val = _PSI2_CACHE.get(prec)
    if val is None:
        with mp.workprec(prec + 10):
            val = mp.pi ** 2 / mp.gamma(mpmath.mpf(3) / 4) ** 4
        _PSI2_CACHE[prec] = val
    return val


class PsiPolynomial:
    """Exact polynomial in psi2 = pi*theta(1)^4, coefficients in Q.

    coeffs[k] is the coefficient of psi2^k.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[RatLike] = ()):
        cs = [_as_rat(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = cs

    @classmethod
    def const(cls, a: RatLike) -> "PsiPolynomial":
        return cls([a])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_even(self) -> bool:
        """True when only even powers of psi2 occur."""
        return all(c == 0 for j, c in enumerate(self.coeffs) if j % 2 == 1)

    def __bool__(self):
        return bool(self.coeffs)

    def __getitem__(self, j: int):
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else Rat(0)

    def __eq__(self, other):
        if isinstance(other, PsiPolynomial):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def __add__(self, other: "PsiPolynomial") -> "PsiPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return PsiPolynomial([self[j] + other[j] for j in range(n)])

    def __sub__(self, other: "PsiPolynomial") -> "PsiPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return PsiPolynomial([self[j] - other[j] for j in range(n)])

    def __neg__(self):
        return PsiPolynomial([-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, PsiPolynomial):
            if not self or not other:
                return PsiPolynomial()
            out = [Rat(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return PsiPolynomial(out)
        return PsiPolynomial([c * _as_rat(other) for c in self.coeffs])

    __rmul__ = __mul__

    def eval_numeric(self, prec: int):
        """Numerical value with psi2 evaluated at ``prec`` bits."""
        with mp.workprec(prec + 10):
            x = psi2_numeric(prec)
            acc = mpmath.mpf(0)
            for c in reversed(self.coeffs):
                acc = acc * x + mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator)
            return acc

    def serialize(self) -> List[str]:
        return [rat_str(c) for c in self.coeffs]

    def __repr__(self):
        if not self:
            return "PsiPolynomial(0)"
        parts = []
        for j, c in enumerate(self.coeffs):
            if c == 0:
                continue
            parts.append(rat_str(c) if j == 0 else "%s*psi2^%d" % (rat_str(c), j))
        return "PsiPolynomial(%s)" % " + ".join(parts)


class TriPolynomial:
    """Polynomial in three commuting variables x, y, z over Q.

    Monomials are keyed by exponent triples.  Only what the weight-two
    derivation system needs: ring operations, the derivation itself, and
    evaluation at (x, y, z) = (psi2, 1, 0).
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for key, c in terms.items():
                c = _as_rat(c)
                if c != 0:
                    self.terms[key] = self.terms.get(key, Rat(0)) + c
            self.terms = {k: c for k, c in self.terms.items() if c != 0}

    @classmethod
    def var(cls, name: str) -> "TriPolynomial":
        idx = "xyz".index(name)
        key = tuple(1 if i == idx else 0 for i in range(3))
        return cls({key: Rat(1)})

    def __add__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Rat(0)) + c
        return TriPolynomial(out)

    def __sub__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Rat(0)) - c
        return TriPolynomial(out)

    def __mul__(self, other):
        if isinstance(other, TriPolynomial):
            out = {}
            for (a1, b1, c1), u in self.terms.items():
                for (a2, b2, c2), v in other.terms.items():
                    k = (a1 + a2, b1 + b2, c1 + c2)
                    out[k] = out.get(k, Rat(0)) + u * v
            return TriPolynomial(out)
        return TriPolynomial({k: c * _as_rat(other) for k, c in self.terms.items()})

    __rmul__ = __mul__

    def derive(self, dx: "TriPolynomial", dy: "TriPolynomial", dz: "TriPolynomial"):
        """Apply the derivation with prescribed images of x, y, z."""
        out = TriPolynomial()
        for (a, b, c), u in self.terms.items():
            base = {"x": a, "y": b, "z": c}
            for name, img in (("x", dx), ("y", dy), ("z", dz)):
                e = base[name]
                if e == 0:
                    continue
                key = (
                    a - (name == "x"),
                    b - (name == "y"),
                    c - (name == "z"),
                )
                out = out + TriPolynomial({key: u * e}) * img
        return out

    def eval_at_unit(self) -> PsiPolynomial:
        """Evaluate at (x, y, z) = (psi2, 1, 0) into Q[psi2]."""
        coeffs = {}
        for (a, b, c), u in self.terms.items():
            if c != 0:
                continue
            coeffs[a] = coeffs.get(a, Rat(0)) + u
        if not coeffs:
            return PsiPolynomial()
        n = max(coeffs) + 1
        return PsiPolynomial([coeffs.get(j, Rat(0)) for j in range(n)])
