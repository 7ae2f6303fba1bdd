"""Evaluation context: precision, tolerance and truncation budget.

Every numerical operation in the package takes an EvalContext.  The context
fixes the *target* accuracy; internal working precision is raised above
``precision_bits`` whenever an algorithm needs guard digits (oscillatory
quadrature at large height, for instance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from mpmath import mp


@dataclass(frozen=True)
class EvalContext:
    """Precision and truncation policy for numerical evaluation.

    precision_bits: binary working precision of returned values.
    tol:            absolute target accuracy of returned values.
    max_terms:      hard cap on series/lattice truncation lengths.
    """

    precision_bits: int = 128
    tol: float = 1e-30
    max_terms: int = 200_000

    def __post_init__(self):
        if self.precision_bits < 8:
            raise ValueError("precision_bits must be at least 8")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.tol < 2.0 ** (1 - self.precision_bits):
            raise ValueError(
                "tol=%g is unreachable at %d bits of precision"
                % (self.tol, self.precision_bits)
            )

    @property
    def dps(self) -> int:
        return int(self.precision_bits / 3.3219280948873626) + 2

    def mpf_tol(self):
        with mp.workprec(64):
            return mpmath.mpf(self.tol)

    def workprec(self, extra_bits: int = 0):
        """mpmath context manager at this precision plus guard bits."""
        return mp.workprec(self.precision_bits + max(0, extra_bits))


#: context used when none is supplied
DEFAULT_CTX = EvalContext()

#: cheaper context suitable for zero scans and sign scans (tol ~ 1e-12)
SCAN_CTX = EvalContext(precision_bits=80, tol=1e-12, max_terms=200_000)


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class TruncationError(ArithmeticError):
    """A series or lattice sum could not reach tolerance within max_terms."""


class ConvergenceError(ArithmeticError):
    """A tail bound cannot be closed for the requested arguments."""


class AccuracyError(ArithmeticError):
    """Quadrature error estimate above tolerance within the panel budget."""


class RegionError(ValueError):
    """Evaluation requested on a polar/boundary line; route through xi."""


def bits_for_cancellation(nats: float, base_bits: int) -> int:
    """Working precision needed to survive ``nats`` of additive cancellation."""
    return base_bits + int(math.ceil(nats * 1.4426950408889634)) + 24
