"""Adaptive-precision interval evaluation with outward rounding.

Every evaluation runs in a fresh mpmath interval context, so callers on
different threads never share a precision setting.
"""
from __future__ import annotations

from fractions import Fraction

from mpmath import libmp
from mpmath.ctx_iv import MPIntervalContext

from .errors import Undecidable

DEFAULT_PRECISION_CAP = 4096
START_PRECISION = 53


def precisions(cap: int, start: int = START_PRECISION):
    """Doubling schedule ``start, 2*start, ...`` clipped to ``cap``."""
    prec = max(2, min(start, cap))
    while True:
        yield prec
        if prec >= cap:
            return
        prec = min(prec * 2, cap)


def context(prec: int) -> MPIntervalContext:
    ctx = MPIntervalContext()
    ctx.prec = prec
    return ctx


def rational(ctx: MPIntervalContext, q: Fraction):
    q = Fraction(q)
    return ctx.mpf(q.numerator) / ctx.mpf(q.denominator)


def bounds(x) -> tuple:
    """Exact rational endpoints of an mpmath interval."""
    lo, hi = x._mpi_
    return tuple(Fraction(int(p), int(q)) for p, q in (libmp.to_rational(lo), libmp.to_rational(hi)))


def certified_sign(build, cap: int = DEFAULT_PRECISION_CAP, what: str = "expression") -> int:
    """Sign of the real number enclosed by ``build(ctx)`` at increasing precision.

    ``build`` receives an interval context and returns an interval. Raises
    Undecidable when the enclosure still straddles zero at ``cap`` bits.
    """
    for prec in precisions(cap):
        lo, hi = bounds(build(context(prec)))
        if lo > 0:
            return 1
        if hi < 0:
            return -1
    raise Undecidable(f"sign of {what} unresolved at {cap} bits", detail=what)
