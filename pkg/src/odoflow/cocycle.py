"""Logarithms of rationals as exact formal values, and the product-measure cocycle."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from sympy import perfect_power

from . import certify
from .errors import DepthMismatch
from .space import CoordinateScheme, Prefix, parse_fraction


def _max_power(n: int):
    """``(b, e)`` with ``n == b**e`` and ``e`` maximal; ``e`` is None for ``n == 1``."""
    if n == 1:
        return 1, None
    found = perfect_power(n)
    if not found:
        return n, 1
    b, e = found
    return int(b), int(e)


@lru_cache(maxsize=4096)
def _canonical(ratio: Fraction) -> tuple:
    if ratio == 1:
        return ()
    sign = 1 if ratio > 1 else -1
    big = ratio if ratio > 1 else 1 / ratio
    bn, en = _max_power(big.numerator)
    bd, ed = _max_power(big.denominator)
    if ed is None:
        e = en
    else:
        e = math.gcd(en, ed)
    base = Fraction(bn ** (en // e), 1 if ed is None else bd ** (ed // e))
    return ((base, sign * e),)


@dataclass(frozen=True)
class LogValue:
    """``sum(mult * log(ratio))`` kept as a formal, exactly comparable value.

    The stored form is canonical: the empty tuple for zero, otherwise a single
    term ``(q, e)`` with ``q > 1`` not a perfect power. Two values are equal
    exactly when their terms are equal.
    """

    terms: tuple = ()

    @classmethod
    def of(cls, ratio) -> "LogValue":
        ratio = parse_fraction(ratio)
        if ratio <= 0:
            raise ValueError(f"log of non-positive rational {ratio}")
        return cls(_canonical(ratio))

    @classmethod
    def from_terms(cls, terms) -> "LogValue":
        ratio = Fraction(1)
        for r, mult in terms:
            ratio *= parse_fraction(r) ** int(mult)
        return cls.of(ratio)

    @property
    def ratio(self) -> Fraction:
        """The positive rational whose log this is."""
        out = Fraction(1)
        for r, mult in self.terms:
            out *= r ** mult
        return out

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "LogValue") -> "LogValue":
        return LogValue.of(self.ratio * other.ratio)

    def __neg__(self) -> "LogValue":
        return LogValue(tuple((r, -mult) for r, mult in self.terms))

    def __sub__(self, other: "LogValue") -> "LogValue":
        return self + (-other)

    def sign(self) -> int:
        if not self.terms:
            return 0
        return 1 if self.terms[0][1] > 0 else -1

    def compare(self, bound, cap: int = certify.DEFAULT_PRECISION_CAP) -> int:
        """Certified sign of ``self - bound`` for a rational ``bound``."""
        bound = parse_fraction(bound)
        ratio = self.ratio
        if ratio == 1 or bound == 0:
            s = self.sign()
            return s if bound == 0 else (-1 if bound > 0 else 1)
        return certify.certified_sign(
            lambda ctx: ctx.log(certify.rational(ctx, ratio)) - certify.rational(ctx, bound),
            cap,
            what=f"log({ratio}) - {bound}",
        )

    def compare_exp(self, exponent, cap: int = certify.DEFAULT_PRECISION_CAP) -> int:
        """Certified sign of ``self - exp(exponent)``."""
        exponent = parse_fraction(exponent)
        ratio = self.ratio
        if ratio <= 1:
            return -1
        return certify.certified_sign(
            lambda ctx: ctx.log(certify.rational(ctx, ratio)) - ctx.exp(certify.rational(ctx, exponent)),
            cap,
            what=f"log({ratio}) - exp({exponent})",
        )

    def __float__(self) -> float:
        return sum(mult * math.log(r) for r, mult in self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{mult}*log({r})" for r, mult in self.terms)


def log_rn_value(scheme: CoordinateScheme, x: Prefix, y: Prefix) -> LogValue:
    """``log(mu(y) / mu(x))``: the log density change moving from ``x`` to ``y``.

    For a product measure this is the sum over coordinates of
    ``log(p_n(y_n) / p_n(x_n))``.
    """
    if len(x) != len(y):
        raise DepthMismatch(f"prefixes of lengths {len(x)} and {len(y)}")
    ratio = Fraction(1)
    for vec, a, b in zip(scheme.probs, x, y):
        if a != b:
            ratio *= vec[b] / vec[a]
    return LogValue.of(ratio)
