"""Time windows with exact rational endpoints, including certified log-scale windows."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction

from . import certify
from .ceiling import k_value
from .errors import DomainError, PrecisionExhausted
from .space import format_fraction, parse_fraction


@dataclass(frozen=True)
class Window:
    """An interval ``(lo, hi)`` on the positive axis, optionally also ``(-hi, -lo)``.

    Endpoints are open unless ``lo_closed``/``hi_closed`` say otherwise. When
    ``log_scale`` is set the window stands for ``(e^{s-delta}, e^{s+delta})``
    and the rational endpoints are certified for integer membership only.
    """

    lo: Fraction
    hi: Fraction
    lo_closed: bool = False
    hi_closed: bool = False
    mirrored: bool = False
    log_scale: tuple | None = None  # (s, delta, precision bits)

    def __post_init__(self):
        lo, hi = parse_fraction(self.lo), parse_fraction(self.hi)
        if not 0 <= lo < hi:
            raise DomainError(f"window needs 0 <= lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def half_open(cls, lo, hi, mirrored: bool = False) -> "Window":
        """``[lo, hi)``, the convention of the K-interval statements."""
        return cls(lo, hi, lo_closed=True, mirrored=mirrored)

    @classmethod
    def closed(cls, lo, hi, mirrored: bool = False) -> "Window":
        return cls(lo, hi, lo_closed=True, hi_closed=True, mirrored=mirrored)

    @classmethod
    def k_interval(cls, n: int, mirrored: bool = False) -> "Window":
        return cls.half_open(k_value(n), k_value(n + 1), mirrored)

    @property
    def integer_exact_only(self) -> bool:
        return self.log_scale is not None

    def contains(self, value) -> bool:
        """Membership of a positive value in the (unmirrored) interval."""
        value = parse_fraction(value)
        above = value >= self.lo if self.lo_closed else value > self.lo
        below = value <= self.hi if self.hi_closed else value < self.hi
        return above and below

    def contains_signed(self, value) -> bool:
        value = parse_fraction(value)
        if self.contains(value):
            return True
        return self.mirrored and self.contains(-value)

    def above_top(self, value) -> bool:
        """True when ``value`` and everything larger lies past the window."""
        return value > self.hi or (value == self.hi and not self.hi_closed)

    def widen(self, amount) -> "Window":
        """Grow both ends by ``amount`` (the lower end stops at 0)."""
        amount = parse_fraction(amount)
        if self.log_scale is not None:
            raise DomainError("widen a direct rational window, not a certified log-scale one")
        return replace(self, lo=max(self.lo - amount, Fraction(0)), hi=self.hi + amount)

    def label(self) -> str:
        if self.log_scale is not None:
            s, delta, _ = self.log_scale
            return f"s={format_fraction(s)},delta={format_fraction(delta)}"
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{format_fraction(self.lo)}:{format_fraction(self.hi)}{right}"


def _certified_exp(exponent: Fraction, side: str, cap: int):
    """Rational bound on ``e^exponent`` with no integer between it and the true value."""
    if exponent == 0:
        return Fraction(1), 0
    for prec in certify.precisions(cap):
        ctx = certify.context(prec)
        lo, hi = certify.bounds(ctx.exp(certify.rational(ctx, exponent)))
        if math.floor(hi) < lo:
            return (lo if side == "low" else hi), prec
    raise PrecisionExhausted(
        f"an integer lies within the {cap}-bit enclosure of exp({format_fraction(exponent)})"
    )


def window_from_log_scale(s, delta, cap: int = certify.DEFAULT_PRECISION_CAP, mirrored: bool = True) -> Window:
    """Rational window classifying every integer exactly as ``(e^{s-delta}, e^{s+delta})`` does.

    >>> w = window_from_log_scale(5, 1)
    >>> [w.contains(n) for n in (54, 55, 403, 404)]
    [False, True, True, False]
    """
    s, delta = parse_fraction(s), parse_fraction(delta)
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    if delta == 0:
        raise DomainError("delta = 0 gives an empty open window")
    lo, p1 = _certified_exp(s - delta, "low", cap)
    hi, p2 = _certified_exp(s + delta, "high", cap)
    return Window(lo, hi, mirrored=mirrored, log_scale=(s, delta, max(p1, p2)))


_ENDPOINT = re.compile(r"^\s*K(\d+)\s*(?:([+-])\s*(\S+))?\s*$")


def parse_endpoint(text: str) -> Fraction:
    """A rational ``p/q`` or ``K<n>`` with an optional ``+r``/``-r`` offset."""
    m = _ENDPOINT.match(text)
    if m:
        val = Fraction(k_value(int(m.group(1))))
        if m.group(2):
            off = parse_fraction(m.group(3))
            val = val + off if m.group(2) == "+" else val - off
        return val
    return parse_fraction(text)


def parse_window(text: str, mirrored: bool = False) -> Window:
    """Parse ``lo:hi`` (open) or bracketed ``[lo:hi)``, ``[lo:hi]``, ``(lo:hi]``."""
    text = text.strip()
    lo_closed = hi_closed = False
    if text[:1] in "[(":
        lo_closed = text[0] == "["
        text = text[1:]
    if text[-1:] in "])":
        hi_closed = text[-1] == "]"
        text = text[:-1]
    if text.count(":") != 1:
        raise DomainError(f"window must look like lo:hi, got {text!r}")
    lo, hi = text.split(":")
    return Window(parse_endpoint(lo), parse_endpoint(hi), lo_closed, hi_closed, mirrored)
