"""Finite unions of rational intervals with explicit endpoint closedness."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    @property
    def length(self) -> Fraction:
        return max(self.hi - self.lo, Fraction(0))

    def intersect(self, other: "Interval") -> "Interval":
        if self.lo > other.lo:
            lo, lo_closed = self.lo, self.lo_closed
        elif self.lo < other.lo:
            lo, lo_closed = other.lo, other.lo_closed
        else:
            lo, lo_closed = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_closed = self.hi, self.hi_closed
        elif self.hi > other.hi:
            hi, hi_closed = other.hi, other.hi_closed
        else:
            hi, hi_closed = self.hi, self.hi_closed and other.hi_closed
        return Interval(lo, hi, lo_closed, hi_closed)

    def contains_interval(self, other: "Interval") -> bool:
        if other.empty:
            return True
        left = self.lo < other.lo or (self.lo == other.lo and (self.lo_closed or not other.lo_closed))
        right = self.hi > other.hi or (self.hi == other.hi and (self.hi_closed or not other.hi_closed))
        return left and right


class IntervalUnion:
    """Disjoint, sorted, non-touching intervals; the union of whatever was added."""

    def __init__(self, intervals=()):
        self.parts = self._normalize([i for i in intervals if not i.empty])

    @staticmethod
    def _normalize(items):
        items = sorted(items, key=lambda i: (i.lo, not i.lo_closed))
        out = []
        for cur in items:
            if out:
                last = out[-1]
                touching = last.hi > cur.lo or (last.hi == cur.lo and (last.hi_closed or cur.lo_closed))
                if touching:
                    if cur.hi > last.hi:
                        hi, hi_closed = cur.hi, cur.hi_closed
                    elif cur.hi < last.hi:
                        hi, hi_closed = last.hi, last.hi_closed
                    else:
                        hi, hi_closed = last.hi, last.hi_closed or cur.hi_closed
                    out[-1] = Interval(last.lo, hi, last.lo_closed, hi_closed)
                    continue
            out.append(cur)
        return out

    def __or__(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(self.parts + other.parts)

    def add(self, interval: Interval) -> None:
        if not interval.empty:
            self.parts = self._normalize(self.parts + [interval])

    @property
    def measure(self) -> Fraction:
        return sum((i.length for i in self.parts), Fraction(0))

    @property
    def empty(self) -> bool:
        return not self.parts

    def issubset(self, other: "IntervalUnion") -> bool:
        return all(any(o.contains_interval(p) for o in other.parts) for p in self.parts)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalUnion) and self.parts == other.parts

    def __repr__(self) -> str:
        body = " u ".join(
            f"{'[' if i.lo_closed else '('}{i.lo}, {i.hi}{']' if i.hi_closed else ')'}" for i in self.parts
        )
        return f"IntervalUnion({body or 'empty'})"
