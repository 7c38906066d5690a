"""The factorial ceiling, Birkhoff sums along odometer orbits, and the suspension flow."""
from __future__ import annotations

import enum
import math
import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, HorizonExceeded, OrbitOverflow, OrbitUnderflow
from .space import CoordinateScheme, Prefix, Relabeling, first_open_index, parse_fraction, predecessor, successor

_K_TABLE = {4: math.prod(math.factorial(j) for j in range(1, 5))}
_K_LOCK = threading.Lock()


def k_value(n: int) -> int:
    """``1! * 2! * ... * n!`` for ``n >= 4``, memoized."""
    n = int(n)
    if n < 4:
        raise DomainError(f"K_n is defined for n >= 4, got {n}")
    try:
        return _K_TABLE[n]
    except KeyError:
        pass
    with _K_LOCK:
        top = max(_K_TABLE)
        val = _K_TABLE[top]
        for j in range(top + 1, n + 1):
            val *= math.factorial(j)
            _K_TABLE[j] = val
    return _K_TABLE[n]


def k_index(value: int) -> int | None:
    """The ``n >= 4`` with ``K_n <= value < K_{n+1}``, or None when ``value < K_4``."""
    if value < _K_TABLE[4]:
        return None
    n = 4
    while k_value(n + 1) <= value:
        n += 1
    return n


def k_table_rows(max_n: int) -> list:
    return [(n, k_value(n)) for n in range(4, max_n + 1)]


@dataclass(frozen=True)
class NeedsDepth:
    """The ceiling depends on a coordinate past the truncation; ``lower_bound`` is certified."""

    lower_bound: int


@dataclass(frozen=True)
class CeilingSpec:
    """Either the factorial ceiling ``x -> K_{2^{N+1} + x_{N+1}}`` or a positive constant."""

    kind: str = "factorial"
    constant: int = 1

    def __post_init__(self):
        if self.kind not in ("factorial", "constant"):
            raise DomainError(f"unknown ceiling kind {self.kind!r}")
        if self.kind == "constant" and (not isinstance(self.constant, int) or self.constant < 1):
            raise DomainError(f"constant ceiling must be a positive integer, got {self.constant!r}")

    @classmethod
    def factorial(cls) -> "CeilingSpec":
        return cls("factorial")

    @classmethod
    def of_constant(cls, c: int) -> "CeilingSpec":
        return cls("constant", int(c))

    @property
    def is_factorial(self) -> bool:
        return self.kind == "factorial"

    def beyond_bound(self, scheme: CoordinateScheme) -> int:
        """Certified lower bound for the ceiling at any word off the truncation."""
        if self.is_factorial:
            return k_value(2 ** (scheme.depth + 1))
        return self.constant

    def check_scheme(self, scheme: CoordinateScheme):
        if self.is_factorial and scheme.sizes != tuple(2 ** n for n in range(1, scheme.depth + 1)):
            raise DomainError("the factorial ceiling needs alphabet sizes 2, 4, 8, ...")

    def __str__(self) -> str:
        return "factorial" if self.is_factorial else f"constant:{self.constant}"


def ceiling_value(spec: CeilingSpec, scheme: CoordinateScheme, prefix: Prefix):
    """Ceiling height over ``prefix``: an int, or NeedsDepth when coordinate ``N+1`` is unseen.

    >>> ceiling_value(CeilingSpec.factorial(), CoordinateScheme.paper(3), (0, 2, 0))
    24883200
    """
    if not spec.is_factorial:
        return spec.constant
    n = first_open_index(scheme, prefix)
    if n is None:
        return NeedsDepth(k_value(2 ** (scheme.depth + 1)))
    if n >= scheme.depth:
        return NeedsDepth(k_value(2 ** (n + 1)))
    return k_value(2 ** (n + 1) + prefix[n])


def forward_horizon(scheme: CoordinateScheme, prefix: Prefix) -> int:
    """Number of successor steps available before the orbit overflows."""
    return scheme.total - 1 - scheme.index(prefix)


class StopReason(enum.Enum):
    HORIZON_EXHAUSTED = "HorizonExhausted"
    OVERFLOW = "Overflow"
    UNDERFLOW = "Underflow"
    NEEDS_DEPTH = "NeedsDepth"
    LIMIT_REACHED = "LimitReached"


@dataclass
class SumTrace:
    """Birkhoff sums ``S_1 < S_2 < ...`` with the orbit point each one lands on.

    ``endpoints[k-1]`` is ``T^k x`` (forward) or ``T^{-k} x`` (backward), or
    None when that point is off the truncation. ``pending_bound`` is a
    certified lower bound on the next, unrecorded increment.
    """

    direction: str
    sums: list = field(default_factory=list)
    endpoints: list = field(default_factory=list)
    stop_reason: StopReason = StopReason.LIMIT_REACHED
    pending_bound: int | None = None

    def may_reach(self, top: Fraction, inclusive: bool = False) -> bool:
        """Whether a sum past the recorded ones could still be ``< top`` (``<=`` if inclusive)."""
        if self.stop_reason is StopReason.HORIZON_EXHAUSTED:
            return False
        if self.pending_bound is None:
            return True
        nxt = (self.sums[-1] if self.sums else 0) + self.pending_bound
        return nxt < top or (inclusive and nxt == top)


@dataclass(frozen=True)
class FlowPoint:
    base: tuple
    height: Fraction

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        object.__setattr__(self, "height", parse_fraction(self.height))


class SuspensionSystem:
    """The odometer with a ceiling, optionally conjugated by a coordinate relabeling.

    With relabeling ``R`` the base map is ``R T R^{-1}`` and the ceiling is
    ``f R^{-1}``.
    """

    def __init__(self, scheme: CoordinateScheme, ceiling: CeilingSpec, relabeling: Relabeling | None = None):
        ceiling.check_scheme(scheme)
        self.scheme = scheme
        self.ceiling = ceiling
        if relabeling is not None and relabeling.is_identity:
            relabeling = None
        self.relabeling = relabeling
        self._inverse = relabeling.inverse() if relabeling is not None else None

    @property
    def is_plain_odometer(self) -> bool:
        return self.relabeling is None

    def _pull(self, p):
        return p if self._inverse is None else self._inverse(p)

    def _push(self, p):
        return p if self.relabeling is None else self.relabeling(p)

    def forward(self, p: Prefix) -> Prefix:
        return self._push(successor(self.scheme, self._pull(p)))

    def backward(self, p: Prefix) -> Prefix:
        return self._push(predecessor(self.scheme, self._pull(p)))

    def f(self, p: Prefix):
        return ceiling_value(self.ceiling, self.scheme, self._pull(p))

    def birkhoff_sums(self, prefix: Prefix, direction: str = "forward", max_steps: int | None = None,
                      until=None) -> SumTrace:
        """Sums along the orbit until a stop condition; ``until`` stops once a sum reaches it."""
        if direction not in ("forward", "backward"):
            raise DomainError(f"direction must be 'forward' or 'backward', got {direction!r}")
        if max_steps is not None and max_steps < 1:
            raise DomainError("max_steps must be at least 1")
        prefix = self.scheme.check(prefix)
        trace = SumTrace(direction)
        cur, total = prefix, 0
        while True:
            if max_steps is not None and len(trace.sums) >= max_steps:
                trace.stop_reason = StopReason.LIMIT_REACHED
                return trace
            if direction == "forward":
                v = self.f(cur)
                if isinstance(v, NeedsDepth):
                    trace.stop_reason, trace.pending_bound = StopReason.NEEDS_DEPTH, v.lower_bound
                    return trace
                try:
                    nxt = self.forward(cur)
                except OrbitOverflow:
                    nxt = None
            else:
                try:
                    nxt = self.backward(cur)
                except OrbitUnderflow:
                    trace.stop_reason = StopReason.UNDERFLOW
                    trace.pending_bound = self.ceiling.beyond_bound(self.scheme)
                    return trace
                v = self.f(nxt)
                if isinstance(v, NeedsDepth):
                    trace.stop_reason, trace.pending_bound = StopReason.NEEDS_DEPTH, v.lower_bound
                    return trace
            total += v
            trace.sums.append(total)
            trace.endpoints.append(nxt)
            if until is not None and total >= until:
                trace.stop_reason = StopReason.HORIZON_EXHAUSTED
                return trace
            if nxt is None:
                trace.stop_reason = StopReason.OVERFLOW
                trace.pending_bound = self.ceiling.beyond_bound(self.scheme)
                return trace
            cur = nxt

    def point(self, base: Prefix, height) -> FlowPoint:
        """A validated point ``(base, height)`` with ``0 <= height < f(base)``."""
        base = self.scheme.check(base)
        height = parse_fraction(height)
        v = self.f(base)
        top = v.lower_bound if isinstance(v, NeedsDepth) else v
        if not 0 <= height < top:
            raise DomainError(f"height {height} not in [0, {top}) over {base}")
        return FlowPoint(base, height)

    def flow(self, point: FlowPoint, t) -> FlowPoint:
        """Exact image of ``point`` under the flow for time ``t``."""
        t = parse_fraction(t)
        cur, h = point.base, point.height + t
        if t >= 0:
            while True:
                v = self.f(cur)
                if isinstance(v, NeedsDepth):
                    if h < v.lower_bound:
                        break
                    raise HorizonExceeded(f"ceiling over {cur} needs a deeper coordinate", cur, h)
                if h < v:
                    break
                h -= v
                try:
                    cur = self.forward(cur)
                except OrbitOverflow:
                    raise HorizonExceeded(f"orbit leaves the truncation after {cur}", cur, h) from None
        else:
            while h < 0:
                try:
                    prev = self.backward(cur)
                except OrbitUnderflow:
                    raise HorizonExceeded(f"{cur} has no predecessor at this depth", cur, h) from None
                v = self.f(prev)
                if isinstance(v, NeedsDepth):
                    raise HorizonExceeded(f"ceiling over {prev} needs a deeper coordinate", cur, h)
                cur, h = prev, h + v
        return FlowPoint(cur, h)


def birkhoff_sums(spec: CeilingSpec, scheme: CoordinateScheme, prefix: Prefix, direction: str = "forward",
                  max_steps: int | None = None, until=None) -> SumTrace:
    return SuspensionSystem(scheme, spec).birkhoff_sums(prefix, direction, max_steps, until)


def flow_apply(spec: CeilingSpec, scheme: CoordinateScheme, point: FlowPoint, t) -> FlowPoint:
    return SuspensionSystem(scheme, spec).flow(point, t)


class OrbitTable:
    """Ceiling values of every prefix in odometer order, with prefix sums.

    Because the odometer walks the prefixes in index order, the forward sums
    from index ``i`` are ``P[j] - P[i]`` and the backward sums are
    ``P[i] - P[j]``, so window scans reduce to bisection on ``P``.

    With ``clip`` set, ceiling values at or above ``clip`` are stored as
    ``clip``: any sum containing one is still ``>= clip``, which is all a scan
    with window tops below ``clip`` needs.
    """

    def __init__(self, scheme: CoordinateScheme, ceiling: CeilingSpec, clip: int | None = None):
        ceiling.check_scheme(scheme)
        self.scheme = scheme
        self.ceiling = ceiling
        self.clip = clip
        total = scheme.total
        values, bounds = [], {}
        for i, p in enumerate(scheme.prefixes()):
            v = ceiling_value(ceiling, scheme, p)
            if isinstance(v, NeedsDepth):
                values.append(None)
                bounds[i] = v.lower_bound if clip is None else min(v.lower_bound, clip)
            else:
                values.append(v if clip is None else min(v, clip))
        self.values = values
        self.bounds = bounds
        beyond = ceiling.beyond_bound(scheme)
        self.beyond = beyond if clip is None else min(beyond, clip)
        sums = [0] * (total + 1)
        acc = 0
        for i, v in enumerate(values):
            acc += v or 0
            sums[i + 1] = acc
        self.sums = sums
        nxt = [total] * (total + 1)
        for i in range(total - 1, -1, -1):
            nxt[i] = i if values[i] is None else nxt[i + 1]
        self.next_undetermined = nxt
        prv = [-1] * (total + 1)
        last = -1
        for i in range(total + 1):
            prv[i] = last
            if i < total and values[i] is None:
                last = i
        self.prev_undetermined = prv

    @property
    def total(self) -> int:
        return self.scheme.total

    def forward_span(self, i: int):
        """``(hi, pending)``: sums ``P[j]-P[i]`` for ``j`` in ``i+1..hi`` are determined.

        Endpoint index ``j == total`` means the endpoint is off the truncation.
        """
        stop = self.next_undetermined[i]
        if stop < self.total:
            return stop, self.bounds[stop]
        return self.total, self.beyond

    def backward_span(self, i: int):
        """``(lo, pending)``: sums ``P[i]-P[j]`` for ``j`` in ``lo..i-1`` are determined."""
        stop = self.prev_undetermined[i]
        if stop >= 0:
            return stop + 1, self.bounds[stop]
        return 0, self.beyond

    def forward_hits(self, i: int, lo, hi, lo_closed=False, hi_closed=False):
        """Endpoint indices ``j`` whose forward sum from ``i`` lies in the window."""
        top, _ = self.forward_span(i)
        base = self.sums[i]
        a = (bisect_left if lo_closed else bisect_right)(self.sums, base + lo, i + 1, top + 1)
        b = (bisect_right if hi_closed else bisect_left)(self.sums, base + hi, i + 1, top + 1)
        return range(a, b)

    def backward_hits(self, i: int, lo, hi, lo_closed=False, hi_closed=False):
        """Endpoint indices ``j`` whose backward sum ``P[i]-P[j]`` lies in the window."""
        bottom, _ = self.backward_span(i)
        base = self.sums[i]
        # P[i]-P[j] in window  <=>  P[j] in (base-hi, base-lo) with mirrored closedness
        a = (bisect_left if hi_closed else bisect_right)(self.sums, base - hi, bottom, i)
        b = (bisect_right if lo_closed else bisect_left)(self.sums, base - lo, bottom, i)
        return range(a, b)
