"""Return-time statistics on the suspension flow and the exhaustive checkers.

Everything here is computed by scanning every prefix of a truncated space.
Measures are exact; membership that the truncation cannot decide is kept
apart as ``undetermined_mass`` and never rounded either way.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import certify
from .ceiling import CeilingSpec, OrbitTable, SuspensionSystem, k_value
from .cocycle import LogValue, log_rn_value
from .errors import (
    BandExceedsCeiling,
    DepthMismatch,
    DomainError,
    NotMeasurePreserving,
    RangeUndecidableAtDepth,
    Undecidable,
)
from .intervals import Interval, IntervalUnion
from .space import (
    CoordinateScheme,
    CylinderSet,
    Relabeling,
    Weighting,
    boundary_mass,
    cylinder_measure,
)
from .windows import Window, window_from_log_scale

DIRECTIONS = ("forward", "backward", "both")


def _directions(window: Window, directions: str | None) -> tuple:
    if directions is None:
        directions = "both" if window.mirrored else "forward"
    if directions not in DIRECTIONS:
        raise DomainError(f"directions must be one of {DIRECTIONS}, got {directions!r}")
    return ("forward", "backward") if directions == "both" else (directions,)


def floor_log2(n: int) -> int:
    return int(n).bit_length() - 1


@lru_cache(maxsize=8)
def orbit_table(scheme: CoordinateScheme, ceiling: CeilingSpec, clip: int | None = None) -> OrbitTable:
    return OrbitTable(scheme, ceiling, clip)


@dataclass
class ReturnReport:
    window: Window
    directions: tuple
    member_set: CylinderSet
    measure: Fraction
    forward: CylinderSet | None
    backward: CylinderSet | None
    forward_measure: Fraction | None
    backward_measure: Fraction | None
    undetermined: CylinderSet
    undetermined_mass: Fraction
    boundary_mass: Fraction


def _scan_table(table: OrbitTable, a0: CylinderSet, window: Window, direction: str):
    scheme = table.scheme
    total = scheme.total
    in_a0 = bytearray(total)
    for m in a0.members:
        in_a0[scheme.index(m)] = 1
    lo, hi, lc, hc = window.lo, window.hi, window.lo_closed, window.hi_closed
    sums = table.sums
    members, unknown = [], []
    for m in a0.members:
        i = scheme.index(m)
        if direction == "forward":
            hits = table.forward_hits(i, lo, hi, lc, hc)
            stop, pending = table.forward_span(i)
            last = sums[stop] - sums[i]
        else:
            hits = table.backward_hits(i, lo, hi, lc, hc)
            stop, pending = table.backward_span(i)
            last = sums[i] - sums[stop]
        if any(j < total and in_a0[j] for j in hits):
            members.append(m)
            continue
        off_edge = len(hits) > 0 and hits[-1] == total
        nxt = last + pending
        if off_edge or nxt < hi or (hc and nxt == hi):
            unknown.append(m)
    return members, unknown


def _scan_orbits(system: SuspensionSystem, a0: CylinderSet, window: Window, direction: str):
    members, unknown = [], []
    for m in a0.members:
        trace = system.birkhoff_sums(m, direction, until=window.hi)
        hit = off_edge = False
        for s, end in zip(trace.sums, trace.endpoints):
            if window.contains(s):
                if end is None:
                    off_edge = True
                elif end in a0:
                    hit = True
                    break
        if hit:
            members.append(m)
        elif off_edge or trace.may_reach(window.hi, window.hi_closed):
            unknown.append(m)
    return members, unknown


def return_window_set(scheme: CoordinateScheme, spec: CeilingSpec, a0: CylinderSet, window: Window,
                      directions: str | None = None, *, relabeling: Relabeling | None = None,
                      engine: str = "auto", table: OrbitTable | None = None,
                      weighting: Weighting | None = None) -> ReturnReport:
    """Points of ``a0`` whose base orbit returns to ``a0`` at a flow time in ``window``.

    A point ``x`` is a forward member when some determined sum
    ``f(x) + ... + f(T^{k-1} x)`` lies in the window and ``T^k x`` is in
    ``a0``; backward members use ``f(T^{-1} x) + ... + f(T^{-k} x)`` and
    ``T^{-k} x``. ``directions`` defaults to both for mirrored windows.

    ``engine='table'`` uses prefix sums over the odometer order,
    ``engine='orbit'`` walks each orbit; ``auto`` picks the table unless a
    relabeling changes the dynamics.
    """
    if a0.depth != scheme.depth:
        raise DepthMismatch(f"set depth {a0.depth} vs scheme depth {scheme.depth}")
    dirs = _directions(window, directions)
    system = SuspensionSystem(scheme, spec, relabeling)
    if engine == "auto":
        engine = "table" if system.is_plain_odometer else "orbit"
    if engine == "table" and not system.is_plain_odometer:
        raise DomainError("the table engine only follows the plain odometer")
    if engine not in ("table", "orbit"):
        raise DomainError(f"unknown engine {engine!r}")
    if engine == "table" and table is None:
        table = orbit_table(scheme, spec)

    per_dir, unknown = {}, set()
    for d in dirs:
        if engine == "table":
            mem, unk = _scan_table(table, a0, window, d)
        else:
            mem, unk = _scan_orbits(system, a0, window, d)
        per_dir[d] = CylinderSet(scheme.depth, mem)
        unknown.update(unk)

    union = CylinderSet(scheme.depth)
    for s in per_dir.values():
        union = union | s
    undetermined = CylinderSet(scheme.depth, unknown) - union

    def meas(s):
        return None if s is None else cylinder_measure(scheme, s, weighting)

    return ReturnReport(
        window=window,
        directions=dirs,
        member_set=union,
        measure=meas(union),
        forward=per_dir.get("forward"),
        backward=per_dir.get("backward"),
        forward_measure=meas(per_dir.get("forward")),
        backward_measure=meas(per_dir.get("backward")),
        undetermined=undetermined,
        undetermined_mass=meas(undetermined),
        boundary_mass=boundary_mass(scheme),
    )


@dataclass
class RectangleReport:
    band: tuple
    window: Window
    fibers: dict  # prefix -> IntervalUnion of heights u
    measure: Fraction
    undetermined: CylinderSet
    undetermined_mass: Fraction


def rectangle_flow_window_measure(scheme: CoordinateScheme, spec: CeilingSpec, a0: CylinderSet, band,
                                  window: Window, directions: str | None = None, *,
                                  relabeling: Relabeling | None = None) -> RectangleReport:
    """Measure of ``{(x,u) in a0 x [a,b] : F_t(x,u) in a0 x [a,b] for some t in the window}``.

    Worked fiber by fiber: a return after ``k`` base steps with sum ``S``
    reaches the band from every ``u`` with ``S + [a-u, b-u]`` meeting the
    window (forward) or ``S + [u-b, u-a]`` meeting it (backward). ``k = 0``
    covers motion inside the starting fiber.
    """
    if a0.depth != scheme.depth:
        raise DepthMismatch(f"set depth {a0.depth} vs scheme depth {scheme.depth}")
    if window.log_scale is not None:
        raise DomainError("rectangle measures need a direct rational window; log-scale windows "
                          "are certified for integer times only")
    a, b = (Fraction(v) for v in band)
    if not 0 <= a < b:
        raise DomainError(f"band needs 0 <= a < b, got [{a}, {b}]")
    system = SuspensionSystem(scheme, spec, relabeling)
    for m in a0.members:
        v = system.f(m)
        top = v if isinstance(v, int) else v.lower_bound
        if b > top:
            raise BandExceedsCeiling(f"band top {b} exceeds ceiling {top} over {m}")
    dirs = _directions(window, directions)
    diam = b - a
    lo, hi, lc, hc = window.lo, window.hi, window.lo_closed, window.hi_closed
    strip = Interval(a, b)
    fibers, unknown = {}, []
    for m in a0.sorted_members():
        got = IntervalUnion()
        unsure = False
        for d in dirs:
            trace = system.birkhoff_sums(m, d, until=hi + diam)
            steps = [(0, m)] + list(zip(trace.sums, trace.endpoints))
            for s, end in steps:
                if d == "forward":
                    piece = Interval(s + a - hi, s + b - lo, hc, lc)
                else:
                    piece = Interval(lo + a - s, hi + b - s, lc, hc)
                piece = piece.intersect(strip)
                if piece.empty:
                    continue
                if end is None:
                    unsure = True
                elif end in a0:
                    got.add(piece)
            if trace.may_reach(hi + diam, hc):
                unsure = True
        fibers[m] = got
        if unsure and got.measure < diam:
            unknown.append(m)
    total = sum((scheme.prefix_measure(m) * u.measure for m, u in fibers.items()), Fraction(0))
    undetermined = CylinderSet(scheme.depth, unknown)
    return RectangleReport((a, b), window, fibers, total, undetermined,
                           cylinder_measure(scheme, undetermined))


@dataclass
class InclusionReport:
    """Both set inclusions linking return sets on the base with rectangle sets on the flow."""

    window: Window
    widened: Window
    lambda_report: RectangleReport
    delta_report: ReturnReport
    lambda_in_delta: bool
    delta_in_lambda: bool


def rectangle_inclusions(scheme: CoordinateScheme, spec: CeilingSpec, a0: CylinderSet, band, window: Window,
                      directions: str | None = None) -> InclusionReport:
    """Check ``Lambda(W) c Delta(W+d) x band`` and ``Delta(W) x band c Lambda(W+d)``, ``d`` = band diameter.

    Returns in a window ``W`` measured from heights inside the band differ
    from base-to-base return times by at most the band diameter, which is
    what both inclusions encode. They are checked as exact set inclusions of
    interval unions fiber by fiber.
    """
    a, b = (Fraction(v) for v in band)
    widened = window.widen(b - a)
    lam = rectangle_flow_window_measure(scheme, spec, a0, band, window, directions)
    delta_wide = return_window_set(scheme, spec, a0, widened, directions, engine="orbit")
    full_band = IntervalUnion([Interval(a, b)])
    lambda_in_delta = all(
        u.empty or (m in delta_wide.member_set and u.issubset(full_band)) for m, u in lam.fibers.items()
    )
    delta = return_window_set(scheme, spec, a0, window, directions, engine="orbit")
    lam_wide = rectangle_flow_window_measure(scheme, spec, a0, band, widened, directions)
    delta_in_lambda = all(full_band.issubset(lam_wide.fibers[m]) for m in delta.member_set.members)
    return InclusionReport(window, widened, lam, delta_wide, lambda_in_delta, delta_in_lambda)


@dataclass(frozen=True)
class ViolationRecord:
    """A sum in ``[K_n, K_{n+1})`` whose forced-coordinate claim fails at ``prefix``."""

    prefix: tuple
    direction: str
    k: int
    n: int
    total: int
    variant: str
    expected_index: int
    expected_value: int
    observed_value: int

    @property
    def signed_k(self) -> int:
        return self.k if self.direction == "forward" else -self.k

    def recheck(self) -> bool:
        """Re-derive the record from the definitions; True when it is a genuine violation."""
        scheme = CoordinateScheme.paper(len(self.prefix))
        trace = SuspensionSystem(scheme, CeilingSpec.factorial()).birkhoff_sums(
            self.prefix, self.direction, max_steps=self.k
        )
        if len(trace.sums) < self.k or trace.sums[self.k - 1] != self.total:
            return False
        in_interval = k_value(self.n) <= self.total < k_value(self.n + 1)
        return in_interval and self.prefix[self.expected_index - 1] != self.expected_value


VARIANTS = ("printed", "corrected")


def _forced_coordinate(n: int, variant: str):
    m = floor_log2(n)
    return (m if variant == "corrected" else m + 1), n - 2 ** m


def prop51_check(depth: int, variant: str = "corrected") -> list:
    """Every determined sum in ``[K_n, K_{n+1})`` against the coordinate it forces.

    The ``corrected`` claim is ``x_m = n - 2^m`` with ``m = floor(log2 n)``;
    the ``printed`` claim tests coordinate ``m + 1`` instead. Claims about a
    coordinate past ``depth`` are skipped. Records come out sorted by prefix,
    forward before backward, then by ``k``.
    """
    if variant not in VARIANTS:
        raise DomainError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if depth < 3:
        raise DomainError("the exhaustive check needs depth >= 3")
    scheme = CoordinateScheme.paper(depth)
    table = orbit_table(scheme, CeilingSpec.factorial())
    sums = table.sums
    ks, n = [], 4
    while not ks or ks[-1] <= sums[-1]:
        ks.append(k_value(n))
        n += 1

    def n_of(value):
        return 3 + bisect_right(ks, value)

    records = []
    for prefix in sorted(scheme.prefixes()):
        i = scheme.index(prefix)
        top, _ = table.forward_span(i)
        j = i + 1
        while j <= top:
            n = n_of(sums[j] - sums[i])
            end = bisect_left(sums, sums[i] + k_value(n + 1), j, top + 1)
            idx, val = _forced_coordinate(n, variant)
            if idx <= depth and prefix[idx - 1] != val:
                records.extend(
                    ViolationRecord(prefix, "forward", jj - i, n, sums[jj] - sums[i], variant, idx, val,
                                    prefix[idx - 1])
                    for jj in range(j, end)
                )
            j = end
        bottom, _ = table.backward_span(i)
        j = i - 1
        while j >= bottom:
            n = n_of(sums[i] - sums[j])
            end = bisect_right(sums, sums[i] - k_value(n + 1), bottom, j + 1)
            idx, val = _forced_coordinate(n, variant)
            if idx <= depth and prefix[idx - 1] != val:
                records.extend(
                    ViolationRecord(prefix, "backward", i - jj, n, sums[i] - sums[jj], variant, idx, val,
                                    prefix[idx - 1])
                    for jj in range(j, end - 1, -1)
                )
            j = end - 1
    return records


@dataclass(frozen=True)
class BoundRow:
    n: int
    m: int
    forward: Fraction
    backward: Fraction
    corrected_bound: Fraction
    printed_bound: Fraction
    undetermined: Fraction

    @property
    def forward_ok_corrected(self) -> bool:
        return self.forward <= self.corrected_bound

    @property
    def forward_ok_printed(self) -> bool:
        return self.forward <= self.printed_bound

    @property
    def backward_ok_corrected(self) -> bool:
        return self.backward <= self.corrected_bound

    @property
    def backward_ok_printed(self) -> bool:
        return self.backward <= self.printed_bound


def _check_decidable(depth: int, n: int):
    if n < 4:
        raise DomainError(f"K-intervals start at n = 4, got {n}")
    if n + 1 > 2 ** (depth + 1):
        raise RangeUndecidableAtDepth(
            f"[K_{n}, K_{n + 1}) is not decidable at depth {depth}; need n + 1 <= {2 ** (depth + 1)}"
        )


def interval_bound_report(depth: int, n_range) -> list:
    """Measures of ``{x : some sum lies in [K_n, K_{n+1})}`` against ``2^-m`` and ``2^-(m+1)``."""
    ns = list(n_range)
    for n in ns:
        _check_decidable(depth, n)
    scheme = CoordinateScheme.paper(depth)
    spec = CeilingSpec.factorial()
    table = orbit_table(scheme, spec, k_value(max(ns) + 1) if ns else None)
    full = CylinderSet.full(scheme)
    rows = []
    for n in ns:
        rep = return_window_set(scheme, spec, full, Window.k_interval(n), "both", table=table)
        m = floor_log2(n)
        rows.append(BoundRow(n, m, rep.forward_measure, rep.backward_measure, Fraction(1, 2 ** m),
                             Fraction(1, 2 ** (m + 1)), rep.undetermined_mass))
    return rows


@dataclass(frozen=True)
class DecayRow:
    label: str
    window: Window
    forward: Fraction
    backward: Fraction
    union: Fraction
    envelope: Fraction | None
    undetermined: Fraction
    intervals_met: tuple

    @property
    def within_envelope(self) -> bool:
        return self.envelope is None or self.union <= self.envelope


def k_intervals_met(window: Window) -> tuple:
    """The ``n >= 4`` whose ``[K_n, K_{n+1})`` meets the window's positive part."""
    out, n = [], 4
    while not window.above_top(k_value(n)):
        if k_value(n + 1) > window.lo:
            out.append(n)
        n += 1
    return tuple(out)


def _decay_row(args):
    scheme, spec, a0, label, window, clip = args
    table = orbit_table(scheme, spec, clip)
    rep = return_window_set(scheme, spec, a0, window, "both", table=table)
    met = k_intervals_met(window) if spec.is_factorial else ()
    if spec.is_factorial:
        envelope = sum((Fraction(2, 2 ** floor_log2(n)) for n in met), Fraction(0))
    else:
        envelope = None
    return DecayRow(label, window, rep.forward_measure, rep.backward_measure, rep.measure, envelope,
                    rep.undetermined_mass, met)


def decay_table(scheme: CoordinateScheme, spec: CeilingSpec, family: str, grid, *, a0: CylinderSet | None = None,
                delta=None, cap: int = certify.DEFAULT_PRECISION_CAP, jobs: int = 1) -> list:
    """One row per grid point: return-set measures for a family of windows.

    ``family='k-intervals'`` takes integers ``n`` and the windows
    ``[K_n, K_{n+1})``; ``family='log-scale'`` takes rationals ``s`` and the
    certified windows for ``(e^{s-delta}, e^{s+delta})``. Both directions are
    always scanned. The envelope is the sum of ``2^{1-floor(log2 n)}`` over
    the K-intervals a window meets (factorial ceiling only).
    """
    if a0 is None:
        a0 = CylinderSet.full(scheme)
    items = []
    for g in grid:
        if family == "k-intervals":
            n = int(g)
            if spec.is_factorial:
                _check_decidable(scheme.depth, n)
            items.append((str(n), Window.k_interval(n, mirrored=True)))
        elif family == "log-scale":
            if delta is None:
                raise DomainError("the log-scale family needs delta")
            w = window_from_log_scale(g, delta, cap)
            if spec.is_factorial and w.hi > k_value(2 ** (scheme.depth + 1)):
                raise RangeUndecidableAtDepth(f"window {w.label()} reaches past K_{2 ** (scheme.depth + 1)}")
            items.append((f"s={w.log_scale[0]}", w))
        else:
            raise DomainError(f"unknown window family {family!r}")
    clip = None
    if spec.is_factorial and items:
        clip = int(max(w.hi for _, w in items)) + 1
    tasks = [(scheme, spec, a0, label, w, clip) for label, w in items]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_decay_row, tasks))
    return [_decay_row(t) for t in tasks]


@dataclass
class PropAReport:
    window: Window
    set: CylinderSet
    measure: Fraction
    base_measure: Fraction
    pairs_checked: int
    eta: Fraction | None = None

    @property
    def relative(self) -> Fraction:
        return self.measure / self.base_measure if self.base_measure else Fraction(0)

    @property
    def exceeds_threshold(self) -> bool | None:
        return None if self.eta is None else self.measure > self.eta * self.base_measure


def _log_in_window(value: LogValue, window: Window, cap: int) -> bool:
    if window.log_scale is not None:
        s, d, _ = window.log_scale
        return value.compare_exp(s - d, cap) > 0 and value.compare_exp(s + d, cap) < 0
    c_lo = value.compare(window.lo, cap)
    c_hi = value.compare(window.hi, cap)
    above = c_lo > 0 or (window.lo_closed and c_lo == 0)
    below = c_hi < 0 or (window.hi_closed and c_hi == 0)
    return above and below


def prop_a_window_set(scheme: CoordinateScheme, a: CylinderSet, window: Window, *,
                      cap: int = certify.DEFAULT_PRECISION_CAP, eta=None) -> PropAReport:
    """``{x in a : log(mu(y)/mu(x)) in the window (or its mirror) for some y in a}``.

    At a fixed depth every pair of prefixes is tail-equivalent, so the scan is
    over all of ``a x a``. Comparisons against the window are certified; an
    unresolvable one raises Undecidable naming the pair.
    """
    if a.depth != scheme.depth:
        raise DepthMismatch(f"set depth {a.depth} vs scheme depth {scheme.depth}")
    cache = {}

    def inside(v: LogValue) -> bool:
        if v not in cache:
            cache[v] = _log_in_window(v, window, cap) or (window.mirrored and _log_in_window(-v, window, cap))
        return cache[v]

    members, pairs = [], 0
    order = a.sorted_members()
    for x in order:
        for y in order:
            pairs += 1
            v = log_rn_value(scheme, x, y)
            try:
                hit = inside(v)
            except Undecidable as exc:
                raise Undecidable(f"{exc} for pair x={x}, y={y}", detail=(x, y)) from exc
            if hit:
                members.append(x)
                break
    result = CylinderSet(scheme.depth, members)
    return PropAReport(window, result, cylinder_measure(scheme, result), cylinder_measure(scheme, a), pairs,
                       None if eta is None else Fraction(eta))


@dataclass
class ConjugacyReport:
    original_measure: Fraction
    conjugated_measure: Fraction | None = None
    original_set: CylinderSet | None = None
    conjugated_set: CylinderSet | None = None
    weighted_measure: Fraction | None = None
    density_bound: Fraction | None = None
    notes: list = field(default_factory=list)

    @property
    def equal(self) -> bool | None:
        if self.conjugated_measure is None:
            return None
        return self.original_measure == self.conjugated_measure

    @property
    def dominated(self) -> bool | None:
        if self.weighted_measure is None:
            return None
        return self.weighted_measure <= self.density_bound * self.original_measure

    @property
    def ok(self) -> bool:
        return self.equal is not False and self.dominated is not False


def conjugacy_consistency(scheme: CoordinateScheme, spec: CeilingSpec, a0: CylinderSet, window: Window, *,
                          relabeling: Relabeling | None = None, weighting: Weighting | None = None,
                          conjugate_ceiling: CeilingSpec | None = None,
                          directions: str | None = None) -> ConjugacyReport:
    """Compare the return-set measure with its image under a relabeling or a reweighting.

    With ``relabeling`` R, the second system runs ``R T R^{-1}`` with ceiling
    ``f R^{-1}`` (or ``conjugate_ceiling``, for negative controls) on
    ``R(a0)`` and is scanned orbit by orbit, independently of the first.
    With ``weighting``, reports the reweighted measure of the return set and
    the bound ``max density on a0 x base measure``.
    """
    base = return_window_set(scheme, spec, a0, window, directions)
    report = ConjugacyReport(base.measure, original_set=base.member_set)
    if relabeling is not None:
        if not relabeling.measure_preserving:
            raise NotMeasurePreserving("the relabeling moves probability mass between symbols")
        other_spec = conjugate_ceiling or spec
        image = relabeling(a0)
        conj = return_window_set(scheme, other_spec, image, window, directions, relabeling=relabeling,
                                 engine="orbit")
        report.conjugated_measure = conj.measure
        report.conjugated_set = conj.member_set
        if conj.undetermined_mass or base.undetermined_mass:
            report.notes.append("undetermined mass present; equality covers determined points only")
    if weighting is not None:
        report.weighted_measure = cylinder_measure(scheme, base.member_set, weighting)
        report.density_bound = weighting.max_on(a0)
    return report
