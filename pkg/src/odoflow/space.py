"""Truncated product spaces, the odometer, and exact cylinder-set measures.

Prefixes are plain tuples of ints. Coordinate indices exposed to callers are
1-based (coordinate ``n`` is ``prefix[n - 1]``) so they line up with the
usual ``x = (x_1, x_2, ...)`` notation; everything else is ordinary Python
indexing.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import ArityMismatch, DepthMismatch, DomainError, OrbitOverflow, OrbitUnderflow

Prefix = tuple


def parse_fraction(text) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or a number into an exact Fraction.

    Floats are rejected; they would smuggle binary rounding into measures.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool) or isinstance(text, float):
        raise DomainError(f"expected an exact rational, got {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    text = str(text).strip()
    if "." in text or "e" in text.lower():
        raise DomainError(f"expected 'p/q', got {text!r}")
    return Fraction(text)


def format_fraction(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class CoordinateScheme:
    """Per-coordinate alphabet sizes with exact probability vectors."""

    sizes: tuple
    probs: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        probs = tuple(tuple(parse_fraction(p) for p in vec) for vec in self.probs)
        if not sizes:
            raise DomainError("a scheme needs at least one coordinate")
        if len(probs) != len(sizes):
            raise DepthMismatch(f"{len(sizes)} sizes but {len(probs)} probability vectors")
        for n, (size, vec) in enumerate(zip(sizes, probs), start=1):
            if size < 2:
                raise DomainError(f"coordinate {n}: alphabet size {size} < 2")
            if len(vec) != size:
                raise ArityMismatch(f"coordinate {n}: {len(vec)} probabilities for {size} symbols")
            if any(p <= 0 for p in vec):
                raise DomainError(f"coordinate {n}: probabilities must be positive")
            if sum(vec) != 1:
                raise DomainError(f"coordinate {n}: probabilities sum to {sum(vec)}, not 1")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def paper(cls, depth: int) -> "CoordinateScheme":
        """Sizes ``2**n`` with uniform probabilities, coordinates ``1..depth``."""
        if depth < 1:
            raise DomainError("depth must be positive")
        sizes = tuple(2 ** n for n in range(1, depth + 1))
        return cls(sizes, tuple((Fraction(1, s),) * s for s in sizes))

    @classmethod
    def bernoulli(cls, lam, depth: int) -> "CoordinateScheme":
        lam = parse_fraction(lam)
        if not 0 < lam < 1:
            raise DomainError(f"Bernoulli parameter must lie in (0, 1), got {lam}")
        if depth < 1:
            raise DomainError("depth must be positive")
        return cls((2,) * depth, ((lam, 1 - lam),) * depth)

    @classmethod
    def uniform(cls, sizes: Sequence[int]) -> "CoordinateScheme":
        return cls(tuple(sizes), tuple((Fraction(1, s),) * s for s in sizes))

    @property
    def depth(self) -> int:
        return len(self.sizes)

    @property
    def total(self) -> int:
        return math.prod(self.sizes)

    @property
    def is_paper(self) -> bool:
        return self == CoordinateScheme.paper(self.depth)

    @property
    def is_uniform(self) -> bool:
        return all(len(set(vec)) == 1 for vec in self.probs)

    @property
    def zero_word(self) -> Prefix:
        return (0,) * self.depth

    @property
    def full_word(self) -> Prefix:
        return tuple(s - 1 for s in self.sizes)

    def check(self, prefix: Iterable[int]) -> Prefix:
        prefix = tuple(prefix)
        if len(prefix) != self.depth:
            raise DepthMismatch(f"prefix {prefix} has length {len(prefix)}, scheme depth is {self.depth}")
        for n, (v, s) in enumerate(zip(prefix, self.sizes), start=1):
            if not 0 <= v < s:
                raise DomainError(f"coordinate {n} of {prefix} outside 0..{s - 1}")
        return prefix

    def index(self, prefix: Prefix) -> int:
        """Mixed-radix index, first coordinate least significant."""
        idx = 0
        for v, s in zip(reversed(prefix), reversed(self.sizes)):
            idx = idx * s + v
        return idx

    def prefix_at(self, index: int) -> Prefix:
        if not 0 <= index < self.total:
            raise DomainError(f"index {index} outside 0..{self.total - 1}")
        out = []
        for s in self.sizes:
            index, v = divmod(index, s)
            out.append(v)
        return tuple(out)

    def prefixes(self) -> Iterator[Prefix]:
        """All prefixes in odometer order (the order ``successor`` visits them)."""
        for rev in itertools.product(*(range(s) for s in reversed(self.sizes))):
            yield rev[::-1]

    def prefix_measure(self, prefix: Prefix) -> Fraction:
        return math.prod((vec[v] for vec, v in zip(self.probs, prefix)), start=Fraction(1))

    def to_json(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "probs": [[format_fraction(p) for p in vec] for vec in self.probs],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CoordinateScheme":
        return cls(tuple(data["sizes"]), tuple(tuple(parse_fraction(p) for p in vec) for vec in data["probs"]))


def first_open_index(scheme: CoordinateScheme, prefix: Prefix):
    """Smallest 1-based ``n`` with ``prefix[n-1] < z_n``, or None when every coordinate is full."""
    for n, (v, s) in enumerate(zip(prefix, scheme.sizes), start=1):
        if v < s - 1:
            return n
    return None


def successor(scheme: CoordinateScheme, prefix: Prefix) -> Prefix:
    """Odometer step: add one at the first coordinate with carry.

    Raises OrbitOverflow on the all-full word.
    """
    n = first_open_index(scheme, prefix)
    if n is None:
        raise OrbitOverflow(f"{prefix} is the maximal word at depth {scheme.depth}")
    return (0,) * (n - 1) + (prefix[n - 1] + 1,) + tuple(prefix[n:])


def predecessor(scheme: CoordinateScheme, prefix: Prefix) -> Prefix:
    for n, v in enumerate(prefix):
        if v > 0:
            return tuple(s - 1 for s in scheme.sizes[:n]) + (v - 1,) + tuple(prefix[n + 1:])
    raise OrbitUnderflow(f"{prefix} is the minimal word at depth {scheme.depth}")


class CylinderSet:
    """A finite union of depth-``M`` cylinders, held as a set of prefixes."""

    __slots__ = ("depth", "_members")

    def __init__(self, depth: int, members: Iterable[Prefix] = ()):
        self.depth = int(depth)
        mem = frozenset(tuple(m) for m in members)
        for m in mem:
            if len(m) != self.depth:
                raise DepthMismatch(f"member {m} does not have depth {self.depth}")
        self._members = mem

    @classmethod
    def full(cls, scheme: CoordinateScheme) -> "CylinderSet":
        return cls(scheme.depth, scheme.prefixes())

    @classmethod
    def where(cls, scheme: CoordinateScheme, constraints: Mapping[int, object] | None = None,
              predicate: Callable[[Prefix], bool] | None = None) -> "CylinderSet":
        """Prefixes meeting every ``{coordinate: value or collection of values}`` constraint.

        >>> s = CoordinateScheme.paper(3)
        >>> len(CylinderSet.where(s, {1: 0, 2: 0}))
        8
        """
        allowed = {}
        for n, v in (constraints or {}).items():
            if not 1 <= n <= scheme.depth:
                raise DomainError(f"coordinate {n} outside 1..{scheme.depth}")
            allowed[n - 1] = {v} if isinstance(v, int) else set(v)
        members = (
            p for p in scheme.prefixes()
            if all(p[i] in vals for i, vals in allowed.items()) and (predicate is None or predicate(p))
        )
        return cls(scheme.depth, members)

    @property
    def members(self) -> frozenset:
        return self._members

    def sorted_members(self) -> list:
        return sorted(self._members)

    def __contains__(self, prefix) -> bool:
        return tuple(prefix) in self._members

    def __iter__(self):
        return iter(self.sorted_members())

    def __len__(self) -> int:
        return len(self._members)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CylinderSet):
            return NotImplemented
        return self.depth == other.depth and self._members == other._members

    def __hash__(self):
        return hash((self.depth, self._members))

    def __repr__(self) -> str:
        return f"CylinderSet(depth={self.depth}, size={len(self)})"

    def _same_depth(self, other: "CylinderSet"):
        if other.depth != self.depth:
            raise DepthMismatch(f"depths {self.depth} and {other.depth} differ")

    def __or__(self, other: "CylinderSet") -> "CylinderSet":
        self._same_depth(other)
        return CylinderSet(self.depth, self._members | other._members)

    def __and__(self, other: "CylinderSet") -> "CylinderSet":
        self._same_depth(other)
        return CylinderSet(self.depth, self._members & other._members)

    def __sub__(self, other: "CylinderSet") -> "CylinderSet":
        self._same_depth(other)
        return CylinderSet(self.depth, self._members - other._members)

    def __le__(self, other: "CylinderSet") -> bool:
        self._same_depth(other)
        return self._members <= other._members

    union = __or__
    intersection = __and__
    difference = __sub__
    issubset = __le__

    def complement(self, scheme: CoordinateScheme) -> "CylinderSet":
        if scheme.depth != self.depth:
            raise DepthMismatch(f"set depth {self.depth} vs scheme depth {scheme.depth}")
        return CylinderSet.full(scheme) - self

    def image(self, fn: Callable[[Prefix], Prefix]) -> "CylinderSet":
        """Image under ``fn``; the caller guarantees ``fn`` is injective."""
        return CylinderSet(self.depth, (fn(m) for m in self._members))

    def to_json(self) -> dict:
        return {"depth": self.depth, "members": [list(m) for m in self.sorted_members()]}

    @classmethod
    def from_json(cls, data: Mapping) -> "CylinderSet":
        return cls(data["depth"], (tuple(m) for m in data["members"]))


@dataclass(frozen=True)
class Weighting:
    """A density constant on depth-``base_depth`` cylinders.

    ``density`` maps each depth-``base_depth`` prefix to a positive rational;
    prefixes not listed default to ``default``.
    """

    base_depth: int
    density: Mapping = field(default_factory=dict)
    default: Fraction = Fraction(1)

    def __post_init__(self):
        dens = {tuple(k): parse_fraction(v) for k, v in dict(self.density).items()}
        for k, v in dens.items():
            if len(k) != self.base_depth:
                raise DepthMismatch(f"density key {k} is not a depth-{self.base_depth} prefix")
            if v <= 0:
                raise DomainError(f"density at {k} must be positive, got {v}")
        default = parse_fraction(self.default)
        if default <= 0:
            raise DomainError("default density must be positive")
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "default", default)

    def at(self, prefix: Prefix) -> Fraction:
        return self.density.get(tuple(prefix[: self.base_depth]), self.default)

    def max_on(self, cset: CylinderSet) -> Fraction:
        """Largest density over the depth-``base_depth`` cylinders meeting ``cset``."""
        return max((self.at(m) for m in cset.members), default=Fraction(0))


def cylinder_measure(scheme: CoordinateScheme, cset: CylinderSet, weighting: Weighting | None = None) -> Fraction:
    """Exact (optionally reweighted) product measure of a cylinder set."""
    if cset.depth != scheme.depth:
        raise DepthMismatch(f"set depth {cset.depth} vs scheme depth {scheme.depth}")
    if weighting is not None and weighting.base_depth > cset.depth:
        raise DepthMismatch(f"weighting base depth {weighting.base_depth} exceeds set depth {cset.depth}")
    if weighting is None and scheme.is_uniform:
        return Fraction(len(cset), scheme.total)
    total = Fraction(0)
    for m in cset.members:
        mass = scheme.prefix_measure(m)
        total += mass if weighting is None else weighting.at(m) * mass
    return total


def boundary_mass(scheme: CoordinateScheme) -> Fraction:
    """Mass of the two truncation boundary words (all-zero and all-full)."""
    return scheme.prefix_measure(scheme.zero_word) + scheme.prefix_measure(scheme.full_word)


def _check_permutations(scheme: CoordinateScheme | None, perms) -> tuple:
    perms = tuple(tuple(int(v) for v in p) for p in perms)
    if scheme is not None:
        if len(perms) != scheme.depth:
            raise ArityMismatch(f"{len(perms)} permutations for depth {scheme.depth}")
        for n, (p, s) in enumerate(zip(perms, scheme.sizes), start=1):
            if len(p) != s:
                raise ArityMismatch(f"coordinate {n}: permutation of {len(p)} symbols, alphabet has {s}")
    for n, p in enumerate(perms, start=1):
        if sorted(p) != list(range(len(p))):
            raise ArityMismatch(f"coordinate {n}: {p} is not a bijection of 0..{len(p) - 1}")
    return perms


class Relabeling:
    """Per-coordinate symbol permutations; ``perms[n-1][v]`` is the image of symbol ``v``."""

    def __init__(self, scheme: CoordinateScheme, perms: Sequence[Sequence[int]]):
        self.scheme = scheme
        self.perms = _check_permutations(scheme, perms)
        inv = []
        for p in self.perms:
            q = [0] * len(p)
            for v, w in enumerate(p):
                q[w] = v
            inv.append(tuple(q))
        self.inverse_perms = tuple(inv)

    @classmethod
    def identity(cls, scheme: CoordinateScheme) -> "Relabeling":
        return cls(scheme, [range(s) for s in scheme.sizes])

    @classmethod
    def reverse_coordinates(cls, scheme: CoordinateScheme, coordinates: Iterable[int]) -> "Relabeling":
        """Reverse the symbol order ``v -> z_n - v`` on each listed (1-based) coordinate."""
        coords = set(coordinates)
        perms = [
            tuple(reversed(range(s))) if n in coords else tuple(range(s))
            for n, s in enumerate(scheme.sizes, start=1)
        ]
        return cls(scheme, perms)

    @property
    def is_identity(self) -> bool:
        return all(p == tuple(range(len(p))) for p in self.perms)

    @property
    def measure_preserving(self) -> bool:
        return all(
            vec[p[v]] == vec[v] for vec, p in zip(self.scheme.probs, self.perms) for v in range(len(p))
        )

    def inverse(self) -> "Relabeling":
        return Relabeling(self.scheme, self.inverse_perms)

    def __call__(self, target):
        return relabel(self.perms, target)


def relabel(perms, target):
    """Apply per-coordinate permutations to a prefix or a CylinderSet."""
    perms = _check_permutations(None, perms)
    if isinstance(target, CylinderSet):
        if len(perms) != target.depth:
            raise ArityMismatch(f"{len(perms)} permutations for depth {target.depth}")
        return target.image(lambda m: _apply(perms, m))
    target = tuple(target)
    if len(perms) != len(target):
        raise ArityMismatch(f"{len(perms)} permutations for a prefix of length {len(target)}")
    return _apply(perms, target)


def _apply(perms, prefix):
    try:
        return tuple(p[v] for p, v in zip(perms, prefix))
    except IndexError:
        raise ArityMismatch(f"prefix {prefix} leaves a permutation's domain") from None
