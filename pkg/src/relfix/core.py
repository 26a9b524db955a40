"""Base universe: object descriptors, points, multisets with omega multiplicities.

Objects are built from finite named base sets with tensor, product, bang and
box (coloured) constructors.  Points inhabit objects; multisets map points to
multiplicities in N+ ∪ {w}, where the single infinite value ``OMEGA`` absorbs
addition.  Eventually-periodic words (``LassoWord``) give a finite syntax for
countable multisets over a finite alphabet.

Everything here is immutable and hashable; all operations are pure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union


class _Omega:
    """The single countably-infinite multiplicity.  ``OMEGA + n == OMEGA``."""

    _instance: Optional["_Omega"] = None

    def __new__(cls) -> "_Omega":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "w"

    def __reduce__(self):
        return (_Omega, ())


OMEGA = _Omega()

#: A multiplicity: a non-negative int, or OMEGA.
Mult = Union[int, _Omega]


def is_omega(m: Mult) -> bool:
    return m is OMEGA


def madd(a: Mult, b: Mult) -> Mult:
    """Add multiplicities; OMEGA absorbs."""
    if a is OMEGA or b is OMEGA:
        return OMEGA
    return a + b


def mmul(a: Mult, b: Mult) -> Mult:
    """Multiply multiplicities; 0 * OMEGA == 0, n * OMEGA == OMEGA for n > 0."""
    if a == 0 or b == 0:
        return 0
    if a is OMEGA or b is OMEGA:
        return OMEGA
    return a * b


def mle(a: Mult, b: Mult) -> bool:
    """Pointwise order on multiplicities: every finite value is below OMEGA."""
    if b is OMEGA:
        return True
    if a is OMEGA:
        return False
    return a <= b


def mult_sort_key(m: Mult) -> tuple:
    return (1, 0) if m is OMEGA else (0, m)


# ---------------------------------------------------------------------------
# Object descriptors
# ---------------------------------------------------------------------------


class ObjectDesc:
    """Shape of an object: the type against which points are checked."""

    __slots__ = ()


@dataclass(frozen=True)
class Base(ObjectDesc):
    """A finite named base set; `elements` fixes the declaration order."""

    name: str
    elements: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.elements)) != len(self.elements):
            raise ValueError(f"duplicate elements in base {self.name!r}")


@dataclass(frozen=True)
class Unit(ObjectDesc):
    """The tensor unit; its only point is Star."""


@dataclass(frozen=True)
class Top(ObjectDesc):
    """The terminal object; it has no points."""


@dataclass(frozen=True)
class Tensor(ObjectDesc):
    left: ObjectDesc
    right: ObjectDesc


@dataclass(frozen=True)
class With(ObjectDesc):
    """Binary product; points are tagged In1/In2."""

    left: ObjectDesc
    right: ObjectDesc


@dataclass(frozen=True)
class Bang(ObjectDesc):
    """Exponential: points are multisets (finite or omega multiplicities)."""

    inner: ObjectDesc


@dataclass(frozen=True)
class Box(ObjectDesc):
    """Colour modality: points are colour-tagged points of `inner`.

    Colours range over {1, ..., colours}.
    """

    inner: ObjectDesc
    colours: int

    def __post_init__(self):
        if self.colours < 1:
            raise ValueError("box needs at least one colour")


# ---------------------------------------------------------------------------
# Points
# ---------------------------------------------------------------------------


class Point:
    """An element of the interpretation of an object."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Point):
    name: str


@dataclass(frozen=True)
class Star(Point):
    """The unique point of Unit."""


@dataclass(frozen=True)
class Pair(Point):
    left: Point
    right: Point


@dataclass(frozen=True)
class In1(Point):
    value: Point


@dataclass(frozen=True)
class In2(Point):
    value: Point


@dataclass(frozen=True)
class Bag(Point):
    """A multiset seen as a point of a Bang object."""

    multiset: "Multiset"


@dataclass(frozen=True)
class Coloured(Point):
    colour: int
    value: Point

    def __post_init__(self):
        if self.colour < 1:
            raise ValueError("colours start at 1")


STAR = Star()


def point_sort_key(p: Point) -> tuple:
    """Structural total order on points (atoms by name).

    Used for canonical multiset entry order and deterministic output.
    """
    if isinstance(p, Atom):
        return (0, p.name)
    if isinstance(p, Star):
        return (1,)
    if isinstance(p, Pair):
        return (2, point_sort_key(p.left), point_sort_key(p.right))
    if isinstance(p, In1):
        return (3, point_sort_key(p.value))
    if isinstance(p, In2):
        return (4, point_sort_key(p.value))
    if isinstance(p, Bag):
        return (5, tuple((point_sort_key(q), mult_sort_key(m)) for q, m in p.multiset.items()))
    if isinstance(p, Coloured):
        return (6, p.colour, point_sort_key(p.value))
    raise TypeError(f"not a point: {p!r}")


# ---------------------------------------------------------------------------
# Multisets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Multiset:
    """Finite-support map from points to multiplicities in N+ ∪ {w}.

    Entries are stored sorted by `point_sort_key`; zero multiplicities are
    never stored (absence encodes zero).
    """

    entries: tuple[tuple[Point, Mult], ...] = ()

    def __post_init__(self):
        for _, m in self.entries:
            if m is not OMEGA and (not isinstance(m, int) or m <= 0):
                raise ValueError(f"bad multiplicity {m!r}")

    @staticmethod
    def from_counts(counts: Mapping[Point, Mult]) -> "Multiset":
        entries = tuple(
            sorted(
                ((p, m) for p, m in counts.items() if m is OMEGA or m > 0),
                key=lambda e: point_sort_key(e[0]),
            )
        )
        return Multiset(entries)

    @staticmethod
    def from_elements(points: Iterable[Point]) -> "Multiset":
        counts: dict[Point, Mult] = {}
        for p in points:
            counts[p] = madd(counts.get(p, 0), 1)
        return Multiset.from_counts(counts)

    def items(self) -> tuple[tuple[Point, Mult], ...]:
        return self.entries

    def get(self, p: Point) -> Mult:
        for q, m in self.entries:
            if q == p:
                return m
        return 0

    def support(self) -> tuple[Point, ...]:
        return tuple(p for p, _ in self.entries)

    def total(self) -> Mult:
        t: Mult = 0
        for _, m in self.entries:
            t = madd(t, m)
        return t

    def is_finite(self) -> bool:
        return all(m is not OMEGA for _, m in self.entries)

    def is_empty(self) -> bool:
        return not self.entries

    def finite_total(self) -> int:
        """Sum of the finite entries only."""
        return sum(m for _, m in self.entries if m is not OMEGA)

    def submultiset_of(self, other: "Multiset") -> bool:
        return all(mle(m, other.get(p)) for p, m in self.entries)

    def scale(self, k: Mult) -> "Multiset":
        """k copies of this multiset; OMEGA copies send every entry to OMEGA."""
        if k == 0:
            return EMPTY_MULTISET
        return Multiset.from_counts({p: mmul(m, k) for p, m in self.entries})

    def __iter__(self) -> Iterator[tuple[Point, Mult]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


EMPTY_MULTISET = Multiset()


def msum(parts: Sequence[Multiset], omega_tail: Optional[Multiset] = None) -> Multiset:
    """Pointwise sum of multisets; `omega_tail`, if given, is added OMEGA times."""
    counts: dict[Point, Mult] = {}
    for part in parts:
        for p, m in part:
            counts[p] = madd(counts.get(p, 0), m)
    if omega_tail is not None:
        for p, _ in omega_tail:
            counts[p] = OMEGA
    return Multiset.from_counts(counts)


# ---------------------------------------------------------------------------
# Lasso words
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LassoWord:
    """The word prefix · cycle^w (the finite word `prefix` when cycle is empty)."""

    prefix: tuple[Point, ...] = ()
    cycle: tuple[Point, ...] = ()

    def is_finite(self) -> bool:
        return not self.cycle


def word_to_multiset(w: LassoWord) -> Multiset:
    """Letter counts of the word: prefix occurrences, plus OMEGA for cycle letters."""
    counts: dict[Point, Mult] = {}
    for p in w.prefix:
        counts[p] = madd(counts.get(p, 0), 1)
    for p in w.cycle:
        counts[p] = OMEGA
    return Multiset.from_counts(counts)


def word_equiv(w1: LassoWord, w2: LassoWord) -> bool:
    """Same letters with the same multiplicities, ignoring order."""
    return word_to_multiset(w1) == word_to_multiset(w2)


def multiset_to_word(m: Multiset) -> LassoWord:
    """A canonical lasso representation of a multiset over a finite base."""
    prefix: list[Point] = []
    cycle: list[Point] = []
    for p, k in m:
        if k is OMEGA:
            cycle.append(p)
        else:
            prefix.extend([p] * k)
    return LassoWord(tuple(prefix), tuple(cycle))


# ---------------------------------------------------------------------------
# Typing
# ---------------------------------------------------------------------------


def typechecks(p: Point, obj: ObjectDesc) -> bool:
    """Whether `p` is a well-typed point of `obj`."""
    if isinstance(obj, Base):
        return isinstance(p, Atom) and p.name in obj.elements
    if isinstance(obj, Unit):
        return isinstance(p, Star)
    if isinstance(obj, Top):
        return False
    if isinstance(obj, Tensor):
        return (
            isinstance(p, Pair)
            and typechecks(p.left, obj.left)
            and typechecks(p.right, obj.right)
        )
    if isinstance(obj, With):
        if isinstance(p, In1):
            return typechecks(p.value, obj.left)
        if isinstance(p, In2):
            return typechecks(p.value, obj.right)
        return False
    if isinstance(obj, Bang):
        return isinstance(p, Bag) and all(
            typechecks(q, obj.inner) for q, _ in p.multiset
        )
    if isinstance(obj, Box):
        return (
            isinstance(p, Coloured)
            and 1 <= p.colour <= obj.colours
            and typechecks(p.value, obj.inner)
        )
    raise TypeError(f"not an object descriptor: {obj!r}")


def check_point(p: Point, obj: ObjectDesc) -> None:
    if not typechecks(p, obj):
        raise TypeError(f"point {p!r} is not well-typed against {obj!r}")


# ---------------------------------------------------------------------------
# Bounded enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalBounds:
    """Search bounds shared by the evaluators.

    max_total caps the finite part of any enumerated multiset, allow_omega
    admits omega-valued entries, and max_depth caps Bang/Box nesting during
    point enumeration.
    """

    max_total: int = 3
    allow_omega: bool = False
    max_depth: int = 2

    def deeper(self) -> "EvalBounds":
        if self.max_depth <= 0:
            raise UnboundedUniverse("bang nesting exceeds the enumeration depth bound")
        return EvalBounds(self.max_total, self.allow_omega, self.max_depth - 1)

    def doubled(self) -> "EvalBounds":
        return EvalBounds(self.max_total * 2, self.allow_omega, self.max_depth)


class UnboundedUniverse(ValueError):
    """Raised when enumeration would have to range over an unbounded point set."""


def enum_points(obj: ObjectDesc, bounds: EvalBounds) -> list[Point]:
    """All points of `obj` within bounds, in declaration-driven order.

    Complete for objects without Bang; for Bang the multisets are cut at the
    bounds (total, omega raising, nesting depth).
    """
    if isinstance(obj, Base):
        return [Atom(e) for e in obj.elements]
    if isinstance(obj, Unit):
        return [STAR]
    if isinstance(obj, Top):
        return []
    if isinstance(obj, Tensor):
        return [
            Pair(l, r)
            for l in enum_points(obj.left, bounds)
            for r in enum_points(obj.right, bounds)
        ]
    if isinstance(obj, With):
        return [In1(p) for p in enum_points(obj.left, bounds)] + [
            In2(p) for p in enum_points(obj.right, bounds)
        ]
    if isinstance(obj, Bang):
        return [
            Bag(m)
            for m in enum_multisets(
                obj.inner, bounds.max_total, bounds.allow_omega, bounds=bounds.deeper()
            )
        ]
    if isinstance(obj, Box):
        return [
            Coloured(c, p)
            for c in range(1, obj.colours + 1)
            for p in enum_points(obj.inner, bounds)
        ]
    raise TypeError(f"not an object descriptor: {obj!r}")


def enum_multisets(
    base: ObjectDesc,
    max_total: int,
    allow_omega: bool,
    bounds: Optional[EvalBounds] = None,
) -> list[Multiset]:
    """All multisets over the points of `base` with finite total <= max_total.

    With allow_omega, additionally every multiset obtained by raising a
    nonempty subset of entries of such a multiset to OMEGA.  The result is
    deterministic, duplicate-free, in declaration-driven order: finite
    multisets by increasing total first, then the omega raisings.
    """
    if bounds is None:
        bounds = EvalBounds(max_total=max_total, allow_omega=allow_omega)
    points = enum_points(base, bounds)

    finite: list[Multiset] = []
    for total in range(max_total + 1):
        for combo in _compositions(total, len(points)):
            finite.append(
                Multiset.from_counts(
                    {p: c for p, c in zip(points, combo) if c > 0}
                )
            )

    if not allow_omega:
        return finite

    seen: set[Multiset] = set(finite)
    result = list(finite)
    for m in finite:
        supp = m.support()
        for r in range(1, len(supp) + 1):
            for raised in itertools.combinations(supp, r):
                counts: dict[Point, Mult] = dict(m.items())
                for p in raised:
                    counts[p] = OMEGA
                candidate = Multiset.from_counts(counts)
                if candidate not in seen:
                    seen.add(candidate)
                    result.append(candidate)
    return result


def _compositions(total: int, k: int) -> Iterator[tuple[int, ...]]:
    """All k-tuples of non-negative ints summing to `total`, earlier slots largest first."""
    if k == 0:
        if total == 0:
            yield ()
        return
    if k == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _compositions(total - head, k - 1):
            yield (head,) + rest


def count_multisets_upto(n_elements: int, max_total: int) -> int:
    """Number of multisets of size <= max_total over n_elements elements."""
    return sum(math.comb(n_elements + k - 1, k) for k in range(max_total + 1))
