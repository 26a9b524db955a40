"""Typed relations between objects: extensional tables and lazy combinators.

A relation is an expression tree evaluated by three bounded queries:

* ``member3(pair, bounds)`` — three-valued membership: True, False, or None
  when the search was cut by the bounds without a definite answer;
* ``image(p, bounds)`` / ``preimage(q, bounds)`` — bounded successor and
  predecessor sets, each with an ``exhaustive`` flag that is True only when
  the returned set provably contains *every* related point;
* ``pairs(bounds)`` — bounded enumeration, sound always and complete within
  bounds for omega-free points.

Tables are finite and exact; bang, digging and the colour ops are intensional
because their extensions are infinite.  Everything is immutable and pure;
per-node memo tables are idempotent caches.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Optional

from .core import (
    EMPTY_MULTISET,
    OMEGA,
    Atom,
    Bag,
    Bang,
    Base,
    Box,
    Coloured,
    EvalBounds,
    In1,
    In2,
    Mult,
    Multiset,
    ObjectDesc,
    Pair,
    Point,
    Star,
    STAR,
    Tensor,
    Top,
    Unit,
    With,
    check_point,
    enum_points,
    madd,
    mmul,
    msum,
    point_sort_key,
    typechecks,
)


class RelTypeError(TypeError):
    """Raised when combinator operands have incompatible object types."""


class UndecidedAtBound(Exception):
    """A membership search was cut by the evaluator bound without an answer.

    Distinct from a False verdict: the pair may or may not belong.
    """


ImageResult = tuple[frozenset, bool]

_EMPTY_EXH: ImageResult = (frozenset(), True)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise RelTypeError(message)


class Rel:
    """A typed relation from `dom` to `cod`, evaluated lazily."""

    dom: ObjectDesc
    cod: ObjectDesc

    def __init__(self, dom: ObjectDesc, cod: ObjectDesc):
        self.dom = dom
        self.cod = cod
        self._memo: dict = {}
        self._imemo: dict = {}
        self._pmemo: dict = {}

    # -- public API --------------------------------------------------------

    def member(self, pair: tuple[Point, Point], bounds: EvalBounds) -> bool:
        """Exact membership; raises UndecidedAtBound when the bounds cut the search."""
        check_point(pair[0], self.dom)
        check_point(pair[1], self.cod)
        verdict = self.member3(pair, bounds)
        if verdict is None:
            raise UndecidedAtBound(f"membership of {pair!r} undecided within {bounds!r}")
        return verdict

    def member3(self, pair: tuple[Point, Point], bounds: EvalBounds) -> Optional[bool]:
        key = (pair, bounds)
        if key not in self._memo:
            self._memo[key] = None  # cycle guard: unresolved recursion is undecided
            self._memo[key] = self._member3(pair, bounds)
        return self._memo[key]

    def image(self, p: Point, bounds: EvalBounds) -> ImageResult:
        key = (p, bounds)
        if key not in self._imemo:
            self._imemo[key] = self._image(p, bounds)
        return self._imemo[key]

    def preimage(self, q: Point, bounds: EvalBounds) -> ImageResult:
        key = (q, bounds)
        if key not in self._pmemo:
            self._pmemo[key] = self._preimage(q, bounds)
        return self._pmemo[key]

    def pairs(self, bounds: EvalBounds) -> list[tuple[Point, Point]]:
        """Bounded enumeration in canonical order; sound, complete within bounds
        for omega-free points (omega-bearing completeness is limited to the
        lasso-representable outer structure reached by the bounded images)."""
        out = set()
        for p in enum_points(self.dom, bounds):
            img, _ = self.image(p, bounds)
            for q in img:
                if point_within(q, bounds) and point_within(p, bounds):
                    out.add((p, q))
        return sorted(out, key=lambda pq: (point_sort_key(pq[0]), point_sort_key(pq[1])))

    # -- node implementations ----------------------------------------------

    def _member3(self, pair, bounds) -> Optional[bool]:
        raise NotImplementedError

    def _image(self, p, bounds) -> ImageResult:
        raise NotImplementedError

    def _preimage(self, q, bounds) -> ImageResult:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.dom!r} -o {self.cod!r})"


def point_within(p: Point, bounds: EvalBounds) -> bool:
    """Whether a point respects the bounds (multiset totals, omega, nesting)."""
    return _within(p, bounds, bounds.max_depth)


def _within(p: Point, bounds: EvalBounds, depth: int) -> bool:
    if isinstance(p, (Atom, Star)):
        return True
    if isinstance(p, Pair):
        return _within(p.left, bounds, depth) and _within(p.right, bounds, depth)
    if isinstance(p, (In1, In2)):
        return _within(p.value, bounds, depth)
    if isinstance(p, Coloured):
        return _within(p.value, bounds, depth)
    if isinstance(p, Bag):
        if depth <= 0:
            return False
        m = p.multiset
        if m.finite_total() > bounds.max_total:
            return False
        if not bounds.allow_omega and not m.is_finite():
            return False
        return all(_within(q, bounds, depth - 1) for q, _ in m)
    raise TypeError(f"not a point: {p!r}")


def enum_complete(obj: ObjectDesc) -> bool:
    """Whether enum_points covers *all* points of obj (no Bang inside)."""
    if isinstance(obj, (Base, Unit, Top)):
        return True
    if isinstance(obj, (Tensor, With)):
        return enum_complete(obj.left) and enum_complete(obj.right)
    if isinstance(obj, Box):
        return enum_complete(obj.inner)
    if isinstance(obj, Bang):
        return False
    raise TypeError(f"not an object descriptor: {obj!r}")


def _and3(a: Optional[bool], b: Optional[bool]) -> Optional[bool]:
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


# ---------------------------------------------------------------------------
# Extensional tables
# ---------------------------------------------------------------------------


class Table(Rel):
    """A finite extensional relation."""

    def __init__(self, dom: ObjectDesc, cod: ObjectDesc, rows: Iterable[tuple[Point, Point]]):
        super().__init__(dom, cod)
        rows = frozenset(rows)
        for p, q in rows:
            if not typechecks(p, dom) or not typechecks(q, cod):
                raise RelTypeError(f"table row {(p, q)!r} is ill-typed for {dom!r} -o {cod!r}")
        self.rows = rows

    def _member3(self, pair, bounds):
        return pair in self.rows

    def _image(self, p, bounds):
        return (frozenset(q for r, q in self.rows if r == p), True)

    def _preimage(self, q, bounds):
        return (frozenset(p for p, r in self.rows if r == q), True)

    def pairs(self, bounds):
        return sorted(
            (pq for pq in self.rows if point_within(pq[0], bounds) and point_within(pq[1], bounds)),
            key=lambda pq: (point_sort_key(pq[0]), point_sort_key(pq[1])),
        )


class Id(Rel):
    def __init__(self, obj: ObjectDesc):
        super().__init__(obj, obj)

    def _member3(self, pair, bounds):
        return pair[0] == pair[1]

    def _image(self, p, bounds):
        return (frozenset([p]), True)

    _preimage = _image


class TerminalMap(Rel):
    """The unique morphism A -> Top: the empty relation."""

    def __init__(self, obj: ObjectDesc):
        super().__init__(obj, Top())

    def _member3(self, pair, bounds):
        return False

    def _image(self, p, bounds):
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        return _EMPTY_EXH


# ---------------------------------------------------------------------------
# Composition and monoidal structure
# ---------------------------------------------------------------------------


class Compose(Rel):
    """Relational composition, first `f` then `g`."""

    def __init__(self, f: Rel, g: Rel):
        _require(f.cod == g.dom, f"cannot compose: {f.cod!r} != {g.dom!r}")
        super().__init__(f.dom, g.cod)
        self.f = f
        self.g = g

    def _member3(self, pair, bounds):
        a, c = pair
        img, img_ex = self.f.image(a, bounds)
        saw_none = False
        for b in img:
            r = self.g.member3((b, c), bounds)
            if r is True:
                return True
            if r is None:
                saw_none = True
        if img_ex and not saw_none:
            return False
        pre, pre_ex = self.g.preimage(c, bounds)
        saw_none_pre = False
        for b in pre:
            if b in img:
                # b in the bounded image and preimage proves both memberships
                return True
            r = self.f.member3((a, b), bounds)
            if r is True:
                return True
            if r is None:
                saw_none_pre = True
        if pre_ex and not saw_none_pre:
            return False
        return None

    def _image(self, p, bounds):
        mid, ex = self.f.image(p, bounds)
        out = set()
        for b in mid:
            img, ex_b = self.g.image(b, bounds)
            ex = ex and ex_b
            out.update(img)
        return (frozenset(out), ex)

    def _preimage(self, q, bounds):
        mid, ex = self.g.preimage(q, bounds)
        out = set()
        for b in mid:
            pre, ex_b = self.f.preimage(b, bounds)
            ex = ex and ex_b
            out.update(pre)
        return (frozenset(out), ex)


class TensorMap(Rel):
    """f (x) g acting componentwise on pairs."""

    def __init__(self, f: Rel, g: Rel):
        super().__init__(Tensor(f.dom, g.dom), Tensor(f.cod, g.cod))
        self.f = f
        self.g = g

    def _member3(self, pair, bounds):
        p, q = pair
        if not isinstance(p, Pair) or not isinstance(q, Pair):
            return False
        return _and3(
            self.f.member3((p.left, q.left), bounds),
            self.g.member3((p.right, q.right), bounds),
        )

    def _image(self, p, bounds):
        if not isinstance(p, Pair):
            return _EMPTY_EXH
        li, lex = self.f.image(p.left, bounds)
        ri, rex = self.g.image(p.right, bounds)
        return (frozenset(Pair(a, b) for a in li for b in ri), lex and rex)

    def _preimage(self, q, bounds):
        if not isinstance(q, Pair):
            return _EMPTY_EXH
        lp, lex = self.f.preimage(q.left, bounds)
        rp, rex = self.g.preimage(q.right, bounds)
        return (frozenset(Pair(a, b) for a in lp for b in rp), lex and rex)


class PairMap(Rel):
    """Product pairing <f,g> : C -> A & B."""

    def __init__(self, f: Rel, g: Rel):
        _require(f.dom == g.dom, "pairing needs a common domain")
        super().__init__(f.dom, With(f.cod, g.cod))
        self.f = f
        self.g = g

    def _member3(self, pair, bounds):
        c, t = pair
        if isinstance(t, In1):
            return self.f.member3((c, t.value), bounds)
        if isinstance(t, In2):
            return self.g.member3((c, t.value), bounds)
        return False

    def _image(self, p, bounds):
        li, lex = self.f.image(p, bounds)
        ri, rex = self.g.image(p, bounds)
        out = {In1(a) for a in li} | {In2(b) for b in ri}
        return (frozenset(out), lex and rex)

    def _preimage(self, q, bounds):
        if isinstance(q, In1):
            return self.f.preimage(q.value, bounds)
        if isinstance(q, In2):
            return self.g.preimage(q.value, bounds)
        return _EMPTY_EXH


class Proj1(Rel):
    def __init__(self, left: ObjectDesc, right: ObjectDesc):
        super().__init__(With(left, right), left)

    def _member3(self, pair, bounds):
        return isinstance(pair[0], In1) and pair[0].value == pair[1]

    def _image(self, p, bounds):
        if isinstance(p, In1):
            return (frozenset([p.value]), True)
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        return (frozenset([In1(q)]), True)


class Proj2(Rel):
    def __init__(self, left: ObjectDesc, right: ObjectDesc):
        super().__init__(With(left, right), right)

    def _member3(self, pair, bounds):
        return isinstance(pair[0], In2) and pair[0].value == pair[1]

    def _image(self, p, bounds):
        if isinstance(p, In2):
            return (frozenset([p.value]), True)
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        return (frozenset([In2(q)]), True)


class Diag(Rel):
    """The diagonal A -> A & A relating a to both (1,a) and (2,a)."""

    def __init__(self, obj: ObjectDesc):
        super().__init__(obj, With(obj, obj))

    def _member3(self, pair, bounds):
        a, t = pair
        return (isinstance(t, In1) or isinstance(t, In2)) and t.value == a

    def _image(self, p, bounds):
        return (frozenset([In1(p), In2(p)]), True)

    def _preimage(self, q, bounds):
        if isinstance(q, (In1, In2)):
            return (frozenset([q.value]), True)
        return _EMPTY_EXH


class Converse(Rel):
    """The relational converse of `inner`."""

    def __init__(self, inner: Rel):
        super().__init__(inner.cod, inner.dom)
        self.inner = inner

    def _member3(self, pair, bounds):
        return self.inner.member3((pair[1], pair[0]), bounds)

    def _image(self, p, bounds):
        return self.inner.preimage(p, bounds)

    def _preimage(self, q, bounds):
        return self.inner.image(q, bounds)


# ---------------------------------------------------------------------------
# Structural isomorphisms of the tensor
# ---------------------------------------------------------------------------


class Assoc(Rel):
    """(A (x) B) (x) C -> A (x) (B (x) C)."""

    def __init__(self, a: ObjectDesc, b: ObjectDesc, c: ObjectDesc):
        super().__init__(Tensor(Tensor(a, b), c), Tensor(a, Tensor(b, c)))

    @staticmethod
    def _fwd(p: Point) -> Optional[Point]:
        if isinstance(p, Pair) and isinstance(p.left, Pair):
            return Pair(p.left.left, Pair(p.left.right, p.right))
        return None

    @staticmethod
    def _bwd(q: Point) -> Optional[Point]:
        if isinstance(q, Pair) and isinstance(q.right, Pair):
            return Pair(Pair(q.left, q.right.left), q.right.right)
        return None

    def _member3(self, pair, bounds):
        fwd = self._fwd(pair[0])
        return fwd is not None and fwd == pair[1]

    def _image(self, p, bounds):
        q = self._fwd(p)
        return (frozenset([q]), True) if q is not None else _EMPTY_EXH

    def _preimage(self, q, bounds):
        p = self._bwd(q)
        return (frozenset([p]), True) if p is not None else _EMPTY_EXH


class Swap(Rel):
    """Symmetry A (x) B -> B (x) A."""

    def __init__(self, a: ObjectDesc, b: ObjectDesc):
        super().__init__(Tensor(a, b), Tensor(b, a))

    def _member3(self, pair, bounds):
        p, q = pair
        return (
            isinstance(p, Pair)
            and isinstance(q, Pair)
            and p.left == q.right
            and p.right == q.left
        )

    def _image(self, p, bounds):
        if isinstance(p, Pair):
            return (frozenset([Pair(p.right, p.left)]), True)
        return _EMPTY_EXH

    _preimage = _image


class RightUnit(Rel):
    """A (x) 1 -> A."""

    def __init__(self, obj: ObjectDesc):
        super().__init__(Tensor(obj, Unit()), obj)

    def _member3(self, pair, bounds):
        p, a = pair
        return isinstance(p, Pair) and p.right == STAR and p.left == a

    def _image(self, p, bounds):
        if isinstance(p, Pair) and p.right == STAR:
            return (frozenset([p.left]), True)
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        return (frozenset([Pair(q, STAR)]), True)


class LeftUnit(Rel):
    """1 (x) A -> A."""

    def __init__(self, obj: ObjectDesc):
        super().__init__(Tensor(Unit(), obj), obj)

    def _member3(self, pair, bounds):
        p, a = pair
        return isinstance(p, Pair) and p.left == STAR and p.right == a

    def _image(self, p, bounds):
        if isinstance(p, Pair) and p.left == STAR:
            return (frozenset([p.right]), True)
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        return (frozenset([Pair(STAR, q)]), True)


# ---------------------------------------------------------------------------
# Closed structure: hom objects are carrier products
# ---------------------------------------------------------------------------


def hom(b: ObjectDesc, c: ObjectDesc) -> ObjectDesc:
    """The internal-hom object B -o C, carried by the product of the carriers."""
    return Tensor(b, c)


class EvalMap(Rel):
    """Evaluation (B -o C) (x) B -> C."""

    def __init__(self, b: ObjectDesc, c: ObjectDesc):
        super().__init__(Tensor(hom(b, c), b), c)

    def _member3(self, pair, bounds):
        p, out = pair
        return (
            isinstance(p, Pair)
            and isinstance(p.left, Pair)
            and p.left.left == p.right
            and p.left.right == out
        )

    def _image(self, p, bounds):
        if isinstance(p, Pair) and isinstance(p.left, Pair) and p.left.left == p.right:
            return (frozenset([p.left.right]), True)
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        b_points = enum_points(self.dom.right, bounds)
        out = frozenset(Pair(Pair(b, q), b) for b in b_points)
        return (out, enum_complete(self.dom.right))


class Curry(Rel):
    """Transpose f : A (x) B -> C into A -> (B -o C)."""

    def __init__(self, f: Rel):
        _require(isinstance(f.dom, Tensor), "curry needs a tensor domain")
        super().__init__(f.dom.left, hom(f.dom.right, f.cod))
        self.f = f

    def _member3(self, pair, bounds):
        a, t = pair
        if not isinstance(t, Pair):
            return False
        return self.f.member3((Pair(a, t.left), t.right), bounds)

    def _image(self, p, bounds):
        b_obj = self.f.dom.right
        out = set()
        ex = enum_complete(b_obj)
        for b in enum_points(b_obj, bounds):
            img, ex_b = self.f.image(Pair(p, b), bounds)
            ex = ex and ex_b
            out.update(Pair(b, c) for c in img)
        return (frozenset(out), ex)

    def _preimage(self, q, bounds):
        if not isinstance(q, Pair):
            return _EMPTY_EXH
        pre, ex = self.f.preimage(q.right, bounds)
        out = frozenset(p.left for p in pre if isinstance(p, Pair) and p.right == q.left)
        return (out, ex)


class Uncurry(Rel):
    """Transpose f : A -> (B -o C) into A (x) B -> C."""

    def __init__(self, f: Rel):
        _require(isinstance(f.cod, Tensor), "uncurry needs a hom codomain")
        super().__init__(Tensor(f.dom, f.cod.left), f.cod.right)
        self.f = f

    def _member3(self, pair, bounds):
        p, c = pair
        if not isinstance(p, Pair):
            return False
        return self.f.member3((p.left, Pair(p.right, c)), bounds)

    def _image(self, p, bounds):
        if not isinstance(p, Pair):
            return _EMPTY_EXH
        img, ex = self.f.image(p.left, bounds)
        out = frozenset(t.right for t in img if isinstance(t, Pair) and t.left == p.right)
        return (out, ex)

    def _preimage(self, q, bounds):
        b_obj = self.dom.right
        out = set()
        ex = enum_complete(b_obj)
        for b in enum_points(b_obj, bounds):
            pre, ex_b = self.f.preimage(Pair(b, q), bounds)
            ex = ex and ex_b
            out.update(Pair(a, b) for a in pre)
        return (frozenset(out), ex)


# ---------------------------------------------------------------------------
# Multiset helpers for the exponential structure
# ---------------------------------------------------------------------------


def _as_bag(p: Point) -> Optional[Multiset]:
    return p.multiset if isinstance(p, Bag) else None


def weighted_sum(outer: Multiset) -> Optional[Multiset]:
    """Sum of an outer multiset of bags, each counted with its multiplicity."""
    parts = []
    for p, k in outer:
        inner = _as_bag(p)
        if inner is None:
            return None
        parts.append(inner.scale(k))
    return msum(parts)


def tag_merge(wa: Multiset, wb: Multiset) -> Multiset:
    """The tagged union ({1} x wa) + ({2} x wb)."""
    counts: dict[Point, Mult] = {}
    for p, k in wa:
        counts[In1(p)] = k
    for p, k in wb:
        counts[In2(p)] = k
    return Multiset.from_counts(counts)


def tag_split(u: Multiset) -> Optional[tuple[Multiset, Multiset]]:
    """Inverse of tag_merge; None when some point is untagged."""
    left: dict[Point, Mult] = {}
    right: dict[Point, Mult] = {}
    for p, k in u:
        if isinstance(p, In1):
            left[p.value] = k
        elif isinstance(p, In2):
            right[p.value] = k
        else:
            return None
    return (Multiset.from_counts(left), Multiset.from_counts(right))


def _mult_choices(target: Mult, cap: int, allow_omega: bool) -> list[Mult]:
    """Values a single sub-entry may take below `target`."""
    if target is OMEGA:
        vals: list[Mult] = list(range(0, cap + 1))
        if allow_omega:
            vals.append(OMEGA)
        return vals
    return list(range(0, target + 1))


def _distributions(total: Mult, slots: int, cap: int, allow_omega: bool) -> Iterator[tuple[Mult, ...]]:
    """All ways to write `total` as an ordered sum over `slots` entries.

    A finite total yields ordinary compositions; OMEGA yields every tuple with
    at least one OMEGA entry and finite entries at most `cap`.
    """
    if slots == 0:
        if total == 0:
            yield ()
        return
    if total is not OMEGA:
        for head in range(total, -1, -1):
            for rest in _distributions(total - head, slots - 1, cap, allow_omega):
                yield (head,) + rest
        return
    if not allow_omega:
        return
    finite_vals = list(range(cap + 1))
    for combo in itertools.product([OMEGA] + finite_vals, repeat=slots):
        if any(v is OMEGA for v in combo):
            yield combo


def _submultisets(w: Multiset, bounds: EvalBounds) -> list[Multiset]:
    """All multisets below w whose finite part fits the bounds."""
    entries = w.items()
    per_entry = [
        [(p, v) for v in _mult_choices(k, bounds.max_total, bounds.allow_omega)]
        for p, k in entries
    ]
    out = []
    for combo in itertools.product(*per_entry):
        m = Multiset.from_counts({p: v for p, v in combo if v != 0})
        if m.finite_total() <= bounds.max_total:
            out.append(m)
    return out


def msplit(w: Multiset, bounds: EvalBounds) -> list[Multiset]:
    """All outer multisets of parts (within bounds) whose weighted sum is w.

    Parts may repeat with finite or omega multiplicity and the empty part may
    pad any solution; the enumeration is complete within the bounds.
    """
    parts = [u for u in _submultisets(w, bounds) if not u.is_empty()]
    parts.sort(key=lambda u: point_sort_key(Bag(u)))
    solutions: list[dict[Multiset, Mult]] = []

    def overshoot(acc: dict[Point, Mult]) -> bool:
        for p, k in acc.items():
            target = w.get(p)
            if target is OMEGA:
                continue
            if k is OMEGA or k > target:
                return True
        return False

    def search(idx: int, acc: dict[Point, Mult], chosen: dict[Multiset, Mult], outer_left: int):
        if idx == len(parts):
            if Multiset.from_counts(acc) == w:
                solutions.append(dict(chosen))
            return
        part = parts[idx]
        counts: list[Mult] = list(range(0, outer_left + 1))
        if bounds.allow_omega:
            counts.append(OMEGA)
        for k in counts:
            if k == 0:
                search(idx + 1, acc, chosen, outer_left)
                continue
            contrib = part.scale(k)
            acc2 = dict(acc)
            for p, m in contrib:
                acc2[p] = madd(acc2.get(p, 0), m)
            if overshoot(acc2):
                continue
            chosen[part] = k
            spent = 0 if k is OMEGA else k
            search(idx + 1, acc2, chosen, outer_left - spent)
            del chosen[part]

    search(0, {}, {}, bounds.max_total)

    out: set[Multiset] = set()
    for sol in solutions:
        base_counts = {Bag(u): k for u, k in sol.items()}
        spent = sum(k for k in base_counts.values() if k is not OMEGA)
        pad_values: list[Mult] = list(range(0, max(0, bounds.max_total - spent) + 1))
        if bounds.allow_omega:
            pad_values.append(OMEGA)
        for pad in pad_values:
            counts = dict(base_counts)
            if pad != 0:
                counts[Bag(EMPTY_MULTISET)] = pad
            out.add(Multiset.from_counts(counts))
    return sorted(out, key=lambda m: point_sort_key(Bag(m)))


# ---------------------------------------------------------------------------
# Exponential combinators
# ---------------------------------------------------------------------------


class Der(Rel):
    """Dereliction !A -> A relating [a] to a."""

    def __init__(self, obj: ObjectDesc):
        super().__init__(Bang(obj), obj)

    def _member3(self, pair, bounds):
        w = _as_bag(pair[0])
        return w is not None and w == Multiset.from_elements([pair[1]])

    def _image(self, p, bounds):
        w = _as_bag(p)
        if w is not None and len(w) == 1 and w.items()[0][1] == 1:
            return (frozenset([w.items()[0][0]]), True)
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        return (frozenset([Bag(Multiset.from_elements([q]))]), True)


class Dig(Rel):
    """Digging !A -> !!A relating a weighted sum of parts to the bag of parts."""

    def __init__(self, obj: ObjectDesc):
        super().__init__(Bang(obj), Bang(Bang(obj)))

    def _member3(self, pair, bounds):
        w = _as_bag(pair[0])
        outer = _as_bag(pair[1])
        if w is None or outer is None:
            return False
        total = weighted_sum(outer)
        return total is not None and total == w

    def _image(self, p, bounds):
        w = _as_bag(p)
        if w is None:
            return _EMPTY_EXH
        return (frozenset(Bag(m) for m in msplit(w, bounds)), False)

    def _preimage(self, q, bounds):
        outer = _as_bag(q)
        if outer is None:
            return _EMPTY_EXH
        total = weighted_sum(outer)
        if total is None:
            return _EMPTY_EXH
        return (frozenset([Bag(total)]), True)


class BangMap(Rel):
    """!f : !A -> !B via multiplicity-preserving matchings through f."""

    def __init__(self, inner: Rel):
        super().__init__(Bang(inner.dom), Bang(inner.cod))
        self.inner = inner

    def _member3(self, pair, bounds):
        w = _as_bag(pair[0])
        v = _as_bag(pair[1])
        if w is None or v is None:
            return False
        w_items = w.items()
        v_items = v.items()
        sure_edges = set()
        maybe_edges = set()
        for i, (a, _) in enumerate(w_items):
            for j, (b, _) in enumerate(v_items):
                r = self.inner.member3((a, b), bounds)
                if r is True:
                    sure_edges.add((i, j))
                    maybe_edges.add((i, j))
                elif r is None:
                    maybe_edges.add((i, j))
        if _transport_feasible(w_items, v_items, sure_edges):
            return True
        if not _transport_feasible(w_items, v_items, maybe_edges):
            return False
        return None

    def _image(self, p, bounds):
        w = _as_bag(p)
        if w is None:
            return _EMPTY_EXH
        return self._push(w, bounds, forward=True)

    def _preimage(self, q, bounds):
        v = _as_bag(q)
        if v is None:
            return _EMPTY_EXH
        return self._push(v, bounds, forward=False)

    def _push(self, w: Multiset, bounds: EvalBounds, forward: bool) -> ImageResult:
        per_entry: list[list[Multiset]] = []
        exhaustive = True
        for a, m in w.items():
            opts_set, ex = (
                self.inner.image(a, bounds) if forward else self.inner.preimage(a, bounds)
            )
            exhaustive = exhaustive and ex
            opts = sorted(opts_set, key=point_sort_key)
            if not opts:
                return (frozenset(), exhaustive)
            if m is OMEGA and (len(opts) > 1 or not bounds.allow_omega):
                exhaustive = False
            dists = []
            for combo in _distributions(m, len(opts), bounds.max_total, bounds.allow_omega):
                dists.append(
                    Multiset.from_counts({b: k for b, k in zip(opts, combo) if k != 0})
                )
            per_entry.append(dists)
        out = set()
        for combo in itertools.product(*per_entry):
            out.add(Bag(msum(list(combo))))
        return (frozenset(out), exhaustive)


def _transport_feasible(w_items, v_items, edges: set) -> bool:
    """Exact multiplicity transport between two supports along allowed edges.

    Finite entries must be shipped and received exactly; omega entries supply
    or absorb unbounded finite amounts but must be covered omega-to-omega.
    """
    omega_rows = [i for i, (_, m) in enumerate(w_items) if m is OMEGA]
    fin_rows = [(i, m) for i, (_, m) in enumerate(w_items) if m is not OMEGA]
    omega_cols = [j for j, (_, n) in enumerate(v_items) if n is OMEGA]
    fin_cols = {j: n for j, (_, n) in enumerate(v_items) if n is not OMEGA}

    for i in omega_rows:
        if not any((i, j) in edges for j in omega_cols):
            return False
    for j in omega_cols:
        if not any((i, j) in edges for i in omega_rows):
            return False

    def alloc(idx: int, demand: dict) -> bool:
        if idx == len(fin_rows):
            return all(
                rem == 0 or any((i, j) in edges for i in omega_rows)
                for j, rem in demand.items()
            )
        i, m = fin_rows[idx]
        cols = [j for j in demand if (i, j) in edges]
        has_sink = any((i, j) in edges for j in omega_cols)

        def place(k: int, left: int, demand: dict) -> bool:
            if k == len(cols):
                if left == 0 or has_sink:
                    return alloc(idx + 1, demand)
                return False
            j = cols[k]
            for take in range(min(left, demand[j]), -1, -1):
                nxt = dict(demand)
                nxt[j] -= take
                if place(k + 1, left - take, nxt):
                    return True
            return False

        return place(0, m, dict(demand))

    return alloc(0, dict(fin_cols))


class M0(Rel):
    """The unit iso 1 -> !Top, the single pair (*, [])."""

    def __init__(self):
        super().__init__(Unit(), Bang(Top()))

    def _member3(self, pair, bounds):
        return pair == (STAR, Bag(EMPTY_MULTISET))

    def _image(self, p, bounds):
        if p == STAR:
            return (frozenset([Bag(EMPTY_MULTISET)]), True)
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        if q == Bag(EMPTY_MULTISET):
            return (frozenset([STAR]), True)
        return _EMPTY_EXH


class M2(Rel):
    """The monoidality iso !A (x) !B -> !(A & B) by tagged merge."""

    def __init__(self, left: ObjectDesc, right: ObjectDesc):
        super().__init__(Tensor(Bang(left), Bang(right)), Bang(With(left, right)))

    def _member3(self, pair, bounds):
        p, q = pair
        u = _as_bag(q)
        if not isinstance(p, Pair) or u is None:
            return False
        wa = _as_bag(p.left)
        wb = _as_bag(p.right)
        if wa is None or wb is None:
            return False
        return tag_merge(wa, wb) == u

    def _image(self, p, bounds):
        if isinstance(p, Pair):
            wa = _as_bag(p.left)
            wb = _as_bag(p.right)
            if wa is not None and wb is not None:
                return (frozenset([Bag(tag_merge(wa, wb))]), True)
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        u = _as_bag(q)
        if u is None:
            return _EMPTY_EXH
        split = tag_split(u)
        if split is None:
            return _EMPTY_EXH
        return (frozenset([Pair(Bag(split[0]), Bag(split[1]))]), True)


def m2_inv(left: ObjectDesc, right: ObjectDesc) -> Rel:
    """The inverse iso !(A & B) -> !A (x) !B."""
    return Converse(M2(left, right))


# ---------------------------------------------------------------------------
# Colour combinators
# ---------------------------------------------------------------------------


def _colour_of(p: Point) -> Optional[tuple[int, Point]]:
    if isinstance(p, Coloured):
        return (p.colour, p.value)
    return None


class BoxMap(Rel):
    """Box f acting under the colour tag, preserving the colour."""

    def __init__(self, inner: Rel, colours: int):
        super().__init__(Box(inner.dom, colours), Box(inner.cod, colours))
        self.inner = inner

    def _member3(self, pair, bounds):
        p, q = pair
        if not isinstance(p, Coloured) or not isinstance(q, Coloured):
            return False
        if p.colour != q.colour:
            return False
        return self.inner.member3((p.value, q.value), bounds)

    def _image(self, p, bounds):
        if not isinstance(p, Coloured):
            return _EMPTY_EXH
        img, ex = self.inner.image(p.value, bounds)
        return (frozenset(Coloured(p.colour, b) for b in img), ex)

    def _preimage(self, q, bounds):
        if not isinstance(q, Coloured):
            return _EMPTY_EXH
        pre, ex = self.inner.preimage(q.value, bounds)
        return (frozenset(Coloured(q.colour, a) for a in pre), ex)


class BoxDig(Rel):
    """Box comultiplication: (max(c1,c2), a) relates to (c1, (c2, a))."""

    def __init__(self, obj: ObjectDesc, colours: int):
        super().__init__(Box(obj, colours), Box(Box(obj, colours), colours))
        self.colours = colours

    def _member3(self, pair, bounds):
        p, q = pair
        if not isinstance(p, Coloured) or not isinstance(q, Coloured):
            return False
        inner = q.value
        if not isinstance(inner, Coloured):
            return False
        return p.value == inner.value and p.colour == max(q.colour, inner.colour)

    def _image(self, p, bounds):
        if not isinstance(p, Coloured):
            return _EMPTY_EXH
        c, a = p.colour, p.value
        out = {Coloured(c, Coloured(k, a)) for k in range(1, c + 1)}
        out |= {Coloured(k, Coloured(c, a)) for k in range(1, c + 1)}
        return (frozenset(out), True)

    def _preimage(self, q, bounds):
        if isinstance(q, Coloured) and isinstance(q.value, Coloured):
            return (
                frozenset([Coloured(max(q.colour, q.value.colour), q.value.value)]),
                True,
            )
        return _EMPTY_EXH


class BoxCounit(Rel):
    """Box counit: only colour 1 is erased."""

    def __init__(self, obj: ObjectDesc, colours: int):
        super().__init__(Box(obj, colours), obj)

    def _member3(self, pair, bounds):
        p, a = pair
        return isinstance(p, Coloured) and p.colour == 1 and p.value == a

    def _image(self, p, bounds):
        if isinstance(p, Coloured) and p.colour == 1:
            return (frozenset([p.value]), True)
        return _EMPTY_EXH

    def _preimage(self, q, bounds):
        return (frozenset([Coloured(1, q)]), True)


def strip_colours(v: Multiset) -> Optional[Multiset]:
    """Forget the colour tags of a multiset of coloured points."""
    counts: dict[Point, Mult] = {}
    for p, k in v:
        if not isinstance(p, Coloured):
            return None
        counts[p.value] = madd(counts.get(p.value, 0), k)
    return Multiset.from_counts(counts)


def max_colour(v: Multiset) -> Optional[int]:
    """Greatest colour tag in the multiset; 1 when it is empty."""
    best = 1
    for p, _ in v:
        if not isinstance(p, Coloured):
            return None
        best = max(best, p.colour)
    return best


class DistLaw(Rel):
    """The swap !BoxA -> Box!A taking the maximum colour (1 on empty)."""

    def __init__(self, obj: ObjectDesc, colours: int):
        super().__init__(Bang(Box(obj, colours)), Box(Bang(obj), colours))
        self.colours = colours

    def _member3(self, pair, bounds):
        v = _as_bag(pair[0])
        q = pair[1]
        if v is None or not isinstance(q, Coloured):
            return False
        u = _as_bag(q.value)
        if u is None:
            return False
        return strip_colours(v) == u and max_colour(v) == q.colour

    def _image(self, p, bounds):
        v = _as_bag(p)
        if v is None:
            return _EMPTY_EXH
        stripped = strip_colours(v)
        colour = max_colour(v)
        if stripped is None or colour is None:
            return _EMPTY_EXH
        return (frozenset([Coloured(colour, Bag(stripped))]), True)

    def _preimage(self, q, bounds):
        if not isinstance(q, Coloured):
            return _EMPTY_EXH
        u = _as_bag(q.value)
        if u is None:
            return _EMPTY_EXH
        c = q.colour
        per_entry: list[list[Multiset]] = []
        exhaustive = u.is_finite()
        for a, m in u.items():
            colourings = []
            for combo in _distributions(m, c, bounds.max_total, bounds.allow_omega):
                colourings.append(
                    Multiset.from_counts(
                        {Coloured(k + 1, a): v for k, v in enumerate(combo) if v != 0}
                    )
                )
            per_entry.append(colourings)
        out = set()
        for combo in itertools.product(*per_entry):
            v = msum(list(combo))
            if max_colour(v) == c:
                out.add(Bag(v))
        return (frozenset(out), exhaustive)


class BoxWithIso(Rel):
    """Distribute box over the product: BoxA & BoxB -> Box(A & B)."""

    def __init__(self, left: ObjectDesc, right: ObjectDesc, colours: int):
        super().__init__(
            With(Box(left, colours), Box(right, colours)),
            Box(With(left, right), colours),
        )

    @staticmethod
    def _fwd(p: Point) -> Optional[Point]:
        if isinstance(p, In1) and isinstance(p.value, Coloured):
            return Coloured(p.value.colour, In1(p.value.value))
        if isinstance(p, In2) and isinstance(p.value, Coloured):
            return Coloured(p.value.colour, In2(p.value.value))
        return None

    @staticmethod
    def _bwd(q: Point) -> Optional[Point]:
        if isinstance(q, Coloured) and isinstance(q.value, In1):
            return In1(Coloured(q.colour, q.value.value))
        if isinstance(q, Coloured) and isinstance(q.value, In2):
            return In2(Coloured(q.colour, q.value.value))
        return None

    def _member3(self, pair, bounds):
        fwd = self._fwd(pair[0])
        return fwd is not None and fwd == pair[1]

    def _image(self, p, bounds):
        q = self._fwd(p)
        return (frozenset([q]), True) if q is not None else _EMPTY_EXH

    def _preimage(self, q, bounds):
        p = self._bwd(q)
        return (frozenset([p]), True) if p is not None else _EMPTY_EXH


# ---------------------------------------------------------------------------
# Convenience constructors
# ---------------------------------------------------------------------------


def table(dom: ObjectDesc, cod: ObjectDesc, rows: Iterable[tuple[Point, Point]]) -> Table:
    return Table(dom, cod, rows)


def identity(obj: ObjectDesc) -> Rel:
    return Id(obj)


def compose(*rels: Rel) -> Rel:
    """Compose left to right: compose(f, g) applies f first."""
    _require(len(rels) >= 1, "compose needs at least one relation")
    out = rels[0]
    for r in rels[1:]:
        out = Compose(out, r)
    return out


def tensor_map(f: Rel, g: Rel) -> Rel:
    return TensorMap(f, g)


def pairing(f: Rel, g: Rel) -> Rel:
    return PairMap(f, g)


def proj1(left: ObjectDesc, right: ObjectDesc) -> Rel:
    return Proj1(left, right)


def proj2(left: ObjectDesc, right: ObjectDesc) -> Rel:
    return Proj2(left, right)


def diag(obj: ObjectDesc) -> Rel:
    return Diag(obj)


def bang(f: Rel) -> Rel:
    return BangMap(f)


def dig(obj: ObjectDesc) -> Rel:
    return Dig(obj)


def der(obj: ObjectDesc) -> Rel:
    return Der(obj)


def m0() -> Rel:
    return M0()


def m2(left: ObjectDesc, right: ObjectDesc) -> Rel:
    return M2(left, right)


def weakening(obj: ObjectDesc) -> Rel:
    """!A -> 1, relating only [] to *."""
    return Compose(BangMap(TerminalMap(obj)), Converse(M0()))


def with_swap(left: ObjectDesc, right: ObjectDesc) -> Rel:
    """Symmetry of the product, built from pairing and projections."""
    return PairMap(Proj2(left, right), Proj1(left, right))


def with_assoc(a: ObjectDesc, b: ObjectDesc, c: ObjectDesc) -> Rel:
    """(A & B) & C -> A & (B & C), built from pairing and projections."""
    ab_c = With(With(a, b), c)
    pi_ab = Proj1(With(a, b), c)
    pi_c = Proj2(With(a, b), c)
    left = Compose(pi_ab, Proj1(a, b))
    mid = Compose(pi_ab, Proj2(a, b))
    return PairMap(left, PairMap(mid, pi_c))


def relation_json(rel: Rel, bounds: EvalBounds) -> dict:
    """Stable JSON form of the bounded enumeration of a relation."""
    from .notation import format_point

    return {
        "schema": 1,
        "bounds": {
            "max_total": bounds.max_total,
            "allow_omega": bounds.allow_omega,
            "max_depth": bounds.max_depth,
        },
        "pairs": [[format_point(p), format_point(q)] for p, q in rel.pairs(bounds)],
    }
