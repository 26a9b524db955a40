"""Fixpoint operators: classic, inductive, coinductive, parity.

Membership of (w, a) in a fixpoint is witnessed by a run-tree with root a and
leaf multiset exactly w, accepted under the mode's condition.  The search
walks nodes (colour, state, obligation), where the obligation records per
leaf point what the subtree must still produce: an exact finite count, an
omega requirement, or nothing at all (free, because an omega has already been
secured by a sibling or an enclosing cycle).

Cycles in the search correspond to cycles of a regular witness graph:

* classic/inductive reject them outright (branches must be well-founded);
* coinductive accepts a cycle when it grounds the obligation: every omega
  requirement is produced somewhere along the loop, no exact count is left
  open, and nothing is produced at points that must stay at a finite count;
* parity additionally requires the maximum colour on the loop to be even.

Verdicts are three-valued: True, False, or None for bound-limited, which is
reported when the search was cut (cycle-repetition cap, non-exhaustive row
providers, or the bounded treatment of omega-multiplicity premises).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

from .core import (
    Bang,
    Bag,
    Box,
    Coloured,
    EvalBounds,
    Mult,
    Multiset,
    OMEGA,
    ObjectDesc,
    Pair,
    Point,
    Tensor,
    With,
    enum_multisets,
    point_sort_key,
    typechecks,
)
from .colour import ExpOps, coloured_ops, plain_ops
from .rel import Assoc, Compose, Id, Rel, Table, TensorMap, RelTypeError
from .runtree import FixShape, rows_of_table, split_fix_type


class FixMode(enum.Enum):
    CLASSIC = "classic"
    INDUCTIVE = "inductive"
    COINDUCTIVE = "coinductive"
    PARITY = "parity"


@dataclass(frozen=True)
class FixInstance:
    """A fixpoint problem: f : !X (x) !A -o A, possibly coloured."""

    x_obj: ObjectDesc
    a_obj: ObjectDesc
    f: Rel

    def __post_init__(self):
        shape = split_fix_type(self.f)
        if shape.x_obj != self.x_obj or shape.a_obj != self.a_obj:
            raise RelTypeError(
                f"instance objects {(self.x_obj, self.a_obj)!r} do not match {self.f!r}"
            )

    @property
    def shape(self) -> FixShape:
        return split_fix_type(self.f)

    @property
    def leaf_obj(self) -> ObjectDesc:
        """The object the leaf multisets live over (Box X when coloured)."""
        return self.f.dom.left.inner

    @staticmethod
    def from_rel(f: Rel) -> "FixInstance":
        shape = split_fix_type(f)
        return FixInstance(shape.x_obj, shape.a_obj, f)


# ---------------------------------------------------------------------------
# Obligations
# ---------------------------------------------------------------------------

# per-point obligation kinds
_EXACT = "e"  # ("e", n): exactly n more occurrences, n >= 1
_REQ = "r"  # ("r",): an omega count must still be secured here
_FREE = "f"  # ("f",): anything goes (an omega is already secured elsewhere)

Obligation = tuple[tuple[Point, tuple], ...]


def _canon(items: dict[Point, tuple]) -> Obligation:
    cleaned = {p: k for p, k in items.items() if k != (_EXACT, 0)}
    return tuple(sorted(cleaned.items(), key=lambda e: point_sort_key(e[0])))


def obligation_of(w: Multiset) -> Obligation:
    return _canon(
        {p: ((_REQ,) if m is OMEGA else (_EXACT, m)) for p, m in w.items()}
    )


def _kind(obl: dict, p: Point) -> tuple:
    return obl.get(p, (_EXACT, 0))


def _consume(obl: Obligation, wx: Multiset) -> Optional[Obligation]:
    """Subtract the directly produced leaves wx from the obligation."""
    out = dict(obl)
    for p, m in wx.items():
        kind = _kind(out, p)
        if kind[0] == _FREE:
            continue
        if kind[0] == _REQ:
            if m is OMEGA:
                out[p] = (_FREE,)
            continue  # a finite contribution leaves the omega requirement open
        n = kind[1]
        if m is OMEGA or m > n:
            return None
        out[p] = (_EXACT, n - m)
    return _canon(out)


def _closed(obl: Obligation) -> bool:
    return all(kind[0] == _FREE for _, kind in obl)


def _forced_points(obl: Obligation) -> frozenset[Point]:
    """Points where any witness of this obligation must produce something."""
    return frozenset(
        p for p, kind in obl if kind[0] == _REQ or (kind[0] == _EXACT and kind[1] >= 1)
    )


# ---------------------------------------------------------------------------
# Row providers
# ---------------------------------------------------------------------------


class RowProvider:
    """Premises (wx, wa) of rows concluding a given state."""

    def __init__(self, f: Rel, bounds: EvalBounds):
        self.f = f
        self.bounds = bounds
        self._cache: dict[Point, tuple[list[tuple[Multiset, Multiset]], bool]] = {}

    def rows(self, state: Point) -> tuple[list[tuple[Multiset, Multiset]], bool]:
        if state not in self._cache:
            self._cache[state] = self._compute(state)
        return self._cache[state]

    def _compute(self, state):
        if isinstance(self.f, Table):
            return (rows_of_table(self.f, state), True)
        pre, exhaustive = self.f.preimage(state, self.bounds)
        if not exhaustive and getattr(self.f, "preimage_complete_within_bounds", False):
            exhaustive = True
        rows = []
        for p in pre:
            if isinstance(p, Pair) and isinstance(p.left, Bag) and isinstance(p.right, Bag):
                rows.append((p.left.multiset, p.right.multiset))
        rows.sort(key=lambda r: (point_sort_key(Bag(r[0])), point_sort_key(Bag(r[1]))))
        return (rows, exhaustive)


# ---------------------------------------------------------------------------
# The witness search
# ---------------------------------------------------------------------------


@dataclass
class _Ctx:
    mode: FixMode
    shape: FixShape
    provider: RowProvider
    witness_bound: int
    cut: bool = False  # a search frontier was truncated somewhere
    memo_true: dict = field(default_factory=dict)
    memo_false: set = field(default_factory=set)
    _fresh: object = None  # vertex id source for witness assembly


Node = tuple[Optional[int], Point, Obligation]

# A witness fragment: root vertex id, vertex table, edge table.  Back-edges
# reuse the vertex id of the ancestor they close on, so fragments of cyclic
# witnesses carry no vertices of their own.
_Frag = tuple[int, dict, dict]


def fix_member(
    inst: FixInstance,
    mode: FixMode,
    w: Multiset,
    a: Point,
    witness_bound: int = 4,
    bounds: Optional[EvalBounds] = None,
) -> Optional[bool]:
    """Three-valued membership of (w, a) in the mode's fixpoint.

    True and False are definitive; None reports a bound-limited search (the
    caller may retry with a larger witness_bound or bounds).
    """
    verdict, _ = _search(inst, mode, w, a, witness_bound, bounds)
    return verdict


def fix_witness(
    inst: FixInstance,
    mode: FixMode,
    w: Multiset,
    a: Point,
    witness_bound: int = 4,
    bounds: Optional[EvalBounds] = None,
):
    """A regular run-tree witnessing membership, or None.

    The graph validates against the instance, has leaf multiset w and passes
    the mode's acceptance condition.
    """
    _, witness = _search(inst, mode, w, a, witness_bound, bounds)
    return witness


def _search(inst, mode, w, a, witness_bound, bounds):
    from .runtree import RegularRunTree, RegularVertex

    shape = inst.shape
    if mode is FixMode.PARITY and not shape.coloured:
        raise RelTypeError("parity mode needs a coloured instance")
    if mode is FixMode.CLASSIC and not w.is_finite():
        raise RelTypeError("classic mode is defined on finite multisets only")
    if not typechecks(Bag(w), Bang(inst.leaf_obj)):
        raise RelTypeError(f"{w!r} is not a multiset over the leaf object")
    if not typechecks(a, inst.a_obj):
        raise RelTypeError(f"{a!r} is not a point of the recursion object")
    if bounds is None:
        bounds = EvalBounds(
            max_total=max(4, w.finite_total()), allow_omega=True, max_depth=3
        )
    ctx = _Ctx(mode, shape, RowProvider(inst.f, bounds), witness_bound)
    ctx._fresh = itertools.count()
    frag = _derive(ctx, (None, a, obligation_of(w)), [])
    if frag is None:
        return (None if ctx.cut else False, None)

    root_vid, vertices, edges = frag
    order = sorted(vertices)
    index = {vid: i for i, vid in enumerate(order)}
    vtuple = tuple(
        RegularVertex(vertices[vid][0], vertices[vid][1], vertices[vid][2])
        for vid in order
    )
    etuple = tuple(
        tuple((index[t], m) for t, m in sorted(edges.get(vid, {}).items()))
        for vid in order
    )
    graph = RegularRunTree(vtuple, etuple, index[root_vid])
    return (True, graph)


def _merge_edge(edges: dict, src: int, dst: int, mult: Mult) -> None:
    from .core import madd

    bag = edges.setdefault(src, {})
    bag[dst] = madd(bag.get(dst, 0), mult)


def _derive(ctx: _Ctx, node: Node, path: list) -> Optional[_Frag]:
    """A witness fragment for `node` in the context of `path`, or None.

    Path entries are (node, produced, vertex_id): the open ancestors, the
    leaf points the step into the pending child emits (premise leaves plus
    whatever the sibling subtrees are forced to emit), and the vertex the
    ancestor occupies in the witness being assembled.
    """
    if node in ctx.memo_true:
        return _instantiate(ctx, ctx.memo_true[node])
    if node in ctx.memo_false:
        return None

    colour, state, obl = node
    occurrences = [i for i, (n, _, _) in enumerate(path) if n == node]
    if occurrences:
        if ctx.mode in (FixMode.CLASSIC, FixMode.INDUCTIVE):
            return None  # grafting the deeper derivation would shortcut the repeat
        for i in occurrences:
            if _cycle_ok(ctx, node, path, i):
                return (path[i][2], {}, {})
        if len(occurrences) >= ctx.witness_bound:
            if not _pumping_repeat(node, path, occurrences):
                ctx.cut = True
            return None

    rows, exhaustive = ctx.provider.rows(state)
    if not exhaustive:
        ctx.cut = True

    for wx, wa in rows:
        frag = _expand_row(ctx, node, path, wx, wa)
        if frag is not None:
            if not path:
                ctx.memo_true[node] = frag
            return frag
    if not occurrences and not path and not ctx.cut:
        ctx.memo_false.add(node)
    return None


def _instantiate(ctx: _Ctx, frag: _Frag) -> _Frag:
    """Copy a cached self-contained fragment with fresh vertex ids."""
    root, vertices, edges = frag
    mapping = {vid: next(ctx._fresh) for vid in vertices}
    return (
        mapping[root],
        {mapping[v]: data for v, data in vertices.items()},
        {
            mapping[v]: {mapping[t]: m for t, m in bag.items()}
            for v, bag in edges.items()
        },
    )


def _pumping_repeat(node: Node, path, occurrences) -> bool:
    """True when the last two inter-occurrence segments are identical, so
    further unrolling cannot reveal anything new."""
    if len(occurrences) < 2:
        return False
    i, j = occurrences[-2], occurrences[-1]
    first = path[i:j]
    second = path[j:]
    if len(first) != len(second):
        return False
    return [n for n, _, _ in first] == [n for n, _, _ in second]


def _cycle_ok(ctx: _Ctx, node: Node, path, start: int) -> bool:
    """Whether closing the loop path[start:] -> node grounds the obligation."""
    _, _, obl = node
    produced: set[Point] = set()
    colours: list[int] = []
    for n, prod, _ in path[start:]:
        produced |= prod
        if n[0] is not None:
            colours.append(n[0])
    if node[0] is not None:
        colours.append(node[0])
    obl_map = dict(obl)
    for p, kind in obl:
        if kind[0] == _EXACT and kind[1] >= 1:
            return False  # a cycle only yields omega or zero occurrences
        if kind[0] == _REQ and p not in produced:
            return False
    for p in produced:
        if _kind(obl_map, p) == (_EXACT, 0):
            return False  # the loop would pump leaves the obligation forbids
    if ctx.mode is FixMode.PARITY:
        if not colours or max(colours) % 2 == 1:
            return False
    return True


def _expand_row(ctx: _Ctx, node: Node, path, wx: Multiset, wa: Multiset) -> Optional[_Frag]:
    colour, state, obl = node
    if ctx.mode is FixMode.CLASSIC and not (wx.is_finite() and wa.is_finite()):
        return None  # finite trees cannot realize countable width
    remaining = _consume(obl, wx)
    if remaining is None:
        return None

    slots: list[tuple[Optional[int], Point]] = []
    omega_entries: list[tuple[Optional[int], Point]] = []
    for label, m in wa.items():
        chcol, chstate = _split_child(ctx.shape, label)
        if m is OMEGA:
            omega_entries.append((chcol, chstate))
            ctx.cut = True  # omega premises are explored within fixed caps
            slots.extend([(chcol, chstate)] * 2)
        else:
            slots.extend([(chcol, chstate)] * m)

    vid = next(ctx._fresh)
    vertices = {vid: ("a", state, colour)}
    edges: dict[int, dict] = {}
    for label, m in wx.items():
        xcol, xstate = _split_child(ctx.shape, label)
        xvid = next(ctx._fresh)
        vertices[xvid] = ("x", xstate, xcol)
        _merge_edge(edges, vid, xvid, m)
    produced_base = frozenset(wx.support())

    tail_frags: list[tuple[tuple, _Frag]] = []
    if omega_entries:
        frees = [p for p, kind in obl if kind[0] == _FREE]
        zero_obl = _canon({p: (_FREE,) for p in frees})
        for chcol, chstate in omega_entries:
            tail_node = (chcol, chstate, zero_obl)
            frag = _derive(ctx, tail_node, path + [(node, produced_base, vid)])
            if frag is None:
                return None
            tail_frags.append(((chcol, chstate), frag))

    if not slots:
        if not _closed(remaining):
            return None
        for _, (troot, tverts, tedges) in tail_frags:
            vertices.update(tverts)
            for s, bag in tedges.items():
                for t, m in bag.items():
                    _merge_edge(edges, s, t, m)
            _merge_edge(edges, vid, troot, OMEGA)
        return (vid, vertices, edges)

    for assignment in _assignments(remaining, len(slots)):
        per_slot = [
            _canon({p: kinds[i] for p, kinds in assignment.items()})
            for i in range(len(slots))
        ]
        solved = _solve_slots(ctx, node, path, produced_base, vid, slots, per_slot)
        if solved is None:
            continue
        out_vertices = dict(vertices)
        out_edges = {s: dict(bag) for s, bag in edges.items()}
        for troot, tverts, tedges in [f for _, f in tail_frags] + solved:
            out_vertices.update(tverts)
            for s, bag in tedges.items():
                for t, m in bag.items():
                    _merge_edge(out_edges, s, t, m)
        for (_, frag) in tail_frags:
            _merge_edge(out_edges, vid, frag[0], OMEGA)
        for frag in solved:
            _merge_edge(out_edges, vid, frag[0], 1)
        return (vid, out_vertices, out_edges)
    return None


def _solve_slots(ctx, node, path, produced_base, vid, slots, per_slot):
    forced = [_forced_points(o) for o in per_slot]
    frags = []
    for i, (chcol, chstate) in enumerate(slots):
        sibling_force = frozenset().union(*(forced[:i] + forced[i + 1 :])) if len(slots) > 1 else frozenset()
        produced = produced_base | sibling_force
        child = (chcol, chstate, per_slot[i])
        frag = _derive(ctx, child, path + [(node, produced, vid)])
        if frag is None:
            return None
        frags.append(frag)
    return frags


def _split_child(shape: FixShape, label: Point) -> tuple[Optional[int], Point]:
    if shape.coloured:
        if not isinstance(label, Coloured):
            raise RelTypeError(f"expected a coloured premise, found {label!r}")
        return (label.colour, label.value)
    return (None, label)


def _assignments(obl: Obligation, nslots: int) -> Iterator[dict[Point, tuple[tuple, ...]]]:
    """Distribute an obligation pointwise over child slots.

    Exact counts split into compositions; an omega requirement is routed to
    one slot (the rest become free, since that slot secures the omega); free
    points stay free everywhere.
    """
    if nslots == 0:
        if _closed(obl):
            yield {}
        return

    per_point: list[tuple[Point, list[tuple[tuple, ...]]]] = []
    for p, kind in obl:
        options: list[tuple[tuple, ...]] = []
        if kind[0] == _EXACT:
            for comp in _int_compositions(kind[1], nslots):
                options.append(tuple((_EXACT, c) for c in comp))
        elif kind[0] == _REQ:
            for i in range(nslots):
                options.append(
                    tuple((_REQ,) if j == i else (_FREE,) for j in range(nslots))
                )
        else:
            options.append(tuple((_FREE,) for _ in range(nslots)))
        per_point.append((p, options))

    seen = set()
    for combo in itertools.product(*(opts for _, opts in per_point)):
        assignment = {p: kinds for (p, _), kinds in zip(per_point, combo)}
        key = tuple(sorted((point_sort_key(p), kinds) for p, kinds in assignment.items()))
        if key in seen:
            continue
        seen.add(key)
        yield assignment


def _int_compositions(total: int, k: int) -> Iterator[tuple[int, ...]]:
    if k == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _int_compositions(total - head, k - 1):
            yield (head,) + rest


# ---------------------------------------------------------------------------
# Enumeration and the Kleene oracle
# ---------------------------------------------------------------------------


@dataclass
class FixEnumeration:
    pairs: list[tuple[Multiset, Point]]
    bound_limited: list[tuple[Multiset, Point]]

    def as_set(self) -> set[tuple[Multiset, Point]]:
        return set(self.pairs)


def fix_enumerate(
    inst: FixInstance,
    mode: FixMode,
    bounds: EvalBounds,
    witness_bound: int = 4,
) -> FixEnumeration:
    """All (w, a) within bounds that belong to the mode's fixpoint.

    Complete within bounds for classic/inductive; for coinductive/parity the
    undecided queries are reported in `bound_limited`.
    """
    from .core import enum_points

    candidates = enum_multisets(
        inst.leaf_obj, bounds.max_total, bounds.allow_omega, bounds=bounds
    )
    pairs = []
    limited = []
    for a in enum_points(inst.a_obj, bounds):
        for w in candidates:
            verdict = fix_member(inst, mode, w, a, witness_bound, bounds)
            if verdict is True:
                pairs.append((w, a))
            elif verdict is None:
                limited.append((w, a))
    pairs.sort(key=lambda wa: (point_sort_key(Bag(wa[0])), point_sort_key(wa[1])))
    limited.sort(key=lambda wa: (point_sort_key(Bag(wa[0])), point_sort_key(wa[1])))
    return FixEnumeration(pairs, limited)


def kleene_lfp(inst: FixInstance, bounds: EvalBounds) -> set[tuple[Multiset, Point]]:
    """Least-fixpoint oracle by bounded iteration from the empty relation.

    Exact for omega-free instances within the bounds; omega premises are
    rejected because the iteration would need to run past omega.
    """
    if not isinstance(inst.f, Table):
        raise RelTypeError("the Kleene oracle needs a table")
    expanded_rows: list[tuple[Multiset, list[Point], Point]] = []
    for p, b in inst.f.rows:
        wx, wa = p.left.multiset, p.right.multiset
        if not wx.is_finite() or not wa.is_finite():
            raise RelTypeError("the Kleene oracle is defined for omega-free tables")
        states = []
        for label, m in wa.items():
            states.extend([label] * m)
        expanded_rows.append((wx, states, b))

    from .core import msum

    current: set[tuple[Multiset, Point]] = set()
    while True:
        nxt = set(current)
        for wx, states, b in expanded_rows:
            if wx.finite_total() > bounds.max_total:
                continue
            pools = [[w for (w, aa) in current if aa == label] for label in states]
            for choice in itertools.product(*pools):
                total = msum([wx, *choice])
                if total.finite_total() <= bounds.max_total:
                    nxt.add((total, b))
        if nxt == current:
            return current
        current = nxt


# ---------------------------------------------------------------------------
# The fixpoint as a relation, and the star composite
# ---------------------------------------------------------------------------


class FixRel(Rel):
    """Y(f) : !X -o A as a lazily evaluated relation."""

    def __init__(
        self,
        inst: FixInstance,
        mode: FixMode,
        witness_bound: int = 4,
        search_bounds: Optional[EvalBounds] = None,
    ):
        super().__init__(inst.f.dom.left, inst.a_obj)
        self.inst = inst
        self.mode = mode
        self.witness_bound = witness_bound
        self.search_bounds = search_bounds
        # classic and inductive memberships are decided exactly, so the
        # bounded preimage misses only rows that no bounded query can use
        self.preimage_complete_within_bounds = mode in (
            FixMode.CLASSIC,
            FixMode.INDUCTIVE,
        )

    def _query(self, w: Multiset, a: Point, bounds: EvalBounds) -> Optional[bool]:
        sb = self.search_bounds or bounds
        return fix_member(self.inst, self.mode, w, a, self.witness_bound, sb)

    def _member3(self, pair, bounds):
        w, a = pair
        if not isinstance(w, Bag):
            return False
        if not typechecks(a, self.inst.a_obj):
            return False
        if not typechecks(w, self.dom):
            return False
        return self._query(w.multiset, a, bounds)

    def _image(self, p, bounds):
        from .core import enum_points

        if not isinstance(p, Bag):
            return (frozenset(), True)
        out = set()
        exhaustive = True
        for a in enum_points(self.inst.a_obj, bounds):
            verdict = self._query(p.multiset, a, bounds)
            if verdict is True:
                out.add(a)
            elif verdict is None:
                exhaustive = False
        return (frozenset(out), exhaustive)

    def _preimage(self, q, bounds):
        out = set()
        candidates = enum_multisets(
            self.inst.leaf_obj, bounds.max_total, bounds.allow_omega, bounds=bounds
        )
        for w in candidates:
            verdict = self._query(w, q, bounds)
            if verdict is True:
                out.add(Bag(w))
        return (frozenset(out), False)


def fix_rel(inst: FixInstance, mode: FixMode, witness_bound: int = 4) -> FixRel:
    return FixRel(inst, mode, witness_bound)


def _exp_ops_for(f: Rel) -> tuple[ExpOps, Optional[int]]:
    dom = f.dom
    if isinstance(dom, Tensor) and isinstance(dom.left, Bang):
        inner = dom.left.inner
        if isinstance(inner, Box):
            return (coloured_ops(inner.colours), inner.colours)
    return (plain_ops(), None)


def star(f: Rel, g: Rel) -> Rel:
    """The feedback composite of f : !X (x) !B -o A and g : !X (x) !A -o B.

    Duplicates the parameter, promotes g under the exponential and feeds its
    output to f; the recursion behind dinaturality.
    """
    ops, colours = _exp_ops_for(f)
    if not (isinstance(f.dom, Tensor) and isinstance(g.dom, Tensor)):
        raise RelTypeError("star needs fixpoint-shaped operands")
    if f.dom.left != g.dom.left:
        raise RelTypeError("star operands must share the parameter exponential")

    def unwrap(exp: ObjectDesc) -> ObjectDesc:
        if not isinstance(exp, Bang):
            raise RelTypeError(f"not an exponential: {exp!r}")
        inner = exp.inner
        if colours is not None:
            if not isinstance(inner, Box) or inner.colours != colours:
                raise RelTypeError("inconsistent colouring in star operands")
            return inner.inner
        if isinstance(inner, Box):
            raise RelTypeError("inconsistent colouring in star operands")
        return inner

    x = unwrap(f.dom.left)
    b = unwrap(f.dom.right)
    a_ = unwrap(g.dom.right)
    if f.cod != a_ or g.cod != b:
        raise RelTypeError(
            f"star type mismatch: f : .. -o {f.cod!r} with g : .. -o {g.cod!r}"
        )

    bang_x = ops.bang_obj(x)
    bang_a = ops.bang_obj(a_)
    xa = With(x, a_)
    dup = TensorMap(ops.contraction(x), Id(bang_a))
    reassoc = Assoc(bang_x, bang_x, bang_a)
    merge = TensorMap(Id(bang_x), ops.m2(x, a_))
    split = TensorMap(Id(bang_x), ops.dig(xa))
    unmerge = TensorMap(Id(bang_x), ops.map(ops.m2_inv(x, a_)))
    promoted = TensorMap(Id(bang_x), ops.map(g))
    return Compose(
        Compose(Compose(Compose(Compose(Compose(dup, reassoc), merge), split), unmerge), promoted),
        f,
    )
