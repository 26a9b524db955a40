"""Run-trees over a fixpoint-shaped relation, and their acceptance conditions.

A run-tree for f : !X (x) !A -o A (or its coloured variant) has an A-labelled
root, inner A-nodes justified by rows of f, X-labelled leaves, and A-leaves
justified by the empty row.  Finite trees are explicit; infinite trees are
carried by finite graphs (``RegularRunTree``) whose unfolding is the tree.

Acceptance: ``FINITE`` accepts finite trees, ``NO_INFINITE_BRANCH`` accepts
trees whose branches are all finite (width may be omega), ``PARITY`` accepts
when along every infinite branch the greatest colour met infinitely often is
even — on a regular graph, when every reachable cycle has an even maximum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import (
    Bag,
    Bang,
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
    madd,
    mmul,
    msum,
    point_sort_key,
    typechecks,
)
from .rel import Rel, Table, UndecidedAtBound


class AcceptMode(enum.Enum):
    FINITE = "finite"
    NO_INFINITE_BRANCH = "no-infinite-branch"
    PARITY = "parity"


@dataclass(frozen=True)
class FixShape:
    """The (X, A, colours) shape read off a fixpoint-typed relation."""

    x_obj: ObjectDesc
    a_obj: ObjectDesc
    colours: Optional[int]

    @property
    def coloured(self) -> bool:
        return self.colours is not None

    def x_label(self, colour: Optional[int], state: Point) -> Point:
        return Coloured(colour, state) if self.coloured else state


def split_fix_type(f: Rel) -> FixShape:
    """Check f : !X (x) !A -o A (plain or coloured) and extract the shape."""
    dom = f.dom
    if not (isinstance(dom, Tensor) and isinstance(dom.left, Bang) and isinstance(dom.right, Bang)):
        raise TypeError(f"not fixpoint-shaped: domain {dom!r}")
    left, right = dom.left.inner, dom.right.inner
    if isinstance(left, Box) and isinstance(right, Box):
        if left.colours != right.colours:
            raise TypeError("mismatched colour counts in the two exponentials")
        if right.inner != f.cod:
            raise TypeError(f"codomain {f.cod!r} does not match the recursion object")
        return FixShape(left.inner, right.inner, left.colours)
    if isinstance(left, Box) or isinstance(right, Box):
        raise TypeError("either both or neither exponential must be coloured")
    if right != f.cod:
        raise TypeError(f"codomain {f.cod!r} does not match the recursion object")
    return FixShape(left, right, None)


def rows_of_table(f: Table, state: Point) -> list[tuple[Multiset, Multiset]]:
    """The (wx, wa) premises of the table rows concluding `state`."""
    out = []
    for p, b in f.rows:
        if b != state:
            continue
        if isinstance(p, Pair) and isinstance(p.left, Bag) and isinstance(p.right, Bag):
            out.append((p.left.multiset, p.right.multiset))
    out.sort(key=lambda r: (point_sort_key(Bag(r[0])), point_sort_key(Bag(r[1]))))
    return out


# ---------------------------------------------------------------------------
# Finite run-trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteRunTree:
    """A finite labelled tree; `kind` separates X-leaves from A-nodes."""

    kind: str  # "x" | "a"
    state: Point
    colour: Optional[int] = None
    children: tuple["FiniteRunTree", ...] = ()

    def __post_init__(self):
        if self.kind not in ("x", "a"):
            raise ValueError("kind must be 'x' or 'a'")
        if self.kind == "x" and self.children:
            raise ValueError("X-labelled nodes are leaves")

    def size(self) -> int:
        return 1 + sum(child.size() for child in self.children)

    def canonical(self) -> tuple:
        return (
            self.kind,
            point_sort_key(self.state),
            self.colour if self.colour is not None else 0,
            tuple(sorted(child.canonical() for child in self.children)),
        )


def validate_finite(
    f: Rel, a: Point, t: FiniteRunTree, bounds: EvalBounds = EvalBounds()
) -> bool:
    """Whether t is a valid run-tree for f with root a."""
    shape = split_fix_type(f)
    if t.kind != "a" or t.state != a or t.colour is not None:
        return False
    return _validate_node(f, shape, t, is_root=True, bounds=bounds)


def _validate_node(f: Rel, shape: FixShape, node: FiniteRunTree, is_root: bool, bounds) -> bool:
    if node.kind == "x":
        if not typechecks(node.state, shape.x_obj):
            return False
        return _colour_ok(shape, node, is_root=False)
    if not typechecks(node.state, shape.a_obj):
        return False
    if not _colour_ok(shape, node, is_root):
        return False
    wx_items: list[Point] = []
    wa_items: list[Point] = []
    for child in node.children:
        label = shape.x_label(child.colour, child.state)
        if child.kind == "x":
            wx_items.append(label)
        else:
            wa_items.append(label)
    row = (
        Pair(Bag(Multiset.from_elements(wx_items)), Bag(Multiset.from_elements(wa_items))),
        node.state,
    )
    verdict = f.member3(row, bounds)
    if verdict is None:
        raise UndecidedAtBound(f"row {row!r} undecided during validation")
    if not verdict:
        return False
    return all(
        _validate_node(f, shape, child, is_root=False, bounds=bounds)
        for child in node.children
    )


def _colour_ok(shape: FixShape, node: FiniteRunTree, is_root: bool) -> bool:
    if is_root:
        return node.colour is None
    if shape.coloured:
        return node.colour is not None and 1 <= node.colour <= shape.colours
    return node.colour is None


def finite_leaves(t: FiniteRunTree, coloured: bool) -> Multiset:
    out: list[Point] = []

    def walk(node: FiniteRunTree):
        if node.kind == "x":
            out.append(Coloured(node.colour, node.state) if coloured else node.state)
            return
        for child in node.children:
            walk(child)

    walk(t)
    return Multiset.from_elements(out)


# ---------------------------------------------------------------------------
# Regular run-trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularVertex:
    kind: str  # "x" | "a"
    state: Point
    colour: Optional[int] = None


@dataclass(frozen=True)
class RegularRunTree:
    """A finite graph whose unfolding from the root is a run-tree.

    `edges[v]` is the successor bag of vertex v: (target, multiplicity) with
    multiplicities in N+ ∪ {w}, so one vertex can encode countable branching.
    """

    vertices: tuple[RegularVertex, ...]
    edges: tuple[tuple[tuple[int, Mult], ...], ...]
    root: int = 0

    def __post_init__(self):
        if len(self.edges) != len(self.vertices):
            raise ValueError("one successor bag per vertex is required")
        for bag_ in self.edges:
            for target, mult in bag_:
                if not (0 <= target < len(self.vertices)):
                    raise ValueError(f"edge target {target} out of range")
                if mult is not OMEGA and mult <= 0:
                    raise ValueError("edge multiplicities are positive")

    def successors(self, v: int) -> tuple[tuple[int, Mult], ...]:
        return self.edges[v]

    def reachable(self) -> set[int]:
        seen = {self.root}
        stack = [self.root]
        while stack:
            u = stack.pop()
            for v, _ in self.edges[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen


def tree_to_regular(t: FiniteRunTree) -> RegularRunTree:
    """Encode a finite tree as a regular graph (one vertex per node)."""
    vertices: list[RegularVertex] = []
    edges: list[list[tuple[int, Mult]]] = []

    def walk(node: FiniteRunTree) -> int:
        idx = len(vertices)
        vertices.append(RegularVertex(node.kind, node.state, node.colour))
        edges.append([])
        for child in node.children:
            cidx = walk(child)
            edges[idx].append((cidx, 1))
        return idx

    walk(t)
    return RegularRunTree(tuple(vertices), tuple(tuple(e) for e in edges), 0)


def validate_regular(
    f: Rel, a: Point, g: RegularRunTree, bounds: EvalBounds = EvalBounds(allow_omega=True)
) -> bool:
    """Whether the unfolding of g from its root is a valid run-tree for f, root a."""
    shape = split_fix_type(f)
    reach = g.reachable()
    if reach != set(range(len(g.vertices))):
        return False
    root = g.vertices[g.root]
    if root.kind != "a" or root.state != a or root.colour is not None:
        return False
    for idx, vertex in enumerate(g.vertices):
        is_root = idx == g.root
        if vertex.kind == "x":
            if g.edges[idx]:
                return False
            if not typechecks(vertex.state, shape.x_obj):
                return False
            if not _colour_ok_vertex(shape, vertex, is_root):
                return False
            continue
        if not typechecks(vertex.state, shape.a_obj):
            return False
        if not _colour_ok_vertex(shape, vertex, is_root):
            return False
        wx: dict[Point, Mult] = {}
        wa: dict[Point, Mult] = {}
        for target, mult in g.edges[idx]:
            child = g.vertices[target]
            if shape.coloured and child.colour is None:
                return False  # only the root may be colourless
            label = shape.x_label(child.colour, child.state)
            sink = wx if child.kind == "x" else wa
            sink[label] = madd(sink.get(label, 0), mult)
        row = (
            Pair(Bag(Multiset.from_counts(wx)), Bag(Multiset.from_counts(wa))),
            vertex.state,
        )
        verdict = f.member3(row, bounds)
        if verdict is None:
            raise UndecidedAtBound(f"row {row!r} undecided during validation")
        if not verdict:
            return False
    return True


def _colour_ok_vertex(shape: FixShape, v: RegularVertex, is_root: bool) -> bool:
    if is_root:
        return v.colour is None
    if shape.coloured:
        return v.colour is not None and 1 <= v.colour <= shape.colours
    return v.colour is None


# ---------------------------------------------------------------------------
# Leaf counting
# ---------------------------------------------------------------------------


def leaves(t: FiniteRunTree | RegularRunTree, coloured: bool = False) -> Multiset:
    """The multiset of X-leaf labels.

    For a regular graph, a leaf counts once per root-path of the unfolding:
    omega exactly when some vertex on a root-to-leaf path lies on a cycle or
    behind an omega-multiplicity edge, else the finite path count.
    """
    if isinstance(t, FiniteRunTree):
        return finite_leaves(t, coloured)
    counts = _path_counts(t)
    parts = []
    for idx, vertex in enumerate(t.vertices):
        if vertex.kind != "x":
            continue
        k = counts.get(idx, 0)
        if k == 0:
            continue
        label = Coloured(vertex.colour, vertex.state) if coloured else vertex.state
        parts.append(Multiset.from_counts({label: k}))
    return msum(parts)


def _path_counts(g: RegularRunTree) -> dict[int, Mult]:
    """Number of occurrences of each vertex in the unfolding from the root."""
    reach = g.reachable()
    sccs = strongly_connected_components(
        {v: [t for t, _ in g.edges[v] if t in reach] for v in reach}
    )
    comp_of = {}
    for comp_idx, comp in enumerate(sccs):
        for v in comp:
            comp_of[v] = comp_idx
    nontrivial = set()
    for comp_idx, comp in enumerate(sccs):
        if len(comp) > 1:
            nontrivial.add(comp_idx)
        elif any(t == next(iter(comp)) for t, _ in g.edges[next(iter(comp))]):
            nontrivial.add(comp_idx)

    counts: dict[int, Mult] = {v: 0 for v in reach}
    # Tarjan emits components in reverse topological order; process forward.
    for comp_idx in range(len(sccs) - 1, -1, -1):
        comp = sccs[comp_idx]
        base: dict[int, Mult] = {v: 0 for v in comp}
        for v in comp:
            if v == g.root:
                base[v] = madd(base[v], 1)
        for u in reach:
            if comp_of[u] == comp_idx:
                continue
            for t_, m in g.edges[u]:
                if t_ in base:
                    base[t_] = madd(base[t_], mmul(counts[u], m))
        if comp_idx in nontrivial:
            pumped: Mult = OMEGA if any(base[v] != 0 for v in comp) else 0
            for v in comp:
                counts[v] = pumped
        else:
            v = next(iter(comp))
            counts[v] = base[v]
            # an omega self-contribution is impossible in a trivial component
    return counts


def truncated_leaves(g: RegularRunTree, depth: int, coloured: bool = False) -> Multiset:
    """Leaf multiset of the depth-d truncation of the unfolding."""

    memo: dict[tuple[int, int], Multiset] = {}

    def walk(v: int, d: int) -> Multiset:
        key = (v, d)
        if key in memo:
            return memo[key]
        vertex = g.vertices[v]
        if vertex.kind == "x":
            label = Coloured(vertex.colour, vertex.state) if coloured else vertex.state
            out = Multiset.from_counts({label: 1})
        elif d == 0:
            out = Multiset()
        else:
            parts = [walk(t, d - 1).scale(m) for t, m in g.edges[v]]
            out = msum(parts)
        memo[key] = out
        return out

    return walk(g.root, depth)


# ---------------------------------------------------------------------------
# Acceptance
# ---------------------------------------------------------------------------


def accept(t: FiniteRunTree | RegularRunTree, mode: AcceptMode) -> bool:
    """Acceptance of the (unfolded) run-tree under the given condition."""
    if isinstance(t, FiniteRunTree):
        return True  # finite trees satisfy all three conditions
    reach = t.reachable()
    has_cycle = _has_reachable_cycle(t, reach)
    if mode is AcceptMode.FINITE:
        finite_width = all(
            m is not OMEGA for v in reach for _, m in t.edges[v]
        )
        return not has_cycle and finite_width
    if mode is AcceptMode.NO_INFINITE_BRANCH:
        return not has_cycle
    if mode is AcceptMode.PARITY:
        return check_cycles_even(t)
    raise ValueError(f"unknown mode {mode!r}")


def _has_reachable_cycle(g: RegularRunTree, reach: set[int]) -> bool:
    adj = {v: [t for t, _ in g.edges[v] if t in reach] for v in reach}
    for comp in strongly_connected_components(adj):
        if len(comp) > 1:
            return True
        v = next(iter(comp))
        if v in adj[v]:
            return True
    return False


def check_cycles_even(g: RegularRunTree) -> bool:
    """No reachable cycle has an odd maximal colour.

    Works by SCC peeling: an odd maximum inside a strongly connected piece is
    always on a cycle there (reject); an even maximum is removed and the
    remainder re-examined.
    """
    reach = g.reachable()
    adj = {v: sorted({t for t, _ in g.edges[v] if t in reach}) for v in reach}
    colour = {v: (g.vertices[v].colour or 1) for v in reach}
    return _cycles_even(adj, colour)


def _cycles_even(adj: dict[int, list[int]], colour: dict[int, int]) -> bool:
    for comp in strongly_connected_components(adj):
        if len(comp) == 1:
            v = next(iter(comp))
            if v not in adj[v]:
                continue
        cmax = max(colour[v] for v in comp)
        if cmax % 2 == 1:
            return False
        rest = {
            v: [t for t in adj[v] if t in comp and colour[t] != cmax]
            for v in comp
            if colour[v] != cmax
        }
        if not _cycles_even(rest, colour):
            return False
    return True


def strongly_connected_components(adj: dict[int, list[int]]) -> list[set[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[set[int]] = []
    counter = [0]

    for start in adj:
        if start in index:
            continue
        work = [(start, iter(adj[start]))]
        index[start] = low[start] = counter[0]
        counter[0] += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                out.append(comp)
    return out


# ---------------------------------------------------------------------------
# Enumeration of finite run-trees (used by the automaton correspondence)
# ---------------------------------------------------------------------------


def enumerate_finite_runtrees(
    f: Rel, a: Point, max_nodes: int, bounds: EvalBounds = EvalBounds()
) -> set[FiniteRunTree]:
    """All finite run-trees for f with root a and at most max_nodes nodes.

    Rows with omega multiplicities cannot appear in a finite tree and are
    skipped.  f must be a table.
    """
    if not isinstance(f, Table):
        raise TypeError("finite run-tree enumeration needs a table")
    shape = split_fix_type(f)

    def expand(state: Point, colour: Optional[int], budget: int, is_root: bool) -> list[FiniteRunTree]:
        if budget < 1:
            return []
        results = []
        for wx, wa in rows_of_table(f, state):
            if not wx.is_finite() or not wa.is_finite():
                continue
            x_children = []
            ok = True
            for p, k in wx:
                col, st = _split_label(shape, p)
                if col is None and shape.coloured:
                    ok = False
                    break
                x_children.extend([FiniteRunTree("x", st, col)] * k)
            if not ok:
                continue
            child_budget = budget - 1 - len(x_children)
            slots: list[tuple[Optional[int], Point]] = []
            for p, k in wa:
                col, st = _split_label(shape, p)
                slots.extend([(col, st)] * k)
            for combo in _subtree_combos(slots, child_budget, expand):
                children = tuple(x_children) + combo
                results.append(
                    FiniteRunTree("a", state, None if is_root else colour, children)
                )
        # dedupe by canonical form
        seen = {}
        for t in results:
            seen.setdefault(t.canonical(), t)
        return list(seen.values())

    def _subtree_combos(slots, budget, expand_fn):
        if budget < 0:
            return
        if not slots:
            yield ()
            return
        (col, st), rest = slots[0], slots[1:]
        for sub in expand_fn(st, col, budget - (len(rest)), False):
            used = sub.size()
            for tail in _subtree_combos(rest, budget - used, expand_fn):
                yield (sub,) + tail

    return set(expand(a, None, max_nodes, True))


def _split_label(shape: FixShape, p: Point) -> tuple[Optional[int], Point]:
    if shape.coloured:
        if isinstance(p, Coloured):
            return (p.colour, p.value)
        return (None, p)
    return (None, p)


# ---------------------------------------------------------------------------
# DOT export
# ---------------------------------------------------------------------------


def regular_to_dot(g: RegularRunTree) -> str:
    from .notation import format_point, format_mult

    lines = ["digraph runtree {"]
    for idx, v in enumerate(g.vertices):
        label = format_point(v.state)
        if v.colour is not None:
            label = f"<{v.colour}>{label}"
        shape_attr = "box" if v.kind == "x" else "ellipse"
        marker = ", style=bold" if idx == g.root else ""
        lines.append(f'  v{idx} [label="{label}", shape={shape_attr}{marker}];')
    for idx, bag_ in enumerate(g.edges):
        for target, mult in bag_:
            attr = f' [label="{format_mult(mult)}"]' if mult != 1 else ""
            lines.append(f"  v{idx} -> v{target}{attr};")
    lines.append("}")
    return "\n".join(lines)


def tree_to_dot(t: FiniteRunTree) -> str:
    return regular_to_dot(tree_to_regular(t))


# ---------------------------------------------------------------------------
# JSON form (CLI run-tree utilities)
# ---------------------------------------------------------------------------


def regular_to_json(g: RegularRunTree) -> dict:
    from .notation import format_point

    return {
        "schema": 1,
        "root": g.root,
        "vertices": [
            {
                "kind": v.kind,
                "state": format_point(v.state),
                **({"colour": v.colour} if v.colour is not None else {}),
            }
            for v in g.vertices
        ],
        "edges": [
            [[t, "w" if m is OMEGA else m] for t, m in bag_] for bag_ in g.edges
        ],
    }


def regular_from_json(data: dict) -> RegularRunTree:
    from .notation import parse_point

    vertices = tuple(
        RegularVertex(v["kind"], parse_point(v["state"]), v.get("colour"))
        for v in data["vertices"]
    )
    edges = tuple(
        tuple((t, OMEGA if m == "w" else int(m)) for t, m in bag_)
        for bag_ in data["edges"]
    )
    return RegularRunTree(vertices, edges, data.get("root", 0))
