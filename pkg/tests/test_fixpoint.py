"""Fixpoint operators on the two canonical instances and random tables.

Every positive verdict is double-checked by validating the returned regular
witness with the run-tree machinery (validity, exact leaves, acceptance).
"""

import random

import pytest

from relfix.core import (
    OMEGA,
    Atom,
    Bag,
    Bang,
    Base,
    Box,
    Coloured,
    EvalBounds,
    Multiset,
    Pair,
    Tensor,
)
from relfix.fixpoint import (
    FixInstance,
    FixMode,
    FixRel,
    fix_enumerate,
    fix_member,
    fix_witness,
    kleene_lfp,
    star,
)
from relfix.rel import RelTypeError, table
from relfix.runtree import AcceptMode, accept, leaves, validate_regular

a = Atom("a")
b = Atom("b")
x = Atom("x")
X_OBJ = Base("X", ("x",))
A_OBJ = Base("A", ("a",))


def mkinst(rows, x_obj=X_OBJ, a_obj=A_OBJ):
    dom = Tensor(Bang(x_obj), Bang(a_obj))
    return FixInstance(x_obj, a_obj, table(dom, a_obj, rows))


def row(wx, wa, bb):
    return (Pair(Bag(Multiset.from_counts(wx)), Bag(Multiset.from_counts(wa))), bb)


def m_n(n):
    return Multiset.from_counts({x: n} if n else {})


OMEGA_X = Multiset.from_counts({x: OMEGA})

# f terminates via the empty row; g never does.
F_INST = mkinst({row({}, {}, a), row({x: 1}, {a: 1}, a)})
G_INST = mkinst({row({}, {a: 1}, a), row({x: 1}, {a: 1}, a)})


def coloured_inst(colour):
    x_boxed = Box(X_OBJ, 2)
    a_boxed = Box(A_OBJ, 2)
    dom = Tensor(Bang(x_boxed), Bang(a_boxed))
    rows = {
        row({Coloured(colour, x): 1}, {Coloured(colour, a): 1}, a),
        row({}, {Coloured(colour, a): 1}, a),
    }
    return FixInstance(X_OBJ, A_OBJ, table(dom, A_OBJ, rows))


def check_witness(inst, mode, w, a_pt, witness_bound=4):
    """The returned witness must validate, have exactly the right leaves and
    pass the acceptance condition of the mode."""
    g = fix_witness(inst, mode, w, a_pt, witness_bound)
    assert g is not None
    assert validate_regular(inst.f, a_pt, g) is True
    assert leaves(g, coloured=inst.shape.coloured) == w
    acc = {
        FixMode.CLASSIC: AcceptMode.FINITE,
        FixMode.INDUCTIVE: AcceptMode.NO_INFINITE_BRANCH,
        FixMode.COINDUCTIVE: AcceptMode.NO_INFINITE_BRANCH,  # overridden below
        FixMode.PARITY: AcceptMode.PARITY,
    }[mode]
    if mode is not FixMode.COINDUCTIVE:
        assert accept(g, acc) is True


# ---------------------------------------------------------------------------
# the classic fixpoint of f
# ---------------------------------------------------------------------------


def test_classic_members_of_f():
    for n in range(6):
        assert fix_member(F_INST, FixMode.CLASSIC, m_n(n), a) is True
        check_witness(F_INST, FixMode.CLASSIC, m_n(n), a)


def test_classic_fix_member_m3():
    assert fix_member(F_INST, FixMode.CLASSIC, m_n(3), a) is True


def test_classic_enumeration_is_exactly_mn():
    got = fix_enumerate(F_INST, FixMode.CLASSIC, EvalBounds(max_total=5))
    assert got.as_set() == {(m_n(n), a) for n in range(6)}
    assert got.bound_limited == []


def test_classic_rejects_omega_query():
    with pytest.raises(RelTypeError):
        fix_member(F_INST, FixMode.CLASSIC, OMEGA_X, a)


# ---------------------------------------------------------------------------
# the inductive and coinductive fixpoints of g
# ---------------------------------------------------------------------------


def test_inductive_fixpoint_of_g_is_empty():
    got = fix_enumerate(G_INST, FixMode.INDUCTIVE, EvalBounds(max_total=5, allow_omega=True))
    assert got.as_set() == set()
    assert got.bound_limited == []


def test_coinductive_members_of_g():
    assert fix_member(G_INST, FixMode.COINDUCTIVE, OMEGA_X, a) is True
    check_witness(G_INST, FixMode.COINDUCTIVE, OMEGA_X, a)
    for n in range(6):
        assert fix_member(G_INST, FixMode.COINDUCTIVE, m_n(n), a) is True
        check_witness(G_INST, FixMode.COINDUCTIVE, m_n(n), a)


def test_coinductive_enumeration_of_g():
    got = fix_enumerate(
        G_INST, FixMode.COINDUCTIVE, EvalBounds(max_total=3, allow_omega=True)
    )
    assert got.as_set() == {(m_n(n), a) for n in range(4)} | {(OMEGA_X, a)}


def test_coinductive_of_f_adds_omega():
    # f also admits the never-terminating witness, which consumes one x per
    # round or none; omega x's are coinductively reachable.
    assert fix_member(F_INST, FixMode.COINDUCTIVE, OMEGA_X, a) is True


# ---------------------------------------------------------------------------
# parity degeneracies on the coloured g
# ---------------------------------------------------------------------------


def test_parity_even_accepts_omega():
    inst = coloured_inst(2)
    w = Multiset.from_counts({Coloured(2, x): OMEGA})
    assert fix_member(inst, FixMode.PARITY, w, a) is True
    check_witness(inst, FixMode.PARITY, w, a)


def test_parity_odd_rejects_omega():
    inst = coloured_inst(1)
    w = Multiset.from_counts({Coloured(1, x): OMEGA})
    assert fix_member(inst, FixMode.PARITY, w, a) is False


def test_parity_requires_colours():
    with pytest.raises(RelTypeError):
        fix_member(G_INST, FixMode.PARITY, m_n(1), a)


# ---------------------------------------------------------------------------
# Kleene oracle
# ---------------------------------------------------------------------------


def test_kleene_of_f():
    got = kleene_lfp(F_INST, EvalBounds(max_total=4))
    assert got == {(m_n(n), a) for n in range(5)}


def test_kleene_of_g_is_empty():
    assert kleene_lfp(G_INST, EvalBounds(max_total=4)) == set()


def test_kleene_needs_an_entry_row():
    inst = mkinst({row({x: 1}, {a: 1}, a)})
    assert kleene_lfp(inst, EvalBounds(max_total=4)) == set()


def random_instance(rng, n_a=1, n_x=1, max_rows=3):
    a_obj = Base("A", tuple(f"a{i}" for i in range(n_a)))
    x_obj = Base("X", tuple(f"x{i}" for i in range(n_x)))
    dom = Tensor(Bang(x_obj), Bang(a_obj))
    rows = set()
    atoms_a = [Atom(e) for e in a_obj.elements]
    atoms_x = [Atom(e) for e in x_obj.elements]
    for _ in range(rng.randint(1, max_rows)):
        wx = {q: 1 for q in rng.sample(atoms_x, k=rng.randint(0, len(atoms_x)))}
        wa = {q: rng.randint(1, 2) for q in rng.sample(atoms_a, k=rng.randint(0, len(atoms_a)))}
        rows.add(row(wx, wa, rng.choice(atoms_a)))
    if rng.random() < 0.5:
        rows.add(row({}, {}, rng.choice(atoms_a)))
    return FixInstance(x_obj, a_obj, table(dom, a_obj, rows))


@pytest.mark.parametrize("seed", range(25))
def test_classic_agrees_with_kleene(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, n_a=rng.randint(1, 2), n_x=rng.randint(1, 2), max_rows=4)
    bounds = EvalBounds(max_total=4)
    expected = kleene_lfp(inst, bounds)
    got = fix_enumerate(inst, FixMode.CLASSIC, bounds)
    assert got.as_set() == expected
    assert got.bound_limited == []


@pytest.mark.parametrize("seed", range(15))
def test_inductive_below_coinductive(seed):
    rng = random.Random(seed + 1000)
    inst = random_instance(rng, n_a=rng.randint(1, 2), n_x=rng.randint(1, 2))
    bounds = EvalBounds(max_total=3, allow_omega=True)
    ind = fix_enumerate(inst, FixMode.INDUCTIVE, bounds)
    coind = fix_enumerate(inst, FixMode.COINDUCTIVE, bounds)
    assert ind.as_set() <= coind.as_set() | set(coind.bound_limited)


@pytest.mark.parametrize("seed", range(15))
def test_monotone_in_the_table(seed):
    rng = random.Random(seed + 2000)
    inst = random_instance(rng)
    extra = random_instance(rng)
    bigger = FixInstance(
        inst.x_obj,
        inst.a_obj,
        table(inst.f.dom, inst.f.cod, inst.f.rows | extra.f.rows),
    )
    bounds = EvalBounds(max_total=3)
    small = fix_enumerate(inst, FixMode.CLASSIC, bounds).as_set()
    large = fix_enumerate(bigger, FixMode.CLASSIC, bounds).as_set()
    assert small <= large


@pytest.mark.parametrize("seed", range(10))
def test_coinductive_positives_have_valid_witnesses(seed):
    rng = random.Random(seed + 3000)
    inst = random_instance(rng, n_a=2, n_x=1)
    bounds = EvalBounds(max_total=3, allow_omega=True)
    got = fix_enumerate(inst, FixMode.COINDUCTIVE, bounds)
    for w, aa in got.pairs:
        g = fix_witness(inst, FixMode.COINDUCTIVE, w, aa)
        assert g is not None
        assert validate_regular(inst.f, aa, g) is True
        assert leaves(g) == w


# ---------------------------------------------------------------------------
# the star composite
# ---------------------------------------------------------------------------

B_OBJ = Base("B", ("b",))


def test_star_singleton_feedback():
    # f : !X (x) !B -o A consuming one b; g : !X (x) !A -o B consuming one a.
    f = table(
        Tensor(Bang(X_OBJ), Bang(B_OBJ)),
        A_OBJ,
        {row({}, {b: 1}, a)},
    )
    g = table(
        Tensor(Bang(X_OBJ), Bang(A_OBJ)),
        B_OBJ,
        {(Pair(Bag(Multiset()), Bag(Multiset.from_elements([a]))), b)},
    )
    st = star(f, g)
    probe = (Pair(Bag(Multiset()), Bag(Multiset.from_elements([a]))), a)
    bounds = EvalBounds(max_total=3, max_depth=3)
    assert st.member(probe, bounds) is True


def test_star_with_empty_g_blocks_feedback():
    f = table(Tensor(Bang(X_OBJ), Bang(B_OBJ)), A_OBJ, {row({}, {b: 1}, a)})
    g = table(Tensor(Bang(X_OBJ), Bang(A_OBJ)), B_OBJ, set())
    st = star(f, g)
    probe = (Pair(Bag(Multiset()), Bag(Multiset.from_elements([a]))), a)
    bounds = EvalBounds(max_total=3, max_depth=3)
    # !(empty) relates only empty multisets, so f never receives its b
    assert st.member(probe, bounds) is False


def test_star_type_mismatch():
    f = table(Tensor(Bang(X_OBJ), Bang(B_OBJ)), A_OBJ, {row({}, {b: 1}, a)})
    with pytest.raises(RelTypeError):
        star(f, f)


# ---------------------------------------------------------------------------
# FixRel as a relation
# ---------------------------------------------------------------------------


def test_fixrel_membership_and_enumeration():
    yf = FixRel(F_INST, FixMode.CLASSIC)
    bounds = EvalBounds(max_total=3)
    assert yf.member((Bag(m_n(2)), a), bounds) is True
    pre, _ = yf.preimage(a, bounds)
    assert Bag(m_n(3)) in pre
