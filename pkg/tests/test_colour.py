"""Colour comonad: box structure maps, the distributive swap, the composite."""

import pytest

from relfix.core import (
    OMEGA,
    Atom,
    Bag,
    Base,
    Box,
    Coloured,
    EvalBounds,
    Multiset,
    enum_points,
)
from relfix.colour import (
    ColourParams,
    box_counit,
    box_dig,
    box_map,
    cbang_der,
    cbang_dig,
    cbang_m2,
    cbang_m2_inv,
    composite_comonad,
    dist_law,
)
from relfix.rel import compose, identity, table

A_OBJ = Base("A", ("a", "b"))
a = Atom("a")
b = Atom("b")

BOUNDS = EvalBounds(max_total=3, allow_omega=False, max_depth=2)
WBOUNDS = EvalBounds(max_total=3, allow_omega=True, max_depth=2)


def cbag(*tagged):
    return Bag(Multiset.from_elements([Coloured(c, p) for c, p in tagged]))


def test_colour_params_validation():
    with pytest.raises(ValueError):
        ColourParams(0)
    assert ColourParams(2).n == 2


def test_box_dig_max_colour():
    d = box_dig(A_OBJ, 2)
    assert d.member((Coloured(2, a), Coloured(1, Coloured(2, a))), BOUNDS) is True
    assert d.member((Coloured(1, a), Coloured(1, Coloured(1, a))), BOUNDS) is True
    assert d.member((Coloured(1, a), Coloured(2, Coloured(1, a))), BOUNDS) is False


def test_box_counit_colour_one_only():
    e = box_counit(A_OBJ, 2)
    assert e.member((Coloured(1, a), a), BOUNDS) is True
    assert e.member((Coloured(2, a), a), BOUNDS) is False
    # invariant under renaming the base element
    for atom in enum_points(A_OBJ, BOUNDS):
        assert e.member((Coloured(1, atom), atom), BOUNDS) is True


def test_dist_law_examples():
    lam = dist_law(A_OBJ, 2)
    v = cbag((1, a), (2, b))
    assert lam.member((v, Coloured(2, Bag(Multiset.from_elements([a, b])))), BOUNDS) is True
    assert lam.member((Bag(Multiset()), Coloured(1, Bag(Multiset()))), BOUNDS) is True
    assert lam.member((Bag(Multiset()), Coloured(2, Bag(Multiset()))), BOUNDS) is False


def test_dist_law_omega_entry():
    lam = dist_law(A_OBJ, 2)
    v = Bag(Multiset.from_counts({Coloured(2, a): OMEGA}))
    target = Coloured(2, Bag(Multiset.from_counts({a: OMEGA})))
    assert lam.member((v, target), WBOUNDS) is True


def test_dist_law_colour_must_be_max():
    lam = dist_law(A_OBJ, 2)
    v = cbag((1, a))
    assert lam.member((v, Coloured(1, Bag(Multiset.from_elements([a])))), BOUNDS) is True
    assert lam.member((v, Coloured(2, Bag(Multiset.from_elements([a])))), BOUNDS) is False


# ---------------------------------------------------------------------------
# composite comonad, with a hand-materialized composition oracle
# ---------------------------------------------------------------------------


def _materialize(rel, bounds):
    return set(rel.pairs(bounds))


def test_composite_counit_oracle():
    # Oracle: compose the two step tables by hand over all bounded points.
    from relfix.rel import Der, BoxCounit
    from relfix.core import Bang

    step1 = _materialize(Der(Box(A_OBJ, 2)), BOUNDS)
    step2 = _materialize(BoxCounit(A_OBJ, 2), BOUNDS)
    manual = {(p, r) for p, q in step1 for q2, r in step2 if q == q2}

    e = cbang_der(A_OBJ, 2)
    assert (cbag((1, a)), a) in manual
    assert e.member((cbag((1, a)), a), BOUNDS) is True
    assert (cbag((2, a)), a) not in manual
    assert e.member((cbag((2, a)), a), BOUNDS) is False
    assert _materialize(e, BOUNDS) == manual


def test_composite_dig_singleton_unfolding():
    # A one-block split of [(2,a)] must carry the maximum over the singleton.
    d = cbang_dig(A_OBJ, 2)
    src = cbag((2, a))
    target = Bag(Multiset.from_elements([Coloured(2, cbag((2, a)))]))
    assert d.member((src, target), BOUNDS) is True
    # splitting colour 2 as (1, 2) is fine (max is still 2) ...
    other = Bag(Multiset.from_elements([Coloured(1, cbag((2, a)))]))
    assert d.member((src, other), BOUNDS) is True
    # ... but no split of colour 2 is all colour 1
    wrong = Bag(Multiset.from_elements([Coloured(1, cbag((1, a)))]))
    assert d.member((src, wrong), BOUNDS) is False


def test_box_functorial_and_colour_preserving():
    f = table(A_OBJ, A_OBJ, {(a, b)})
    g = table(A_OBJ, A_OBJ, {(b, a), (a, a)})
    lhs = box_map(compose(f, g), 2)
    rhs = compose(box_map(f, 2), box_map(g, 2))
    box_obj = Box(A_OBJ, 2)
    for p in enum_points(box_obj, BOUNDS):
        for q in enum_points(box_obj, BOUNDS):
            assert lhs.member3((p, q), BOUNDS) == rhs.member3((p, q), BOUNDS)
    bf = box_map(f, 2)
    assert bf.member((Coloured(2, a), Coloured(2, b)), BOUNDS) is True
    assert bf.member((Coloured(2, a), Coloured(1, b)), BOUNDS) is False


def test_cbang_m2_roundtrip():
    iso = cbang_m2(A_OBJ, A_OBJ, 2)
    inv = cbang_m2_inv(A_OBJ, A_OBJ, 2)
    both = compose(iso, inv)
    ident = identity(iso.dom)
    bounds = EvalBounds(max_total=2, max_depth=2)
    for p in enum_points(iso.dom, bounds):
        for q in enum_points(iso.dom, bounds):
            assert both.member3((p, q), bounds) == ident.member3((p, q), bounds)


def test_composite_comonad_maps_are_typed():
    maps = composite_comonad(A_OBJ, 2)
    assert maps.der.dom == maps.dig.dom
    from relfix.colour import cbang

    assert maps.der.cod == A_OBJ
    assert maps.dig.cod == cbang(cbang(A_OBJ, 2), 2)
