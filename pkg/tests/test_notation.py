"""Textual form of points: formatting and parsing round-trips."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from relfix.core import (
    OMEGA,
    Atom,
    Bag,
    Coloured,
    In1,
    In2,
    Multiset,
    Pair,
    Star,
)
from relfix.notation import (
    ParseError,
    format_point,
    parse_multiset,
    parse_point,
    parse_point_pair,
)


def test_format_atoms_and_star():
    assert format_point(Atom("a")) == "a"
    assert format_point(Star()) == "*"


def test_format_pair_and_tags():
    p = Pair(Atom("a"), In1(Atom("b")))
    assert format_point(p) == "(a,inl b)"
    assert format_point(In2(Star())) == "inr *"


def test_format_multiset():
    m = Multiset.from_counts({Atom("a"): 2, Atom("b"): OMEGA, Atom("c"): 1})
    assert format_point(Bag(m)) == "[a:2, b:w, c]"


def test_format_coloured():
    assert format_point(Coloured(2, Atom("a"))) == "<2>a"


def test_parse_simple_points():
    assert parse_point("a") == Atom("a")
    assert parse_point("*") == Star()
    assert parse_point("(a,b)") == Pair(Atom("a"), Atom("b"))
    assert parse_point("inl a") == In1(Atom("a"))
    assert parse_point("<3>(a,*)") == Coloured(3, Pair(Atom("a"), Star()))


def test_parse_multiset_forms():
    assert parse_multiset("[a, a, b:3, c:w]") == Multiset.from_counts(
        {Atom("a"): 2, Atom("b"): 3, Atom("c"): OMEGA}
    )
    assert parse_multiset("[]") == Multiset()


def test_parse_repeated_entries_sum():
    assert parse_multiset("[a:2, a]") == parse_multiset("[a, a, a]")
    assert parse_multiset("[a:w, a]") == parse_multiset("[a:w]")


def test_parse_pair_query():
    w, a = parse_point_pair("([x:w],a)")
    assert w == Bag(Multiset.from_counts({Atom("x"): OMEGA}))
    assert a == Atom("a")


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as err:
        parse_point("[a,")
    assert err.value.line == 1
    with pytest.raises(ParseError):
        parse_point("(a,b")
    with pytest.raises(ParseError):
        parse_multiset("[a:0]")


atoms = st.sampled_from([Atom("a"), Atom("b"), Atom("x_1")])
mults = st.one_of(st.integers(min_value=1, max_value=4), st.just(OMEGA))


def small_points():
    return st.recursive(
        atoms | st.just(Star()),
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda t: Pair(*t)),
            inner.map(In1),
            inner.map(In2),
            st.dictionaries(inner, mults, max_size=2).map(
                lambda d: Bag(Multiset.from_counts(d))
            ),
            st.tuples(st.integers(min_value=1, max_value=3), inner).map(
                lambda t: Coloured(*t)
            ),
        ),
        max_leaves=6,
    )


@given(small_points())
def test_parse_format_roundtrip(p):
    assert parse_point(format_point(p)) == p
