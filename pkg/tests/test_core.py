"""Core multiset and lasso-word behaviour, checked against independent oracles."""

import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relfix.core import (
    EMPTY_MULTISET,
    OMEGA,
    Atom,
    Bag,
    Base,
    EvalBounds,
    LassoWord,
    Multiset,
    UnboundedUniverse,
    Bang,
    enum_multisets,
    enum_points,
    madd,
    mmul,
    msum,
    multiset_to_word,
    word_equiv,
    word_to_multiset,
)

A = Atom("a")
X = Atom("x")


def ms(*points):
    return Multiset.from_elements(points)


def ms_counts(counts):
    return Multiset.from_counts(counts)


# ---------------------------------------------------------------------------
# msum
# ---------------------------------------------------------------------------


def test_msum_finite_pointwise_sum():
    assert msum([ms(A, A), ms(A)]) == ms(A, A, A)


def test_msum_omega_absorbs():
    assert msum([ms_counts({X: OMEGA}), ms(X)]) == ms_counts({X: OMEGA})


def test_msum_omega_tail():
    assert msum([], omega_tail=ms(X)) == ms_counts({X: OMEGA})


def test_msum_empty_is_unit():
    assert msum([]) == EMPTY_MULTISET
    assert msum([ms(A), EMPTY_MULTISET]) == ms(A)


points_strategy = st.sampled_from([A, X, Atom("b")])
mult_strategy = st.one_of(st.integers(min_value=1, max_value=3), st.just(OMEGA))
multiset_strategy = st.dictionaries(points_strategy, mult_strategy, max_size=3).map(
    Multiset.from_counts
)


@given(multiset_strategy, multiset_strategy, multiset_strategy)
def test_msum_commutative_associative(m1, m2, m3):
    assert msum([m1, m2]) == msum([m2, m1])
    assert msum([msum([m1, m2]), m3]) == msum([m1, msum([m2, m3])])
    assert msum([m1, EMPTY_MULTISET]) == m1


# ---------------------------------------------------------------------------
# Lasso words: oracle is the prefix-order comparison on expanded words
# ---------------------------------------------------------------------------


def expand(word: LassoWord, length: int) -> tuple:
    """First `length` letters of the denoted finite-or-infinite word."""
    out = list(word.prefix[:length])
    while word.cycle and len(out) < length:
        out.extend(word.cycle)
    return tuple(out[:length])


def word_length(word: LassoWord):
    return OMEGA if word.cycle else len(word.prefix)


def below(u: tuple, w: LassoWord) -> bool:
    """Finite word u is a prefix of some finite prefix of w, up to reordering.

    Reordering makes this multiset containment in a long-enough prefix; for a
    lasso, expanding len(u)+1 cycles is enough to meet any demand of size len(u).
    """
    if w.cycle:
        horizon = len(w.prefix) + (len(u) + 1) * len(w.cycle)
    else:
        horizon = len(w.prefix)
    counts = {}
    for letter in expand(w, horizon):
        counts[letter] = counts.get(letter, 0) + 1
    for letter in u:
        if counts.get(letter, 0) == 0:
            return False
        counts[letter] -= 1
    return True


def equiv_oracle(w1: LassoWord, w2: LassoWord, alphabet, max_len=4) -> bool:
    """Word equivalence decided by comparing all finite test words up to max_len."""
    for n in range(max_len + 1):
        for u in itertools.product(alphabet, repeat=n):
            if below(u, w1) != below(u, w2):
                return False
    return True


def test_word_to_multiset_finite():
    w = LassoWord(prefix=(X, A, X))
    assert word_to_multiset(w) == ms(X, X, A)


def test_word_to_multiset_pure_cycle():
    w = LassoWord(cycle=(X,))
    assert word_to_multiset(w) == ms_counts({X: OMEGA})


def test_word_to_multiset_mixed_cycle():
    w = LassoWord(prefix=(A,), cycle=(X, A))
    assert word_to_multiset(w) == ms_counts({A: OMEGA, X: OMEGA})


def test_word_equiv_finite_permutation():
    assert word_equiv(LassoWord(prefix=(A, A, X)), LassoWord(prefix=(A, X, A)))


def test_word_equiv_cycle_unrolling():
    assert word_equiv(LassoWord(cycle=(X,)), LassoWord(cycle=(X, X)))


def test_word_equiv_one_vs_omega():
    # Oracle run: the test word xx fits below x^w but not below the one-letter
    # word x, so the two words are inequivalent.
    w1 = LassoWord(prefix=(X,))
    w2 = LassoWord(cycle=(X,))
    assert equiv_oracle(w1, w2, [X]) is False
    assert word_equiv(w1, w2) is False


lasso_strategy = st.builds(
    LassoWord,
    prefix=st.tuples() | st.lists(points_strategy, max_size=3).map(tuple),
    cycle=st.tuples() | st.lists(points_strategy, max_size=2).map(tuple),
)


@given(lasso_strategy, lasso_strategy)
@settings(max_examples=60)
def test_word_equiv_matches_prefix_oracle(w1, w2):
    alphabet = [A, X, Atom("b")]
    assert word_equiv(w1, w2) == equiv_oracle(w1, w2, alphabet)


@given(lasso_strategy)
def test_word_to_multiset_cycle_rotation_and_unrolling(w):
    if w.cycle:
        rotated = LassoWord(w.prefix, w.cycle[1:] + w.cycle[:1])
        assert word_to_multiset(w) == word_to_multiset(rotated)
    unrolled = LassoWord(w.prefix + w.cycle, w.cycle)
    assert word_to_multiset(w) == word_to_multiset(unrolled)


@given(lasso_strategy, lasso_strategy, lasso_strategy)
def test_word_equiv_is_equivalence(w1, w2, w3):
    assert word_equiv(w1, w1)
    assert word_equiv(w1, w2) == word_equiv(w2, w1)
    if word_equiv(w1, w2) and word_equiv(w2, w3):
        assert word_equiv(w1, w3)


@given(multiset_strategy)
def test_multiset_word_roundtrip(m):
    assert word_to_multiset(multiset_to_word(m)) == m


# ---------------------------------------------------------------------------
# enum_multisets
# ---------------------------------------------------------------------------

BASE_A = Base("A", ("a",))
BASE_XA = Base("B", ("x", "a"))


def test_enum_multisets_exhaustive_finite():
    got = enum_multisets(BASE_A, 2, False)
    assert got == [EMPTY_MULTISET, ms(A), ms(A, A)]


def test_enum_multisets_omega_raising_needs_entries():
    # Raising applies only to present entries: the empty multiset has none.
    assert enum_multisets(BASE_A, 0, True) == [EMPTY_MULTISET]


def test_enum_multisets_omega_hand_enumeration():
    got = enum_multisets(BASE_XA, 1, True)
    expected = [
        EMPTY_MULTISET,
        ms(X),
        ms(A),
        ms_counts({X: OMEGA}),
        ms_counts({A: OMEGA}),
    ]
    assert got == expected


@pytest.mark.parametrize("n_elements,max_total", [(1, 3), (2, 3), (3, 2), (2, 0)])
def test_enum_multisets_cardinality(n_elements, max_total):
    base = Base("E", tuple(f"e{i}" for i in range(n_elements)))
    got = enum_multisets(base, max_total, False)
    expected = sum(
        math.comb(n_elements + k - 1, k) for k in range(max_total + 1)
    )
    assert len(got) == expected
    assert len(set(got)) == len(got)


def test_enum_multisets_deterministic():
    assert enum_multisets(BASE_XA, 2, True) == enum_multisets(BASE_XA, 2, True)


def test_enum_points_rejects_deep_bang_nesting():
    nested = Bang(Bang(Bang(BASE_A)))
    with pytest.raises(UnboundedUniverse):
        enum_points(nested, EvalBounds(max_total=1, max_depth=2))


# ---------------------------------------------------------------------------
# multiplicity arithmetic
# ---------------------------------------------------------------------------


def test_mult_arithmetic():
    assert madd(2, 3) == 5
    assert madd(OMEGA, 3) is OMEGA
    assert mmul(0, OMEGA) == 0
    assert mmul(OMEGA, 2) is OMEGA
    assert mmul(2, 3) == 6
