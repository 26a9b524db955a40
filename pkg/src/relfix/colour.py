"""The colour comonad and its composite with the exponential.

Box pairs every point with a priority in {1..N}; comultiplication tracks the
maximum colour seen, the counit admits only colour 1.  A distributive swap
!Box -> Box! lets the two comonads compose into the coloured exponential
``cbang A = !(Box A)``; the swap takes the maximum colour of the multiset and
sends the empty multiset to colour 1 (the unique choice compatible with the
counit, enforced by the diagram checks rather than assumed).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Bang, Box, EMPTY_MULTISET, Bag, ObjectDesc, Star, Top, Unit
from .rel import (
    BangMap,
    BoxCounit,
    BoxDig,
    BoxMap,
    BoxWithIso,
    Compose,
    Converse,
    Der,
    Diag,
    Dig,
    DistLaw,
    M2,
    Rel,
    Table,
    weakening,
)


@dataclass(frozen=True)
class ColourParams:
    """Number of colours; priorities range over {1..n}."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("at least one colour is required (the counit needs colour 1)")


def box(obj: ObjectDesc, colours: int) -> ObjectDesc:
    return Box(obj, colours)


def box_map(f: Rel, colours: int) -> Rel:
    return BoxMap(f, colours)


def box_dig(obj: ObjectDesc, colours: int) -> Rel:
    """Box A -o Box Box A, relating (max(c1,c2), a) to (c1, (c2, a))."""
    return BoxDig(obj, colours)


def box_counit(obj: ObjectDesc, colours: int) -> Rel:
    """Box A -o A, defined at colour 1 only."""
    return BoxCounit(obj, colours)


def dist_law(obj: ObjectDesc, colours: int) -> Rel:
    """!Box A -o Box !A by maximum colour, empty multiset to colour 1."""
    return DistLaw(obj, colours)


# ---------------------------------------------------------------------------
# The composite comonad
# ---------------------------------------------------------------------------


def cbang(obj: ObjectDesc, colours: int) -> ObjectDesc:
    """The coloured exponential object !(Box A)."""
    return Bang(Box(obj, colours))


def cbang_map(f: Rel, colours: int) -> Rel:
    return BangMap(BoxMap(f, colours))


@dataclass(frozen=True)
class ComonadMaps:
    """Counit and comultiplication of a comonad, as relations."""

    der: Rel
    dig: Rel


def composite_comonad(obj: ObjectDesc, colours: int) -> ComonadMaps:
    """Structure maps of the composite comonad on !(Box A).

    The counit erases the bang then the colour; the comultiplication is the
    bang comultiplication followed, inside the bang, by box digging
    distributed out of the bang.
    """
    boxed = Box(obj, colours)
    counit = Compose(Der(boxed), BoxCounit(obj, colours))
    distributed_boxdig = Compose(BangMap(BoxDig(obj, colours)), DistLaw(boxed, colours))
    comul = Compose(Dig(boxed), BangMap(distributed_boxdig))
    return ComonadMaps(der=counit, dig=comul)


def cbang_der(obj: ObjectDesc, colours: int) -> Rel:
    return composite_comonad(obj, colours).der


def cbang_dig(obj: ObjectDesc, colours: int) -> Rel:
    return composite_comonad(obj, colours).dig


# ---------------------------------------------------------------------------
# Seely structure for the composite comonad
# ---------------------------------------------------------------------------


def cbang_m2(left: ObjectDesc, right: ObjectDesc, colours: int) -> Rel:
    """cbang A (x) cbang B -o cbang (A & B)."""
    merge = M2(Box(left, colours), Box(right, colours))
    return Compose(merge, BangMap(BoxWithIso(left, right, colours)))


def cbang_m2_inv(left: ObjectDesc, right: ObjectDesc, colours: int) -> Rel:
    return Converse(cbang_m2(left, right, colours))


def cbang_m0(colours: int) -> Rel:
    """1 -o cbang Top; Box Top has no points, so the image is the empty bag."""
    return Table(Unit(), cbang(Top(), colours), {(Star(), Bag(EMPTY_MULTISET))})


def cbang_contraction(obj: ObjectDesc, colours: int) -> Rel:
    """cbang A -o cbang A (x) cbang A via the diagonal and the Seely iso."""
    dup = cbang_map(Diag(obj), colours)
    return Compose(dup, cbang_m2_inv(obj, obj, colours))


def cbang_weakening(obj: ObjectDesc, colours: int) -> Rel:
    return weakening(Box(obj, colours))


# ---------------------------------------------------------------------------
# A uniform handle on the exponential structure (plain or coloured)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExpOps:
    """The exponential-comonad toolkit a Kleisli-style construction needs.

    One instance describes the plain bang, another the coloured composite;
    interpreters and diagram builders are written once against this surface.
    """

    bang_obj: object   # ObjectDesc -> ObjectDesc
    map: object        # Rel -> Rel, the functor on morphisms
    dig: object        # ObjectDesc -> Rel
    der: object        # ObjectDesc -> Rel
    m2: object         # (ObjectDesc, ObjectDesc) -> Rel
    m2_inv: object     # (ObjectDesc, ObjectDesc) -> Rel
    m0: object         # () -> Rel
    contraction: object  # ObjectDesc -> Rel, bang A -o bang A (x) bang A
    weakening: object    # ObjectDesc -> Rel, bang A -o 1


def plain_ops() -> ExpOps:
    from .rel import BangMap, Der, Dig, M2, m2_inv as _m2_inv, M0

    def contraction(obj: ObjectDesc) -> Rel:
        return Compose(BangMap(Diag(obj)), _m2_inv(obj, obj))

    return ExpOps(
        bang_obj=Bang,
        map=BangMap,
        dig=Dig,
        der=Der,
        m2=M2,
        m2_inv=_m2_inv,
        m0=M0,
        contraction=contraction,
        weakening=weakening,
    )


def coloured_ops(colours: int) -> ExpOps:
    return ExpOps(
        bang_obj=lambda obj: cbang(obj, colours),
        map=lambda f: cbang_map(f, colours),
        dig=lambda obj: cbang_dig(obj, colours),
        der=lambda obj: cbang_der(obj, colours),
        m2=lambda a, b: cbang_m2(a, b, colours),
        m2_inv=lambda a, b: cbang_m2_inv(a, b, colours),
        m0=lambda: cbang_m0(colours),
        contraction=lambda obj: cbang_contraction(obj, colours),
        weakening=lambda obj: cbang_weakening(obj, colours),
    )
