"""Concrete cocycles used by the test suite, the CLI examples and the docs."""

from __future__ import annotations

from .diagrams import Diagram, validate
from .graph_complex import CochainElement, cochain, coboundary
from .homology import MinimalCocycle, cocycle_space, minimal_decomposition


def tripod(convention: str = "odd") -> Diagram:
    return validate(convention, [(1, 2, 3)], [4],
                    [(1, 4, None), (2, 4, None), (3, 4, None)])


def cross_chords(convention: str = "odd") -> Diagram:
    """The two crossing chords (13)(24) on one strand."""
    return validate(convention, [(1, 2, 3, 4)], [],
                    [(1, 3, None), (2, 4, None)])


def single_chord(convention: str = "odd") -> Diagram:
    return validate(convention, [(1, 2)], [], [(1, 2, None)])


def type2_cocycle(convention: str = "odd") -> CochainElement:
    """The order-2, defect-0 cocycle on one strand.

    Odd convention: (13)(24) - tripod.  The even-convention coefficients are
    solved from the kernel so the sign convention stays internal.
    """
    chord, tri = cross_chords(convention), tripod(convention)
    if convention == "odd":
        el = cochain("Z", convention, 1, {chord: 1, tri: -1})
    else:
        for sign in (1, -1):
            el = cochain("Z", convention, 1, {chord: 1, tri: sign})
            if coboundary(el).is_zero:
                break
    if not coboundary(el).is_zero:
        raise AssertionError("type-2 combination is not a cocycle")
    return el


def triple_linking_cocycle() -> CochainElement:
    """The 4-term order-2 cocycle on three strands behind the triple linking
    number: a tripod touching all strands minus one 2-chord diagram per way
    of doubling a strand."""
    t = validate("odd", [(1,), (2,), (3,)], [4],
                 [(1, 4, None), (2, 4, None), (3, 4, None)])
    left = validate("odd", [(1, 2), (3,), (4,)], [],
                    [(1, 3, None), (2, 4, None)])
    mid = validate("odd", [(1,), (2, 3), (4,)], [],
                   [(1, 2, None), (3, 4, None)])
    right = validate("odd", [(1,), (2,), (3, 4)], [],
                     [(1, 3, None), (2, 4, None)])
    el = cochain("Z", "odd", 3, {t: 1, left: -1, mid: -1, right: -1})
    if not coboundary(el).is_zero:
        raise AssertionError("triple-linking combination is not a cocycle")
    return el


def order3_cocycle(max_vertices: int = 14) -> MinimalCocycle:
    """The minimal defect-0 order-3 cocycle for long knots (six diagrams)."""
    space = cocycle_space(1, 3, 0, "odd", "Z", max_vertices)
    minimal = minimal_decomposition(space, max_vertices=max_vertices)
    if len(minimal) != 1:
        raise AssertionError(f"expected one minimal generator, got {len(minimal)}")
    return minimal[0]
