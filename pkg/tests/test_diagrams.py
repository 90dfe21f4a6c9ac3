import random

import pytest

from gcx.diagrams import (
    ContractionOutcome,
    Diagram,
    DiagramError,
    SignAmbiguityError,
    arcs,
    automorphism_signs,
    canonicalize,
    contract,
    contract_labels,
    epsilon,
    from_json_dict,
    iso_sign,
    validate,
)

from oracles import brute_automorphism_signs, random_relabeling, random_valid_diagram


def test_validate_accepts_tripod(tripod_d):
    assert tripod_d.strands == ((1, 2, 3),)
    assert tripod_d.free == (4,)


def test_validate_normalizes_ids():
    d = validate("odd", [(3, 7, 9)], [12],
                 [(3, 12, None), (7, 12, None), (9, 12, None)])
    assert d.strands == ((1, 2, 3),)
    assert d.free == (4,)


def test_validate_rejects_free_self_loop():
    with pytest.raises(DiagramError, match="free self-loop"):
        validate("odd", [(1, 2, 3)], [4],
                 [(4, 4, "lr"), (1, 4, None), (2, 4, None), (3, 4, None)])


def test_validate_rejects_detached_component():
    with pytest.raises(DiagramError, match="component not connected to L"):
        validate("odd", [(1, 2)], [3, 4, 5],
                 [(1, 2, None), (3, 4, None), (4, 5, None), (3, 5, None)])


def test_validate_rejects_low_valence():
    with pytest.raises(DiagramError, match="valence"):
        validate("odd", [(1, 2, 3)], [], [(1, 3, None)])


def test_validate_rejects_duplicate_ids():
    with pytest.raises(DiagramError, match="duplicate"):
        validate("odd", [(1, 2)], [2], [(1, 2, None)])


def test_canonicalize_idempotent(tripod_d):
    res = canonicalize(tripod_d)
    assert res.canonical == tripod_d
    assert res.sign == 1
    again = canonicalize(res.canonical)
    assert again.canonical == tripod_d and again.sign == 1


def test_canonicalize_one_edge_reversal_gives_minus(tripod_d):
    flipped = Diagram("odd", ((1, 2, 3),), (4,),
                      ((4, 1, None), (2, 4, None), (3, 4, None)))
    res = canonicalize(flipped)
    assert res.canonical == tripod_d
    assert res.sign == -1


def test_canonicalize_multi_edge_is_zero():
    d = Diagram("odd", ((1, 2),), (), ((1, 2, None), (1, 2, None)))
    res = canonicalize(d)
    assert res.is_zero and res.zero_reason == "multi-edge"


def _reversing_auto_diagram():
    # swapping the twin free vertices is an odd vertex permutation that
    # reverses no edge, hence an orientation-reversing automorphism
    return validate("odd", [(1, 2, 3)], [4, 5],
                    [(1, 4, None), (2, 4, None), (3, 4, None),
                     (1, 5, None), (2, 5, None), (3, 5, None)])


def test_canonicalize_reversing_automorphism_is_zero_except_mod2():
    d = _reversing_auto_diagram()
    signs = automorphism_signs(d)
    assert signs == {1, -1}
    assert canonicalize(d, "Z").is_zero
    assert canonicalize(d, "Q").is_zero
    assert not canonicalize(d, "Z2").is_zero


def test_automorphism_signs_examples(tripod_d, cross_d):
    assert automorphism_signs(cross_d) == {1}
    assert automorphism_signs(tripod_d) == {1}
    h = validate("odd", [(1, 2, 3, 4)], [5, 6],
                 [(1, 5, None), (3, 5, None), (2, 6, None), (4, 6, None),
                  (5, 6, None)])
    assert automorphism_signs(h) == {1}


def test_automorphism_signs_match_brute_force():
    rng = random.Random(20240811)
    for trial in range(60):
        d = random_valid_diagram(rng)
        assert automorphism_signs(d) == brute_automorphism_signs(d), d


def test_zero_detection_matches_brute_force():
    rng = random.Random(112)
    for trial in range(60):
        d = random_valid_diagram(rng)
        res = canonicalize(d, "Z")
        brute = brute_automorphism_signs(d)
        if res.is_zero and res.zero_reason == "automorphism":
            assert -1 in brute
        elif not res.is_zero:
            assert brute == {1}


def test_iso_sign_identity_and_reversal(tripod_d):
    assert iso_sign(tripod_d, tripod_d) == 1
    flipped = Diagram("odd", ((1, 2, 3),), (4,),
                      ((4, 1, None), (2, 4, None), (3, 4, None)))
    assert iso_sign(tripod_d, flipped) == -1


def test_iso_sign_none_for_different_graphs(tripod_d, cross_d):
    assert iso_sign(tripod_d, cross_d) is None


def test_iso_sign_ambiguous_raises():
    d = _reversing_auto_diagram()
    with pytest.raises(SignAmbiguityError):
        iso_sign(d, d)


def test_iso_sign_cocycle_of_signs():
    rng = random.Random(31337)
    for _ in range(25):
        a = random_valid_diagram(rng)
        if canonicalize(a).is_zero:
            continue
        b, sb, _ = random_relabeling(rng, a)
        c, sc, _ = random_relabeling(rng, a)
        sab = iso_sign(a, b)
        sbc = iso_sign(b, c)
        sac = iso_sign(a, c)
        assert sab * sbc == sac


def test_relabeling_equivariance_of_canonicalize():
    rng = random.Random(777)
    for _ in range(40):
        d = random_valid_diagram(rng)
        res = canonicalize(d)
        rd, sign, _ = random_relabeling(rng, d)
        res2 = canonicalize(rd)
        if res.is_zero:
            assert res2.is_zero
            continue
        assert res2.canonical == res.canonical
        assert res2.sign == sign * res.sign


def test_contract_tripod_edge(tripod_d):
    oc = contract(tripod_d, ("edge", 1))
    assert oc.kind == "nonzero"
    assert oc.diagram.strands == ((1, 2, 3),)
    assert {(min(a, b), max(a, b)) for a, b, _ in oc.diagram.edges} == \
        {(1, 2), (2, 3)}


def test_contract_cross_chord_arc(cross_d):
    oc = contract(cross_d, ("arc", 0, 1))
    assert oc.kind == "nonzero"
    assert {(min(a, b), max(a, b)) for a, b, _ in oc.diagram.edges} == \
        {(1, 2), (2, 3)}


def test_contract_pinch(cross_d):
    assert contract(cross_d, ("edge", 0)).kind == "zero-pinch"
    assert contract(cross_d, ("edge", 1)).kind == "zero-pinch"


def test_contract_adjacent_chord_gives_self_loop(chord_d):
    for label in (("arc", 0, 0), ("edge", 0)):
        oc = contract(chord_d, label)
        assert oc.kind == "nonzero"
        assert oc.diagram.edges == ((1, 1, "lr"),)


def test_contract_rejects_self_loop():
    d = validate("odd", [(1, 2)], [], [(1, 1, "lr"), (1, 2, None)])
    with pytest.raises(Exception):
        contract(d, ("edge", 0))


def test_contract_to_multi_edge_is_zero(tripod_d):
    assert contract(tripod_d, ("arc", 0, 0)).kind == "zero-multi-edge"
    assert contract(tripod_d, ("arc", 0, 1)).kind == "zero-multi-edge"


def test_contraction_equivariance():
    # the invariant object is the signed summand epsilon(e) * (d/e): the raw
    # quotient labeling alone picks up compensating label-dependent signs
    rng = random.Random(4242)
    checked = 0
    while checked < 40:
        d = random_valid_diagram(rng)
        labels = contract_labels(d)
        if not labels or canonicalize(d).is_zero:
            continue
        label = rng.choice(labels)
        rd, sign, rho = random_relabeling(rng, d)
        if label[0] == "arc":
            rlabel = label
        else:
            a, b, lo = d.edges[label[1]]
            ta, tb = rho[a], rho[b]
            rlabel = next(("edge", i) for i, (x, y, _) in enumerate(rd.edges)
                          if {x, y} == {ta, tb})
        oc = contract(d, label)
        oc2 = contract(rd, rlabel)
        assert oc.kind == oc2.kind
        if oc.kind == "nonzero":
            assert oc.diagram == oc2.diagram
            lhs = epsilon(rd, rlabel) * oc2.sign
            rhs = sign * epsilon(d, label) * oc.sign
            assert lhs == rhs
        checked += 1


def test_arcs_enumeration(cross_d):
    assert [pair for pair, _ in arcs(cross_d)] == [(1, 2), (2, 3), (3, 4)]


def test_json_round_trip(tripod_d, chord_d):
    for d in (tripod_d, chord_d):
        assert from_json_dict(d.to_json_dict()) == d
    loop = validate("odd", [(1,)], [], [(1, 1, "rl")])
    assert from_json_dict(loop.to_json_dict()) == loop


def test_even_convention_canonicalize_sorts_edges():
    d = Diagram("even", ((1, 2, 3, 4),), (), ((2, 4, None), (1, 3, None)))
    res = canonicalize(d)
    assert res.canonical.edges == ((1, 3, None), (2, 4, None))
    assert res.sign == -1  # one transposition of edge labels
