import json

import pytest

from chromatic_ebp.subdivision import ch_int
from chromatic_ebp.topology import (
    ColoredComplex,
    DuplicateColor,
    NotInComplex,
    NotPseudomanifold,
    closure,
    decode_simplex,
    encode_simplex,
    facet_equivalence_sequence,
    is_pseudomanifold,
    join,
    link,
    skeleton,
    star,
)

E01 = frozenset({(0, "a"), (1, "b")})
TRI = frozenset({(0, 0), (1, 1), (2, 2)})


def test_closure_of_nothing_is_empty():
    K = closure([])
    assert K.is_empty() and K.simplices() == frozenset()


def test_closure_of_one_edge():
    K = closure([E01])
    assert len(K.vertices()) == 2
    assert len(K.simplices()) == 3
    assert K.dim == 1


def test_binary_consensus_inputs_for_two_processes():
    edges = [{(0, x), (1, y)} for x in (0, 1) for y in (0, 1)]
    verts = [{(p, x)} for p in (0, 1) for x in (0, 1)]
    K = closure(edges + verts)
    assert len(K.facets) == 4 and K.dim == 1
    assert len(K.vertices()) == 4


def test_repeated_color_rejected():
    with pytest.raises(DuplicateColor):
        closure([{(0, "a"), (0, "b")}])


def test_link_in_one_simplex_is_opposite_face():
    K = closure([TRI])
    L = link(frozenset({(0, 0)}), K)
    assert L.facets == frozenset({frozenset({(1, 1), (2, 2)})})


def test_star_and_duality():
    K = closure([TRI, {(0, 0), (1, 1), (2, 9)}])
    v = frozenset({(0, 0)})
    St, Lk = star(v, K), link(v, K)
    assert len(St.facets) == 2
    # every simplex of the star is a face of v joined with a simplex of the link
    for s in St.simplices():
        rest = s - v
        assert not rest or rest in Lk


def test_star_requires_membership():
    with pytest.raises(NotInComplex):
        star(frozenset({(0, 7)}), closure([TRI]))


def test_join_deduplicates():
    assert join(TRI, TRI) == TRI
    assert join({(0, 0)}, {(1, 1)}) == frozenset({(0, 0), (1, 1)})


def test_skeleton_zero():
    S0 = skeleton(closure([TRI]), 0)
    assert len(S0.facets) == 3 and S0.dim == 0


def test_pseudomanifold_single_facet():
    assert is_pseudomanifold(closure([TRI]), 2)[0]


def test_pseudomanifold_two_triangles_sharing_a_vertex():
    K = closure([TRI, {(0, 0), (1, 5), (2, 6)}])
    ok, why = is_pseudomanifold(K, 2)
    assert not ok and why["condition"] == "c"


def test_pseudomanifold_branching_edge():
    e = {(0, 0), (1, 1)}
    K = closure([e | {(2, 2)}, e | {(2, 3)}, e | {(2, 4)}])
    ok, why = is_pseudomanifold(K, 2)
    assert not ok and why["condition"] == "b"


def test_pseudomanifold_impure():
    K = closure([TRI, {(0, 7), (1, 8)}])
    assert is_pseudomanifold(K, 2)[1]["condition"] == "a"


def test_equivalence_sequence_single_facet():
    walk, shared = facet_equivalence_sequence(closure([TRI]), 2, TRI)
    assert walk == [TRI] and shared == []


def test_equivalence_sequence_path():
    es = [frozenset({(0, 0), (1, 1)}), frozenset({(1, 1), (0, 2)}), frozenset({(0, 2), (1, 3)})]
    walk, shared = facet_equivalence_sequence(closure(es), 1, es[2])
    assert walk == es
    assert shared == [frozenset({(1, 1)}), frozenset({(0, 2)})]


def test_equivalence_sequence_on_interior_complex():
    K = ch_int(TRI, 2)
    center = max(K.facets, key=lambda f: sum(len(v[1]) for v in f))
    walk, shared = facet_equivalence_sequence(K, 2, center)
    assert set(walk) == set(K.facets) and walk[-1] == center
    for a, b, s in zip(walk, walk[1:], shared):
        assert len(a & b) == 2 and s == a & b


def test_equivalence_sequence_rejects_non_pseudomanifold():
    K = closure([TRI, {(0, 0), (1, 5), (2, 6)}])
    with pytest.raises(NotPseudomanifold):
        facet_equivalence_sequence(K, 2, TRI)


def test_closure_and_chromaticity_hold():
    K = ch_int(TRI, 2)
    simp = K.simplices()
    for s in simp:
        assert len({v[0] for v in s}) == len(s)
        for v in s:
            if len(s) > 1:
                assert s - {v} in simp


def test_json_round_trip_is_canonical():
    K = ch_int(TRI, 1)
    enc = K.to_json()
    again = ColoredComplex.from_json(json.loads(json.dumps(enc)))
    assert again == K and again.to_json() == enc
    f = next(iter(K.facets))
    assert decode_simplex(encode_simplex(f)) == f
