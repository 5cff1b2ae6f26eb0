from itertools import combinations

import pytest

from chromatic_ebp.protocol import (
    PartialProtocol,
    ProtocolError,
    cen,
    cen_outputs,
    compatible,
    first_round_facets,
    pad_to_round,
    protocol_complex,
    protocol_facets,
    solves,
)
from chromatic_ebp.search import search_partial_protocol
from chromatic_ebp.subdivision import (
    Configuration,
    chromatic_subdivide,
    ordered_partitions,
    own_ancestor,
    run_schedule,
)
from chromatic_ebp.tasks import ColorlessTask, colorize, consensus, set_agreement
from chromatic_ebp.topology import ColoredComplex, level

import oracles


def binary_consensus(n=2):
    one = lambda *xs: frozenset(frozenset([x]) for x in xs)
    d = {frozenset({0}): one(0), frozenset({1}): one(1), frozenset({0, 1}): one(0, 1)}
    return colorize(ColorlessTask(frozenset({frozenset({0, 1})}),
                                  frozenset({frozenset({0}), frozenset({1})}), d), n)


def first_value_protocol(t, U, r_m=1):
    """Everyone outputs the input of the label's lowest process at round r_m."""
    U = frozenset(U)
    a = min(U)[1]
    delta = {}
    for f in protocol_facets(t.input, (U,), r_m):
        for v in f:
            delta[v] = a
    return PartialProtocol((U,), r_m, delta, t.input)


def test_f0_for_binary_consensus():
    t = binary_consensus()
    F0 = protocol_complex(frozenset({(0, 0)}), 0, t.input)
    assert len(F0.facets) == 2


def test_f1_of_full_facet_is_one_simplex():
    t = set_agreement(3, 2)
    sigma = min(t.input.facets, key=repr)
    assert len(first_round_facets(t.input, (sigma,))) == 1


@pytest.mark.parametrize("r", [1, 2])
def test_protocol_complexes_cover_ch(r):
    t = set_agreement(3, 2)
    union = set()
    for U in t.input.simplices():
        union.update(protocol_facets(t.input, (U,), r))
    assert union == set(chromatic_subdivide(t.input, r).complex.facets)


def test_f0_antitone():
    t = set_agreement(3, 2)
    simp = sorted(t.input.simplices(), key=repr)
    for U1 in simp[:20]:
        for U2 in simp:
            if U1 < U2:
                assert set(protocol_facets(t.input, (U2,), 0)) <= set(protocol_facets(t.input, (U1,), 0))


def test_cen_singleton_is_solo_run():
    t = set_agreement(3, 2)
    p = search_partial_protocol(t, frozenset({(0, 0)})).artifact
    v = next(v for f in first_round_facets(t.input, p.label) for v in f if v[0] == 0 and len(v[1]) == 1)
    C = cen({v}, p)
    assert C.output_map == {0: 0}
    assert all(b == frozenset({0}) for b in C.schedule)


def test_cen_matches_vertex_lookup():
    t = set_agreement(3, 2)
    p = pad_to_round(search_partial_protocol(t, frozenset({(1, 2)})).artifact, 3)
    for f in first_round_facets(t.input, p.label)[:6]:
        for k in (1, 2, 3):
            for S in combinations(sorted(f, key=repr), k):
                assert cen(S, p).output_map == cen_outputs(S, p)


def test_consensus_protocols_clash():
    t = consensus(3)
    p0 = pad_to_round(search_partial_protocol(t, frozenset({(0, 0)})).artifact, 2)
    p1 = pad_to_round(search_partial_protocol(t, frozenset({(1, 1)})).artifact, 2)
    ok, wit = compatible(p0, p1)
    assert not ok
    o0, o1 = wit["outputs"]
    assert set(o0.values()) == {0} and set(o1.values()) == {1}
    assert compatible(p0, p0)[0]


def test_disjoint_first_rounds_are_vacuously_compatible():
    t = set_agreement(3, 2)
    a = pad_to_round(first_value_protocol(t, {(0, 0)}), 2)
    b = pad_to_round(first_value_protocol(t, {(0, 1)}), 2)
    assert compatible(a, b) == (True, None)


def test_padding_preserves_outputs():
    t = set_agreement(3, 2)
    p = first_value_protocol(t, {(0, 0)})
    q = pad_to_round(p, 2)
    assert q.r_m == 2 and all(level(v) == 2 for v in q.delta)
    sigma = frozenset({(0, 0), (1, 1), (2, 2)})
    parts = ordered_partitions(frozenset({0, 1, 2}))
    for r1 in parts:
        if r1[0] != frozenset({0}):
            continue
        for r2 in parts:
            C = run_schedule(Configuration.initial(sigma), list(r1) + list(r2))
            for s in C.states:
                assert q.decide(s) == p.decide(own_ancestor(s, 1)) == 0


def test_padding_is_identity_when_uniform():
    t = set_agreement(3, 2)
    q = pad_to_round(first_value_protocol(t, {(0, 0)}), 2)
    assert pad_to_round(q, 2).delta == q.delta


def test_padding_to_one_round_rejected():
    t = set_agreement(3, 2)
    with pytest.raises(ProtocolError):
        pad_to_round(first_value_protocol(t, {(0, 0)}), 1)


def test_solves_constant_set_agreement():
    t = set_agreement(3, 2)
    assert solves(pad_to_round(first_value_protocol(t, {(0, 0)}), 2), t)[0]


def test_solves_rejects_unseen_value():
    t = set_agreement(3, 2)
    p = pad_to_round(first_value_protocol(t, {(0, 0)}), 2)
    bad = dict(p.delta)
    v = next(v for v in bad if v[0] == 0 and oracles.base_carrier(v, 2) == frozenset({(0, 0)}))
    bad[v] = 2
    ok, wit = solves(PartialProtocol(p.label, 2, bad, t.input), t)
    assert not ok and wit["carrier"] == frozenset({(0, 0)})


def test_consensus_singleton_protocol_outputs_its_value():
    t = consensus(3)
    p = search_partial_protocol(t, frozenset({(0, 0)})).artifact
    assert solves(p, t)[0]
    assert set(p.delta.values()) == {0}


def test_protocol_json_round_trip():
    t = set_agreement(3, 2)
    p = pad_to_round(first_value_protocol(t, {(2, 1)}), 2)
    q = PartialProtocol.from_json(p.to_json(), t.input)
    assert q.delta == p.delta and q.label == p.label and q.r_m == 2
