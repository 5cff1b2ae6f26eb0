import pytest

from chromatic_ebp.protocol import compatible, solves
from chromatic_ebp.search import (
    FOUND,
    IMPOSSIBLE,
    INFEASIBLE,
    SOLVABLE,
    NotOneDimensional,
    SearchBudget,
    audit_family,
    check_1dim_map,
    decide_1dim,
    independent_family,
    label_admits,
    label_components,
    search_compatible_family,
    search_partial_protocol,
)
from chromatic_ebp.tasks import (
    ColoredTask,
    ColorlessTask,
    approx_agreement,
    colorize,
    consensus,
    covering_task,
    hexagone,
    set_agreement,
)
from chromatic_ebp.topology import ColoredComplex

import oracles


def test_partial_protocol_set_agreement_depth_zero():
    t = set_agreement(3, 2)
    for U in [frozenset({(0, 0)}), frozenset({(1, 2), (2, 0)})]:
        v = search_partial_protocol(t, U)
        assert v.status == FOUND and v.detail["depth"] == 0
        assert solves(v.artifact, t)[0]
        outs = set(v.artifact.delta.values())
        assert len(outs) == 1 and outs <= {x[1] for x in U}


def test_partial_protocol_consensus_singleton():
    t = consensus(3)
    v = search_partial_protocol(t, frozenset({(2, 1)}))
    assert v.status == FOUND and set(v.artifact.delta.values()) == {1}


def test_partial_protocol_empty_delta():
    I = ColoredComplex([{(0, 0), (1, 1)}])
    t = ColoredTask(I, ColoredComplex([{(0, 5)}]), {frozenset({(0, 0)}): [], frozenset({(1, 1)}): [{(1, 1)}],
                                                   frozenset({(0, 0), (1, 1)}): []}, 2)
    v = search_partial_protocol(t, frozenset({(0, 0)}))
    assert v.status == INFEASIBLE and "empty" in v.witness["reason"]


def test_consensus_family_infeasible_with_clash():
    v = search_compatible_family(consensus(3))
    assert v.status == INFEASIBLE
    w = v.witness
    assert w["kind"] == "cen-clash"
    # two singleton labels whose components give different constant values
    vals = {frozenset(x[1] for f in comp for x in f) for comp in w["components"].values()}
    assert len(vals) == 2 and all(len(x) == 1 for x in vals)


def test_two_process_consensus_infeasible():
    assert search_compatible_family(consensus(2, (0, 1))).status == INFEASIBLE


def test_unconstrained_task_found():
    one = frozenset({frozenset({"x"})})
    ins = frozenset({frozenset({"a", "b"})})
    d = {frozenset({"a"}): one, frozenset({"b"}): one, frozenset({"a", "b"}): one}
    t = colorize(ColorlessTask(ins, one, d), 2)
    v = search_compatible_family(t)
    assert v.status == FOUND
    fam = v.artifact
    assert audit_family(t, fam)[0]
    for L in fam.labels():
        assert set(fam[L].delta.values()) == {"x"}


def test_hexagone_colorized_infeasible():
    assert search_compatible_family(hexagone(2)).status == INFEASIBLE


def test_decide_hexagone_impossible():
    v = decide_1dim(hexagone(2))
    assert v.status == IMPOSSIBLE
    w = v.witness
    assert w["kind"] == "two-sheets"
    a, b = w["sheets"]
    assert a != b
    assert w["cycle"][0] == w["cycle"][-1]


def test_decide_trivial_covering_solvable():
    t = covering_task([("a", "b"), ("b", "c"), ("c", "a")], {"a": "x", "b": "y", "c": "z"}, 2)
    v = decide_1dim(t)
    assert v.status == SOLVABLE
    assert check_1dim_map(t, t.input, v.artifact["depth"], v.artifact["map"])


def test_decide_approx_agreement_matches_exhaustive_oracle():
    t = approx_agreement(2, 9)
    v = decide_1dim(t)
    assert v.status == SOLVABLE and v.artifact["depth"] == 2
    assert check_1dim_map(t, t.input, 2, v.artifact["map"])
    for d, expect in [(1, False), (2, True)]:
        facets = [f for s in t.input.facets for f in oracles.ch_iter(s, d)]

        def dom(x, d=d):
            return sorted({w[1] for phi in t.delta_of(oracles.base_carrier(x, d)) for w in phi if w[0] == x[0]})

        def ok(c, m, d=d):
            car = frozenset().union(*[oracles.base_carrier(x, d) for x in c])
            return t.allows(car, frozenset((x[0], m[x]) for x in c))

        assert (oracles.find_map(facets, dom, ok) is not None) == expect


def test_decide_needs_one_dimension():
    with pytest.raises(NotOneDimensional):
        decide_1dim(consensus(3))


def test_label_admits_and_components():
    t = consensus(3)
    L = frozenset({(0, 0)})
    assert label_components(t, L)
    assert label_admits(t, L, [(1, 0), (2, 0)])
    assert not label_admits(t, L, [(1, 1)])


def test_independent_family_members_solve_but_clash():
    t = consensus(3)
    fam = independent_family(t, b=SearchBudget(max_depth=2))
    assert fam.r_m >= 2
    for L in fam.labels():
        assert solves(fam[L], t)[0]
    a = fam[(frozenset({(0, 0)}),)]
    b = fam[(frozenset({(1, 1)}),)]
    assert not compatible(a, b)[0]


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(max_depth=-1)
