from itertools import combinations, product

import pytest

from chromatic_ebp.tasks import (
    ColoredTask,
    ColorlessTask,
    LabelNotAllowed,
    NotACovering,
    check_colorless_property,
    check_monotone,
    colorize,
    consensus,
    covering_star,
    hexagone,
    hexagone_star,
    is_nontrivial_covering,
    link_task,
    restricted_outputs,
    set_agreement,
    task_from_json,
    vals,
)
from chromatic_ebp.topology import ColoredComplex


def binary_consensus_star():
    one = lambda *xs: frozenset(frozenset([x]) for x in xs)
    d = {frozenset({0}): one(0), frozenset({1}): one(1), frozenset({0, 1}): one(0, 1)}
    return ColorlessTask(frozenset({frozenset({0, 1})}), frozenset({frozenset({0}), frozenset({1})}), d)


def test_colorize_binary_consensus_two_processes():
    t = colorize(binary_consensus_star(), 2)
    want = {frozenset({(0, x), (1, y)}) for x in (0, 1) for y in (0, 1)}
    assert t.input.facets == want
    assert len(t.input.simplices()) == 8


def test_colorize_single_value():
    one = frozenset({frozenset({"x"})})
    t = colorize(ColorlessTask(one, one, {frozenset({"x"}): one}), 4)
    assert len(t.input.facets) == 1 and t.input.dim == 3


def test_colorized_hexagone_input_edges():
    h = hexagone_star()
    want = set()
    for s in h.inputs:
        for a, b in product(s, repeat=2):
            want.add(frozenset({(0, a), (1, b)}))
    assert hexagone(2).input.facets == want and len(want) == 9


def test_colorize_round_trip():
    for t in (set_agreement(3, 2), hexagone(2), consensus(3)):
        for s in t.input_simplices():
            for phi in t.delta_of(s):
                assert t.colorless.allows_star(vals(s), vals(phi))
            # every colorless image small enough to be held by ids(s) is realized exactly
            for phi_star in t.colorless.delta_star[vals(s)]:
                if len(phi_star) <= len(s):
                    assert any(vals(phi) == phi_star for phi in t.delta_of(s))


@pytest.mark.parametrize("make", [lambda: consensus(3), lambda: set_agreement(3, 2), lambda: hexagone(2)])
def test_builtins_are_monotone_and_colorless(make):
    t = make()
    assert check_monotone(t)[0]
    assert check_colorless_property(t)[0]


def test_property1_counterexample():
    # p0 may output 0 alone but loses that option once it has seen p1
    I = ColoredComplex([{(0, 0), (1, 1)}])
    delta = {
        frozenset({(0, 0)}): [{(0, 0)}],
        frozenset({(1, 1)}): [{(1, 1)}],
        frozenset({(0, 0), (1, 1)}): [{(0, 1), (1, 1)}],
    }
    t = ColoredTask(I, ColoredComplex([{(0, 1), (1, 1)}, {(0, 0)}]), delta, 2)
    ok, wit = check_colorless_property(t)
    assert not ok and wit["value"] == 0
    ok, wit = check_monotone(t)
    assert not ok


def test_restricted_outputs_consensus_singleton():
    ros = restricted_outputs(consensus(3), frozenset({(0, 0)}))
    assert len(ros) == 1
    assert ros[0].label_facet == frozenset({(0, 0)})
    for f in ros[0].component.facets:
        assert {v[1] for v in f} == {0}


def test_restricted_outputs_set_agreement_value_a():
    ros = restricted_outputs(set_agreement(3, 2), frozenset({(0, 0)}))
    assert ros and all(r.label_facet == frozenset({(0, 0)}) for r in ros)
    for r in ros:
        assert all(r.label_facet <= f for f in r.component.facets)


def test_full_facet_label():
    t = set_agreement(3, 2)
    full = next(iter(sorted(t.input.facets, key=repr)))
    ros = restricted_outputs(t, full)
    assert {r.label_facet for r in ros} == set(t.delta_of(full))
    lt = link_task(t, full, 0)
    assert lt.input.is_empty()


def test_link_task_bad_index():
    with pytest.raises(LabelNotAllowed):
        link_task(set_agreement(3, 2), frozenset({(0, 0)}), 99)


def test_hexagone_images():
    h = hexagone_star()
    assert h.delta_star[frozenset({"u0"})] == {frozenset({"v0"}), frozenset({"v3"})}
    assert h.delta_star[frozenset({"u0", "u1"})] == {frozenset({"v0", "v1"}), frozenset({"v3", "v4"})}
    assert is_nontrivial_covering(h)


def test_hexagone_sheets_disjoint():
    h = hexagone_star()
    for s, sheets in h.delta_star.items():
        for a, b in combinations(sheets, 2):
            assert not a & b


def test_not_a_covering_has_witness():
    O = [("a", "b"), ("b", "c")]
    f = {"a": "x", "b": "y", "c": "x"}
    with pytest.raises(NotACovering) as e:
        covering_star(O, f)
    assert len(e.value.witness["sheets"]) == 2


def test_set_agreement_allows_two_seen_values():
    t = set_agreement(3, 2)
    star = t.colorless.delta_star[frozenset({0, 1, 2})]
    assert all(len(s) <= 2 for s in star)
    assert frozenset({0, 2}) in star


def test_task_json_round_trip():
    t = set_agreement(3, 2)
    t2 = task_from_json(t.to_json())
    assert t2.input == t.input
    for s in t.input_simplices():
        assert t2.delta_of(s) == t.delta_of(s)
    assert task_from_json({"builtin": "consensus", "args": {"n": 2}}).n_plus_1 == 2
