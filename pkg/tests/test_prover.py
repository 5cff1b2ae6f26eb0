import json

import pytest

from chromatic_ebp.adversary import Adversary
from chromatic_ebp.prover import (
    ADVERSARY,
    PROVER,
    PROVERS,
    Arena,
    IllegalQuery,
    ProverBudget,
    config_id,
    copoised_sets,
    make_prover,
    run_arena,
)
from chromatic_ebp.search import independent_family
from chromatic_ebp.subdivision import Configuration, run_schedule
from chromatic_ebp.tasks import consensus


def test_budget_parse():
    assert ProverBudget.parse("10,2,50") == ProverBudget(10, 2, 50)
    for bad in ("1,2", "0,1,1", "a,b,c"):
        with pytest.raises(ValueError):
            ProverBudget.parse(bad)


def test_make_prover():
    assert set(PROVERS) == {"cen_prober", "solo_runner", "random_walker", "flp_valency", "assignment_fuzzer"}
    with pytest.raises(ValueError):
        make_prover("oracle")


def test_copoised_sets():
    sigma = frozenset({(0, 0), (1, 1), (2, 2)})
    C = run_schedule(Configuration.initial(sigma), [frozenset({0})])
    sets = copoised_sets(C)
    assert frozenset({1, 2}) in sets and frozenset({0}) in sets
    assert frozenset({0, 1}) not in sets
    assert copoised_sets(C, within={0}) == [frozenset({0})]


def test_config_id_stable():
    sigma = frozenset({(0, 0), (1, 1)})
    a = run_schedule(Configuration.initial(sigma), [frozenset({0, 1})])
    b = run_schedule(Configuration.initial(sigma), [frozenset({0, 1})])
    c = run_schedule(Configuration.initial(sigma), [frozenset({0}), frozenset({1})])
    assert config_id(a) == config_id(b) != config_id(c)


def test_illegal_query(sa_family):
    t, fam = sa_family
    arena = Arena(t, Adversary(t, fam), ProverBudget(10, 1, 10))
    C = next(iter(arena.A.values()))
    C2, _ = arena.query(C, {0})
    far = run_schedule(C2, [frozenset({0})])
    with pytest.raises(IllegalQuery):
        arena.query(far, {0})
    with pytest.raises(IllegalQuery):
        arena.end_phase(C)


def test_query_budget_ends_with_adversary(sa_family):
    t, fam = sa_family
    v = run_arena(t, make_prover("solo_runner"), Adversary(t, fam), ProverBudget(5, 3, 500))
    assert v.winner == ADVERSARY and v.reason == "budget-exhausted"
    assert v.queries <= 5


def test_random_walker_is_reproducible(sa_family, tmp_path):
    t, fam = sa_family
    runs = []
    for i in range(2):
        path = tmp_path / f"t{i}.jsonl"
        v = run_arena(t, make_prover("random_walker", 7), Adversary(t, fam), ProverBudget(40, 2, 500), path)
        runs.append(path.read_text())
        assert v.winner == ADVERSARY and v.detail["audit_failures"] == 0
    assert runs[0] == runs[1]
    recs = [json.loads(line) for line in runs[0].splitlines()]
    assert {r["kind"] for r in recs} >= {"query"}
    assert all(r["audit"] == "pass" for r in recs)


def test_solo_runner_chains_terminate(sa_family):
    t, fam = sa_family
    adv = Adversary(t, fam)
    arena = Arena(t, adv, ProverBudget(200, 1, 500))
    C = next(iter(arena.A.values()))
    D = make_prover("solo_runner").run_solo(arena, C, [2])
    assert 2 not in D.active()
    assert len(D.schedule) == adv.t


def test_cen_prober_beats_consensus():
    t = consensus(3)
    fam = independent_family(t)
    v = run_arena(t, make_prover("cen_prober"), Adversary(t, fam), ProverBudget(100, 2, 500))
    assert v.winner == PROVER
    assert v.reason in ("violation", "infinite-evidence")
