"""Extension-based provers and the arena that referees them."""
from __future__ import annotations

import hashlib
import json
import os
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .adversary import Adversary, AdversaryError, ExplorationBudget, FinalizationError
from .protocol import in_first_round, label_key
from .search import label_admits
from .subdivision import BOT, Configuration, apply_schedule, facet_for_partition, ordered_partitions
from .tasks import ColoredTask
from .topology import encode_value, ids, simplex_key, vertex_by_color, vertex_key

PROVER = "PROVER"
ADVERSARY = "ADVERSARY"


class IllegalQuery(Exception):
    """The prover queried a configuration outside 𝒜(φ) ∪ 𝒜'(φ)."""


@dataclass(frozen=True)
class ProverBudget:
    max_queries: int = 200
    max_phases: int = 3
    max_chain_length: int = 500

    def __post_init__(self):
        if min(self.max_queries, self.max_phases, self.max_chain_length) < 1:
            raise ValueError("budget entries must be positive")

    @classmethod
    def parse(cls, text: str) -> "ProverBudget":
        parts = [int(x) for x in text.split(",")]
        if len(parts) != 3:
            raise ValueError("budget must be Q,P,L")
        return cls(*parts)


@dataclass
class Verdict:
    winner: str
    reason: str
    transcript: List[dict]
    detail: dict = field(default_factory=dict)
    phases: int = 1
    queries: int = 0

    def summary(self) -> dict:
        return {"winner": self.winner, "reason": self.reason, "phases": self.phases,
                "queries": self.queries, "detail": self.detail}


class _Stop(Exception):
    def __init__(self, winner, reason, detail=None):
        super().__init__(f"{winner}: {reason}")
        self.winner, self.reason, self.detail = winner, reason, detail or {}


def config_id(C: Configuration) -> str:
    """Short stable name: inputs, schedule and outputs."""
    payload = {
        "inputs": sorted([v[0], encode_value(v[1])] for v in C.input_simplex()),
        "schedule": [sorted(b) for b in C.schedule],
        "outputs": [[p, encode_value(x)] for p, x in C.outputs],
    }
    return hashlib.sha1(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def _enc(x):
    return None if x is BOT else encode_value(x)


class Arena:
    """Phase bookkeeping for one prover against one adversary."""

    def __init__(self, task: ColoredTask, adversary: Adversary, budget: ProverBudget, log_path=None):
        self.task = task
        self.adv = adversary
        self.budget = budget
        self.phase = 1
        self.alpha: Tuple[FrozenSet[int], ...] = ()
        self.A: Dict[tuple, Configuration] = {C.key(): C for C in self._initials()}
        self.A2: Dict[tuple, Configuration] = {}
        self.depth: Dict[tuple, int] = {k: 0 for k in self.A}
        self.queries = 0
        self.phase_start = 0
        self.transcript: List[dict] = []
        self.audit_failures = 0
        self.log_path = log_path
        self.verbose = os.environ.get("CHROMATIC_ARENA_LOG", "")

    def _initials(self) -> List[Configuration]:
        return [Configuration.initial(s, self.task.n_plus_1)
                for s in sorted(self.task.input.facets, key=simplex_key)]

    # --------------------------------------------------------- helpers --
    def configs(self) -> List[Configuration]:
        """𝒜(φ) ∪ 𝒜'(φ) in a deterministic order."""
        out = list(self.A.values()) + [C for k, C in self.A2.items() if k not in self.A]
        return out

    def frontier(self) -> List[Configuration]:
        return [C for C in self.configs() if C.active()]

    def want_more(self) -> bool:
        """Has this phase used less than its even share of the remaining queries?"""
        left = self.budget.max_queries - self.phase_start
        share = left // max(1, self.budget.max_phases - self.phase + 1)
        return self.queries - self.phase_start < max(1, share)

    def _legal(self, C: Configuration) -> None:
        k = C.key()
        if k not in self.A and k not in self.A2:
            raise IllegalQuery(f"configuration {config_id(C)} is not in 𝒜(φ) ∪ 𝒜'(φ)")

    def _charge(self) -> None:
        if self.queries >= self.budget.max_queries:
            raise _Stop(ADVERSARY, "budget-exhausted", {"limit": "queries"})
        self.queries += 1

    def _record(self, rec: dict) -> None:
        fails = self.adv.failures
        rec["audit"] = "pass" if len(fails) == self.audit_failures else "fail"
        self.audit_failures = len(fails)
        rec["t-after"] = self.adv.t
        rec["phase"] = self.phase
        self.transcript.append(rec)
        if self.verbose:
            print(json.dumps(rec, sort_keys=True, default=str))

    def _check_outputs(self, C: Configuration) -> None:
        outs = frozenset(C.outputs)
        if outs and not self.task.allows(C.input_simplex(), outs):
            raise _Stop(PROVER, "violation", {"config": config_id(C),
                                             "outputs": [[p, _enc(x)] for p, x in C.outputs]})

    def _admit(self, C2: Configuration, d: int) -> None:
        k = C2.key()
        self.A2.setdefault(k, C2)
        self.depth[k] = min(self.depth.get(k, d), d)

    # --------------------------------------------------------- queries --
    def query(self, C: Configuration, P: Iterable[int]) -> Tuple[Configuration, Dict[int, Any]]:
        self._legal(C)
        P = frozenset(P)
        self._charge()
        d = self.depth.get(C.key(), 0) + 1
        if d > self.budget.max_chain_length:
            # the adversary guarantees finite chains; running out is a budget matter
            raise _Stop(ADVERSARY, "budget-exhausted", {"limit": "chain-length"})
        C2, resp = self.adv.handle_query(C, P)
        self._admit(C2, d)
        self._record({"kind": "query", "C": config_id(C), "P": sorted(P),
                      "response": {str(p): _enc(x) for p, x in resp.items()}, "C-after": config_id(C2)})
        self._check_outputs(C2)
        return C2, resp

    def assign(self, C: Configuration, P: Iterable[int], f: Mapping[int, Any]):
        self._legal(C)
        P = frozenset(P)
        self._charge()
        try:
            sched = self.adv.handle_assignment_query(C, P, f)
        except ExplorationBudget as e:
            self._record({"kind": "assign", "C": config_id(C), "P": sorted(P),
                          "f": {str(q): _enc(x) for q, x in f.items()}, "response": "budget", "detail": str(e)})
            return None
        C2 = None
        if sched is not None:
            C2 = self.adv.replay(C, sched)
            self.adv.reached[C2.key()] = C2
            self._admit(C2, self.depth.get(C.key(), 0) + len(sched))
            self._check_outputs(C2)
        self._record({"kind": "assign", "C": config_id(C), "P": sorted(P),
                      "f": {str(q): _enc(x) for q, x in f.items()},
                      "response": None if sched is None else [sorted(b) for b in sched],
                      "C-after": None if C2 is None else config_id(C2)})
        return sched

    # ---------------------------------------------------------- phases --
    def end_phase(self, C_chosen: Configuration) -> None:
        k = C_chosen.key()
        if k not in self.A2:
            raise IllegalQuery("the end-of-phase configuration must be reached in this phase")
        alpha = tuple(C_chosen.schedule)
        C_ini = Configuration.initial(C_chosen.input_simplex(), self.task.n_plus_1)
        rec = {"kind": "end-phase", "C": config_id(C_chosen), "alpha": [sorted(b) for b in alpha]}
        try:
            fp = self.adv.end_phase(C_chosen, alpha, C_ini, self.A2.keys())
        except FinalizationError as e:
            rec["finalized"] = "failed"
            self._record(rec)
            raise _Stop(PROVER, "infinite-evidence", {"kind": "cannot-finalize", "message": str(e),
                                                      "witness": _jsonable(e.witness)})
        if fp is not None:
            rec["finalized"] = fp.to_json()["label"]
            rec["t_f"] = fp.t_f
        self.alpha = alpha
        self.phase += 1
        self.phase_start = self.queries
        self._record(rec)
        self._rebuild(C_ini)

    def _rebuild(self, C_ini: Configuration) -> None:
        """𝒜(φ+1): α(φ+1) from every initial configuration agreeing with C_ini on α's processes."""
        moved = frozenset().union(*self.alpha) if self.alpha else frozenset()
        keep = {v for v in C_ini.input_simplex() if v[0] in moved}
        self.A, self.A2, self.depth = {}, {}, {}
        for C0 in self._initials():
            if not keep <= C0.input_simplex():
                continue
            C = self.adv.replay(C0, self.alpha)
            self.adv.reached[C.key()] = C
            self.A[C.key()] = C
            self.depth[C.key()] = 0

    def all_terminated(self) -> bool:
        return all(not C.active() for C in self.A.values())

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.transcript:
                fh.write(json.dumps(rec, sort_keys=True, default=str) + "\n")


def _jsonable(x):
    return json.loads(json.dumps(x, default=str))


def run_arena(task: ColoredTask, prover: "Prover", adversary: Adversary, b: ProverBudget,
              transcript_path=None) -> Verdict:
    arena = Arena(task, adversary, b)
    verdict = None
    try:
        while True:
            if arena.phase > 1 and arena.all_terminated():
                raise _Stop(ADVERSARY, "all-terminated")
            choice = prover.play_phase(arena)
            if choice is None:
                raise _Stop(ADVERSARY, "budget-exhausted", {"limit": "prover-stopped"})
            if arena.phase >= b.max_phases:
                raise _Stop(ADVERSARY, "budget-exhausted", {"limit": "phases"})
            arena.end_phase(choice)
    except _Stop as s:
        verdict = Verdict(s.winner, s.reason, arena.transcript, s.detail, arena.phase, arena.queries)
    verdict.detail.setdefault("audit_failures", len(adversary.failures))
    verdict.detail.setdefault("prover", prover.name)
    if transcript_path:
        arena.save(transcript_path)
    return verdict


# ---------------------------------------------------------- strategies --

def copoised_sets(C: Configuration, within: Optional[Iterable[int]] = None) -> List[FrozenSet[int]]:
    """Nonempty sets of active processes poised on the same object."""
    act = C.active() if within is None else C.active() & frozenset(within)
    by: Dict[int, List[int]] = {}
    for p in sorted(act):
        by.setdefault(C.object_of(p), []).append(p)
    out = []
    for obj in sorted(by):
        ps = by[obj]
        for k in range(1, len(ps) + 1):
            out.extend(frozenset(c) for c in combinations(ps, k))
    return out


class Prover:
    name = "prover"

    def play_phase(self, arena: Arena) -> Optional[Configuration]:
        raise NotImplementedError

    @staticmethod
    def run_solo(arena: Arena, C: Configuration, ps: Iterable[int]) -> Configuration:
        """Repeat the still-active members of ps together until they all terminate."""
        ps = frozenset(ps)
        while True:
            live = C.active() & ps
            if not live:
                return C
            low = min(C.object_of(p) for p in live)
            C, _ = arena.query(C, frozenset(p for p in live if C.object_of(p) == low))

    @staticmethod
    def last_reached(arena: Arena) -> Optional[Configuration]:
        return list(arena.A2.values())[-1] if arena.A2 else None


class SoloRunner(Prover):
    """Run every process solo to termination from every configuration of 𝒜(φ)."""

    name = "solo_runner"

    def play_phase(self, arena):
        for C in list(arena.A.values()):
            for p in sorted(C.active()):
                if not arena.want_more():
                    return self.last_reached(arena)
                self.run_solo(arena, C, [p])
        return self.last_reached(arena)


class RandomWalker(Prover):
    name = "random_walker"

    def __init__(self, seed: int = 0, chains_per_phase: int = 8, max_steps: int = 40):
        self.rng = random.Random(seed)
        self.chains = chains_per_phase
        self.max_steps = max_steps

    def play_phase(self, arena):
        rng = self.rng
        for _ in range(self.chains):
            if not arena.want_more():
                break
            pool = arena.frontier()
            if not pool:
                break
            C = pool[rng.randrange(len(pool))]
            for _ in range(self.max_steps):
                opts = copoised_sets(C)
                if not opts:
                    break
                C, _ = arena.query(C, opts[rng.randrange(len(opts))])
        reached = list(arena.A2.values())
        return reached[rng.randrange(len(reached))] if reached else None


class CenProber(Prover):
    """Ask for CEN outputs of shared first-round simplices, then pick a first block
    whose partial protocol would have to contradict them."""

    name = "cen_prober"

    def __init__(self, reserve: int = 2):
        self.reserve = reserve
        self.observed: Dict[FrozenSet, FrozenSet[Tuple[int, Any]]] = {}

    def _initial(self, arena: Arena) -> Configuration:
        def rank(C):
            vs = C.input_simplex()
            return (-len({v[1] for v in vs}), simplex_key(vs))
        return min(arena.A.values(), key=rank)

    def _targets(self, task: ColoredTask, sigma) -> List[Tuple[FrozenSet, List[FrozenSet[int]]]]:
        """Shared first-round simplices of σ with a first round producing each."""
        labels = [(frozenset(c),) for k in range(1, len(sigma) + 1) for c in combinations(sorted(sigma, key=vertex_key), k)]
        out = {}
        for part in ordered_partitions(ids(sigma)):
            f = facet_for_partition(sigma, part)
            fl = sorted(f, key=simplex_key_v)
            for k in range(1, len(fl) + 1):
                for c in combinations(fl, k):
                    S = frozenset(c)
                    if S in out:
                        continue
                    holders = sum(1 for L in labels if all(in_first_round(v, L) for v in S))
                    if holders >= 2:
                        out[S] = list(part)
        return sorted(out.items(), key=lambda kv: (len(kv[0]), simplex_key(kv[0])))

    def _blocking_label(self, task, sigma):
        by = vertex_by_color(sigma)
        for k in range(1, len(sigma) + 1):
            for c in combinations(sorted(by), k):
                U = frozenset(by[p] for p in c)
                outs = set()
                for S, o in self.observed.items():
                    if all(in_first_round(v, (U,)) for v in S):
                        outs |= o
                if outs and not label_admits(task, (U,), outs):
                    return frozenset(c)
        return None

    def play_phase(self, arena):
        if arena.phase > 1:
            return SoloRunner.play_phase(self, arena)
        C0 = self._initial(arena)
        sigma = C0.input_simplex()
        block = None
        for S, part in self._targets(arena.task, sigma):
            if not arena.want_more():
                break
            need = ids(S)
            C = C0
            for blk in part:
                C, _ = arena.query(C, blk)
                if need <= frozenset().union(*[b for b in part[:part.index(blk) + 1]]):
                    break
            C = self.run_solo(arena, C, need)
            self.observed[S] = frozenset((p, x) for p, x in C.outputs if p in need)
            block = self._blocking_label(arena.task, sigma)
            if block is not None:
                break
        if block is None:
            return self.last_reached(arena)
        C, _ = arena.query(C0, block)
        return C


def simplex_key_v(v):
    return simplex_key([v])


class FlpValency(Prover):
    """Chase configurations from which different outputs are still reachable."""

    name = "flp_valency"

    def __init__(self, probes: int = 2):
        self.probes = probes

    def _valency(self, arena, C) -> FrozenSet:
        vals = set(x for _, x in C.outputs)
        D = C
        # lockstep: everyone at the lowest object moves together
        while D.active():
            low = min(D.object_of(p) for p in D.active())
            D, _ = arena.query(D, frozenset(p for p in D.active() if D.object_of(p) == low))
        vals |= {x for _, x in D.outputs}
        if self.probes > 1 and C.active():
            p = min(C.active())
            E = self.run_solo(arena, C, [p])
            vals |= {x for _, x in E.outputs}
        return frozenset(vals)

    def play_phase(self, arena):
        def rank(C):
            vs = C.input_simplex()
            return (-len({v[1] for v in vs}), simplex_key(vs))
        C = min(arena.A.values(), key=rank) if arena.phase == 1 else list(arena.A.values())[0]
        while C.active() and arena.want_more():
            best = None
            for P in copoised_sets(C):
                C2, _ = arena.query(C, P)
                v = self._valency(arena, C2)
                if best is None or len(v) > len(best[0]):
                    best = (v, C2)
            C = best[1]
        return C


class AssignmentFuzzer(Prover):
    """Assignment queries near the frontier with plausible and impossible targets."""

    name = "assignment_fuzzer"

    def __init__(self, seed: int = 0, ratio: float = 0.5, max_p: int = 2, frontier_slack: int = 1,
                 warmup: int = 3):
        self.rng = random.Random(seed)
        self.ratio = ratio
        self.max_p = max_p
        self.slack = frontier_slack
        self.warmup = warmup
        self.asked: List[dict] = []

    def draw_f(self, task, C, P) -> Dict[int, Any]:
        rng = self.rng
        sigma = C.input_simplex()
        values = sorted({v[1] for s in task.delta_of(sigma) for v in s}, key=repr)
        outs = sorted({x for _, x in C.outputs}, key=repr)
        others = sorted({v[1] for s in task.output.facets for v in s}, key=repr)
        Q = [q for q in sorted(P) if rng.random() < 0.8] or [min(P)]
        f = {}
        mode = rng.random()
        for q in Q:
            if mode < 0.45 and outs:
                f[q] = outs[rng.randrange(len(outs))]
            elif mode < 0.8:
                f[q] = values[rng.randrange(len(values))]
            else:
                f[q] = others[rng.randrange(len(others))]
        return f

    def play_phase(self, arena):
        rng = self.rng
        while True:
            pool = arena.frontier()
            if not pool or not arena.want_more():
                return self.last_reached(arena)
            top = max(max(C.object_of(p) for p in C.active()) for C in pool)
            near = [C for C in pool if max(C.object_of(p) for p in C.active()) >= top - self.slack]
            C = near[rng.randrange(len(near))]
            # assignment sets: deep processes only, pairs only at the very frontier
            opts = [P for P in copoised_sets(C) if len(P) <= self.max_p and
                    min(C.object_of(p) for p in P) >= top - (0 if len(P) > 1 else self.slack)]
            if top > self.warmup and opts and rng.random() < self.ratio:
                P = opts[rng.randrange(len(opts))]
                f = self.draw_f(arena.task, C, P)
                sched = arena.assign(C, P, f)
                self.asked.append({"C": C, "P": P, "f": f, "answer": sched, "t": arena.adv.t})
            else:
                opts = copoised_sets(C)
                arena.query(C, opts[rng.randrange(len(opts))])


PROVERS = {
    "cen_prober": lambda seed=0: CenProber(),
    "solo_runner": lambda seed=0: SoloRunner(),
    "random_walker": lambda seed=0: RandomWalker(seed),
    "flp_valency": lambda seed=0: FlpValency(),
    "assignment_fuzzer": lambda seed=0: AssignmentFuzzer(seed),
}


def make_prover(name: str, seed: int = 0) -> Prover:
    try:
        return PROVERS[name](seed)
    except KeyError:
        raise ValueError(f"unknown prover {name!r}; choose from {sorted(PROVERS)}") from None
