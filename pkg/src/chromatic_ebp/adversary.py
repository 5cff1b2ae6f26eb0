"""The adaptive adversary.

S^0..S^t are never materialized as whole complexes.  ``facets_at(σ, r)``
recomputes the facets of S^r containing σ from S^{r-1} on demand, which is
cheap because levels below t never change once t has moved past them.
"""
from __future__ import annotations

import random
from collections import defaultdict, deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .neighbor import NeighborError, canonical_neighbor, category_path, shared_vertices
from .protocol import (
    Label,
    PartialProtocol,
    as_label,
    first_round_facets,
    format_label,
    label_key,
    label_union,
    vertex_in_label,
)
from .search import BudgetExceeded, Family, SimplexCSP, label_admits
from .subdivision import (
    BOT,
    Configuration,
    apply_schedule,
    carrier_at,
    ch_facet,
    input_carrier,
    own_ancestor,
    simplex_input_carrier,
)
from .tasks import ColoredTask
from .topology import (
    ColoredComplex,
    Simplex,
    Vertex,
    encode_value,
    encode_vertex,
    format_simplex,
    format_vertex,
    ids,
    level,
    simplex_key,
    vertex_key,
)


class AdversaryError(Exception):
    pass


class NotReached(AdversaryError):
    pass


class NotCoPoised(AdversaryError):
    pass


class NotChoosable(AdversaryError):
    pass


class FinalizationError(AdversaryError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness or {}


class InvariantViolation(AdversaryError):
    def __init__(self, msg, dump=None):
        super().__init__(msg)
        self.dump = dump or {}


class ExplorationBudget(AdversaryError):
    pass


@dataclass(frozen=True)
class Term:
    """Why a vertex terminated: its value, label and the rule that set it."""

    value: Any
    label: Label
    rule: str
    t: int
    via: Optional[Vertex] = None
    facet: Optional[Simplex] = None
    source: Optional[Vertex] = None


# ------------------------------------------------------- active distance --

def _adjacency(facets: Iterable[Simplex]) -> Dict[Vertex, Set[Vertex]]:
    adj: Dict[Vertex, Set[Vertex]] = defaultdict(set)
    for f in facets:
        for v in f:
            adj[v].update(f)
    for v in adj:
        adj[v].discard(v)
    return adj


def active_distance_in(facets: Iterable[Simplex], terminated: Callable[[Vertex], bool],
                       A: Iterable[Vertex], B: Iterable[Vertex]) -> float:
    """0-1 BFS: an edge costs 1 only when both endpoints are active."""
    adj = _adjacency(facets)
    A, B = set(A), set(B)
    dist = {a: 0 for a in A}
    dq = deque(A)
    while dq:
        v = dq.popleft()
        d = dist[v]
        if v in B:
            return d
        for w in adj.get(v, ()):
            c = 0 if (terminated(v) or terminated(w)) else 1
            nd = d + c
            if nd < dist.get(w, float("inf")):
                dist[w] = nd
                if c == 0:
                    dq.appendleft(w)
                else:
                    dq.append(w)
    return float("inf")


def subdivided_image(facets: Iterable[Simplex], S: Iterable[Vertex]) -> Set[Vertex]:
    """Vertices of χ(G) whose carrier in G lies inside the vertex set S."""
    S = set(S)
    out = set()
    for f in facets:
        for v in f:
            if v in S:
                out.add(v)
            elif isinstance(v[1], frozenset) and v[1] and v[1] <= S:
                out.add(v)
    return out


# ---------------------------------------------------------- adversary ---

class Adversary:
    """Adaptive protocol for one task and one compatible family.

    ``mode`` is ``"phase1"`` (finalize right after phase 1 on the first
    process set of α(2)) or ``"phase2"`` (the family carries two-block
    sequence labels and finalization happens after phase 2).
    """

    def __init__(self, task: ColoredTask, family: Family, r_a: int = 2, r_s: int = 3,
                 mode: str = "phase1", guard_budget: int = 200_000):
        if r_a < 1 or r_s < 1:
            raise ValueError("r_a and r_s must be at least 1")
        if mode not in ("phase1", "phase2"):
            raise ValueError(f"unknown mode {mode!r}")
        self.task = task
        self.family = family
        self.inputs = task.input
        self.n = task.n_plus_1
        self.r_m = family.r_m
        self.r_a = r_a
        self.r_s = r_s
        self.mode = mode
        self.t = self.r_m + r_a + 1
        self.term: Dict[Vertex, Term] = {}
        self.cool: Dict[Tuple[int, Label], Tuple[int, int]] = {}
        self.phase = 1
        self.alpha: List[FrozenSet[int]] = []
        self.c_ini: Optional[Configuration] = None
        self.prefix: Label = ()
        self.final: Optional["FinalProtocol"] = None
        self.reached: Dict[tuple, Configuration] = {}
        self.explored: Set[tuple] = set()
        self.commitments: List[dict] = []
        self.answers: List[dict] = []
        self.failures: List[dict] = []
        self.events: List[dict] = []
        self.guard_budget = guard_budget
        self.work = 0
        self._qid = 0
        labs = family.labels()
        self.labels: List[Label] = [L for L in labs
                                    if not any(M != L and M[:len(L)] == L for M in labs)]
        self._fm: Dict[int, Dict[Simplex, Tuple[Simplex, ...]]] = defaultdict(dict)
        self._um: Dict[Tuple[Simplex, int], Tuple[Simplex, ...]] = {}
        self._lab_cache: Dict[Vertex, List[Label]] = {}
        for sigma in sorted(self.inputs.facets, key=simplex_key):
            C = Configuration.initial(sigma, self.n)
            self.reached[C.key()] = C

    # --------------------------------------------------------- forking --
    def fork(self) -> "Adversary":
        other = object.__new__(Adversary)
        other.__dict__.update(self.__dict__)
        other.term = dict(self.term)
        other.cool = dict(self.cool)
        other.alpha = list(self.alpha)
        other.reached = dict(self.reached)
        other.explored = set(self.explored)
        other.commitments = list(self.commitments)
        other.answers = list(self.answers)
        other.failures = list(self.failures)
        other.events = list(self.events)
        # facets at levels <= t depend only on frozen levels and can be shared
        other._fm = defaultdict(dict, {r: d for r, d in self._fm.items() if r <= self.t})
        return other

    # ------------------------------------------------------- lazy S^r --
    def delta(self, v: Vertex):
        """δ(v): an output, BOT, or None while v is undefined."""
        x = self.term.get(v)
        if x is not None:
            return x.value
        lv = level(v)
        if lv < self.t:
            return BOT
        if lv == self.t and self.final is not None:
            return self.final.value(v)
        return None

    def facets_at(self, sigma: Simplex, r: int) -> Tuple[Simplex, ...]:
        """Facets of S^r containing σ (empty if σ is not a simplex of S^r)."""
        if r > self.t:
            raise AdversaryError(f"S^{r} does not exist yet (t = {self.t})")
        memo = self._fm[r]
        hit = memo.get(sigma)
        if hit is not None:
            return hit
        self.work += 1
        if r == 0:
            res = tuple(sorted(self.inputs.facets_containing(sigma), key=simplex_key))
        else:
            old = frozenset(v for v in sigma if level(v) < r)
            new = sigma - old
            if any(level(v) > r for v in sigma) or any(v not in self.term for v in old):
                res = ()
            else:
                tau = old
                for v in new:
                    tau = tau | v[1]
                if any(x in self.term for v in new for x in v[1]):
                    res = ()
                else:
                    out = []
                    for F in self.facets_at(tau, r - 1):
                        T = frozenset(w for w in F if w in self.term)
                        A = F - T
                        if not old <= T:
                            continue
                        if not A:
                            if not new:
                                out.append(F)
                            continue
                        for f in ch_facet(A):
                            if new <= f:
                                out.append(T | f)
                    res = tuple(out)
        memo[sigma] = res
        return res

    def star(self, v: Vertex, r: Optional[int] = None) -> Tuple[Simplex, ...]:
        return self.facets_at(frozenset({v}), self.t if r is None else r)

    def neighbors(self, v: Vertex, r: Optional[int] = None) -> Set[Vertex]:
        out: Set[Vertex] = set()
        for F in self.star(v, r):
            out.update(F)
        out.discard(v)
        return out

    def exists(self, s: Iterable[Vertex], r: Optional[int] = None) -> bool:
        return bool(self.facets_at(frozenset(s), self.t if r is None else r))

    def uniform_facets(self, tau: Simplex, r: int) -> Tuple[Simplex, ...]:
        """Facets of Ch^r(ℐ) containing τ."""
        key = (tau, r)
        hit = self._um.get(key)
        if hit is not None:
            return hit
        if r == 0:
            res = tuple(sorted(self.inputs.facets_containing(tau), key=simplex_key))
        else:
            new = frozenset(v for v in tau if level(v) == r)
            base = frozenset(x for v in new for x in v[1]) | (tau - new)
            out = []
            if not (tau - new):
                for F in self.uniform_facets(base, r - 1):
                    for f in ch_facet(F):
                        if new <= f:
                            out.append(f)
            res = tuple(out)
        self._um[key] = res
        return res

    def active_distance(self, A: Iterable[Vertex], B: Iterable[Vertex], max_nodes: int = 50_000) -> float:
        """Active distance in S^t, explored lazily from A."""
        A, B = set(A), set(B)
        dist = {a: 0 for a in A}
        dq = deque(A)
        seen = 0
        while dq:
            v = dq.popleft()
            d = dist[v]
            if v in B:
                return d
            seen += 1
            if seen > max_nodes:
                raise ExplorationBudget("active distance search too large")
            tv = v in self.term
            for w in self.neighbors(v):
                c = 0 if (tv or w in self.term) else 1
                nd = d + c
                if nd < dist.get(w, float("inf")):
                    dist[w] = nd
                    (dq.appendleft if c == 0 else dq.append)(w)
        return float("inf")

    # ----------------------------------------------------------- rules --
    def possible_labels(self, v: Vertex) -> List[Label]:
        hit = self._lab_cache.get(v)
        if hit is None:
            c = carrier_at(v, self.r_m)
            hit = [L for L in self.labels if all(vertex_in_label(x, L) for x in c)]
            self._lab_cache[v] = hit
        return hit

    def _cool_ok(self, rule: int, L: Label) -> bool:
        last = self.cool.get((rule, L))
        if last is None:
            return True
        t_used, _ = last
        # reuse inside the same complex S^t is not a new use
        return t_used == self.t or self.t - t_used >= self.r_s

    def guard(self, v: Vertex, L: Label) -> Optional[Vertex]:
        """A differently labelled terminated vertex within active distance 2."""
        if all(tm.label == L for tm in self.term.values()):
            return None
        seen = {v}
        frontier = [v]
        budget = self.guard_budget
        for cost in range(3):
            nxt = []
            for a in frontier:
                for x in sorted(self.neighbors(a), key=vertex_key):
                    budget -= 1
                    tm = self.term.get(x)
                    if tm is not None:
                        if tm.label != L:
                            return x
                        continue
                    if cost < 2 and x not in seen:
                        seen.add(x)
                        nxt.append(x)
            if budget < 0:
                # too large to certify: treat as unsafe
                self.events.append({"kind": "guard-budget", "vertex": format_vertex(v)})
                return v
            frontier = nxt
        return None

    def _valid_with(self, v: Vertex, x, star: Sequence[Simplex]) -> Optional[dict]:
        """Does giving v the value x keep every terminated face inside Δ?"""
        checked = set()
        for F in star:
            T = [w for w in F if w != v and w in self.term]
            for k in range(len(T) + 1):
                for S in combinations(T, k):
                    g = frozenset(S) | {v}
                    if g in checked:
                        continue
                    checked.add(g)
                    outs = frozenset([(v[0], x)] + [(w[0], self.term[w].value) for w in S])
                    if not self.task.allows(simplex_input_carrier(g), outs):
                        return {"simplex": g, "outputs": outs}
        return None

    def _member(self, L: Label) -> PartialProtocol:
        return self.family[L]

    def rule2_value(self, v: Vertex, L: Label) -> Optional[Tuple[Any, dict]]:
        """δ_L of the canonical neighbor, or the carrier rule."""
        tau = carrier_at(v, self.r_m)
        p = v[0]
        member = self._member(L)
        for s_n in self.uniform_facets(tau, self.r_m):
            if not shared_vertices(s_n, L):
                continue
            try:
                nb = canonical_neighbor(s_n, L, self.r_m)
            except NeighborError:
                nb = None
            if nb is not None:
                w = nb.vertex(p)
                if input_carrier(w) <= input_carrier(v):
                    return member.decide(w), {"facet": s_n, "source": w, "rule": "rule2"}
            # carrier rule: borrow from a vertex that saw only the first block
            top = L[0]
            cands = sorted((x for x in tau if carrier_at(x, 1) <= frozenset((q, top) for q in ids(top))),
                           key=vertex_key)
            if cands:
                w = cands[0]
                return member.decide(w), {"facet": s_n, "source": w, "rule": "carrier"}
            return None
        return None

    def _terminate(self, v: Vertex, x, L: Label, rule: str, **kw) -> None:
        if v in self.term:
            raise InvariantViolation(f"δ is write-once: {format_vertex(v)}")
        self.term[v] = Term(x, L, rule, self.t, **kw)
        key = (1 if rule == "rule1" else 2, L)
        if rule in ("rule1", "rule2", "carrier"):
            self.cool[key] = (self.t, self._qid)

    def assign(self, v: Vertex) -> bool:
        """Try rules 1 and 2 on an undefined vertex of S^t."""
        star = self.star(v)
        if not star:
            raise InvariantViolation(f"{format_vertex(v)} is not a vertex of S^{self.t}")
        for L in self.possible_labels(v):
            if not self._cool_ok(1, L) or self.guard(v, L) is not None:
                continue
            x = self._member(L).decide(own_ancestor(v, self.r_m))
            bad = self._valid_with(v, x, star)
            if bad is not None:
                self.failures.append({"kind": "rule1-violation", "vertex": format_vertex(v), **_fmt(bad)})
                continue
            self._terminate(v, x, L, "rule1")
            return True
        adj_labels: Dict[Label, Vertex] = {}
        for F in star:
            for w in F:
                tm = self.term.get(w)
                if tm is not None and w != v:
                    prev = adj_labels.get(tm.label)
                    if prev is None or vertex_key(w) < vertex_key(prev):
                        adj_labels[tm.label] = w
        for L in sorted(adj_labels, key=label_key):
            if L not in self.family or not self._cool_ok(2, L) or self.guard(v, L) is not None:
                continue
            got = self.rule2_value(v, L)
            if got is None:
                self.events.append({"kind": "rule2-no-neighbor", "vertex": format_vertex(v),
                                    "label": format_label(L)})
                continue
            x, info = got
            bad = self._valid_with(v, x, star)
            if bad is not None:
                self.failures.append({"kind": "rule2-violation", "vertex": format_vertex(v), **_fmt(bad)})
                continue
            self._terminate(v, x, L, info["rule"], via=adj_labels[L], facet=info["facet"],
                            source=info["source"])
            return True
        return False

    def advance(self) -> None:
        """Set every undefined vertex of S^t to ⊥ and subdivide."""
        self.t += 1

    # --------------------------------------------------------- queries --
    def _check_query(self, C: Configuration, P) -> FrozenSet[int]:
        P = frozenset(P)
        if C.key() not in self.reached and C.key() not in self.explored:
            raise NotReached("configuration was never reached")
        if not P:
            raise NotCoPoised("empty process set")
        act = C.active()
        if not P <= act:
            raise NotCoPoised(f"processes {sorted(P - act)} are not active")
        if len({C.object_of(p) for p in P}) != 1:
            raise NotCoPoised("processes are poised on different objects")
        return P

    def _step(self, C: Configuration, P: FrozenSet[int]) -> Tuple[Configuration, Dict[int, Any]]:
        C2 = apply_schedule(C, P)
        new = sorted((C2.states[p] for p in P), key=vertex_key)
        r = level(new[0])
        if r > self.t:
            raise InvariantViolation(f"a process reached level {r} > t = {self.t}")
        if r == self.t:
            self._qid += 1
            if self.final is not None:
                for v in new:
                    if v not in self.term:
                        x = self.final.value(v)
                        if x is None:
                            raise AdversaryError(f"{format_vertex(v)} lies outside the finalized region")
                        self.term[v] = Term(x, self.final.label, "final", self.t)
            else:
                need_bot = False
                for v in new:
                    if v not in self.term and not self.assign(v):
                        need_bot = True
                if need_bot:
                    self.advance()
        outs = {}
        for p in P:
            tm = self.term.get(C2.states[p])
            if tm is not None:
                outs[p] = tm.value
        C2 = C2.with_outputs(outs)
        resp = {p: outs.get(p, BOT) for p in sorted(P)}
        return C2, resp

    def handle_query(self, C: Configuration, P) -> Tuple[Configuration, Dict[int, Any]]:
        P = self._check_query(C, P)
        C2, resp = self._step(C, P)
        self.reached[C2.key()] = C2
        self._audit_config(C2)
        return C2, resp

    def replay(self, C: Configuration, schedule: Sequence[Iterable[int]]) -> Configuration:
        """Read-only replay: every state must already be defined."""
        for P in schedule:
            C = apply_schedule(C, frozenset(P))
            outs = {}
            for p in P:
                x = self.delta(C.states[p])
                if x is None:
                    raise AdversaryError(f"replay hits undefined {format_vertex(C.states[p])}")
                if x is not BOT:
                    outs[p] = x
            C = C.with_outputs(outs)
        return C

    # ------------------------------------------------ assignment queries --
    def handle_assignment_query(self, C: Configuration, P, f: Mapping[int, Any],
                                max_configs: int = 20_000) -> Optional[List[FrozenSet[int]]]:
        """A P-only schedule from C giving each q in f the output f(q), or None.

        Returned schedules are built through ordinary queries, so every
        state on them is defined afterwards.  NULL is only answered when it
        can never be contradicted: f violates Δ together with C's outputs,
        or every P-only execution from C has terminated without meeting f.
        """
        P = self._check_query(C, P)
        f = dict(f)
        if not set(f) <= P:
            raise NotCoPoised("f assigns processes outside P")
        rec = {"C": C, "P": P, "f": f, "t": self.t}
        if not f:
            C2, _ = self._step(C, P)
            self.reached[C2.key()] = C2
            rec.update(answer=[P], outputs=C2.output_map, case="empty")
            self.answers.append(rec)
            return [P]
        outs = dict(C.output_map)
        clash = {q for q in f if q in outs and outs[q] != f[q]}
        merged = {**outs, **f}
        carrier = C.input_simplex()
        if clash or not self.task.allows(carrier, frozenset(merged.items())) or \
                not self.task.allows(visible_carrier(C, P), frozenset(f.items())):
            rec.update(answer=None, case="delta" if not clash else "terminated")
            self.commitments.append(rec)
            return None
        # exhaustive P-only exploration; every visited state gets defined
        stack = [(C, [])]
        visited = {C.key()}
        count = 0
        while stack:
            D, sched = stack.pop()
            act = sorted(P & D.active())
            if not act:
                continue
            r0 = min(D.object_of(p) for p in act)
            movers = frozenset(p for p in act if D.object_of(p) == r0)
            blocks = _nonempty_subsets(movers)
            children = []
            for B in blocks:
                D2, _ = self._step(D, B)
                count += 1
                if count > max_configs:
                    raise ExplorationBudget(f"assignment query explored {max_configs} configurations")
                k = D2.key()
                self.explored.add(k)
                s2 = sched + [B]
                got = D2.output_map
                if all(got.get(q) == x for q, x in f.items()):
                    self.reached[k] = D2
                    rec.update(answer=s2, outputs=got, case="found")
                    self.answers.append(rec)
                    return s2
                if k not in visited:
                    visited.add(k)
                    children.append((D2, s2))
            stack.extend(reversed(children))
        rec.update(answer=None, case="exhausted")
        self.commitments.append(rec)
        return None

    # ---------------------------------------------------------- phases --
    def end_phase(self, C_chosen: Configuration, alpha_next: Sequence[FrozenSet[int]],
                  C_ini: Configuration, allowed: Iterable[tuple]) -> Optional["FinalProtocol"]:
        """Record the prover's end-of-phase choice and finalize when due."""
        if C_chosen.key() not in set(allowed):
            raise NotChoosable("the chosen configuration was not reached in this phase")
        self.alpha = [frozenset(b) for b in alpha_next]
        self.c_ini = C_ini
        by = {v[0]: v for v in C_ini.input_simplex()}
        self.phase += 1
        if self.final is not None:
            return None
        need = 1 if self.mode == "phase1" else 2
        if self.phase - 1 < need:
            return None
        blocks = self.alpha[:need]
        if self.mode == "phase2" and len(blocks) == 2 and \
                frozenset(by) - blocks[0] == frozenset():
            blocks = blocks[:1]
        L = tuple(frozenset(by[p] for p in b) for b in blocks)
        if L not in self.family:
            # a one-block schedule in phase-2 mode: the leaf under it
            L = min((M for M in self.labels if M[:len(L)] == L), key=label_key)
        return self.finalize(L)

    def finalize(self, label, layered: bool = True, max_extra: int = 4, max_nodes: int = 400_000,
                 ) -> "FinalProtocol":
        fin = Finalizer(self, as_label(label), layered=layered, max_nodes=max_nodes)
        self.final = fin.run(max_extra)
        return self.final

    # ----------------------------------------------------------- audit --
    def _audit_config(self, C: Configuration) -> None:
        outs = C.output_map
        for p, s in enumerate(C.states):
            if s is None:
                continue
            x = self.delta(s)
            if x is None:
                self.failures.append({"kind": "invariant-1", "state": format_vertex(s)})
            elif (x is BOT) != (p not in outs) or (x is not BOT and outs[p] != x):
                self.failures.append({"kind": "outputs", "state": format_vertex(s)})
        done = frozenset(s for p, s in enumerate(C.states) if s is not None and p in outs)
        if done:
            tau = frozenset((s[0], outs[s[0]]) for s in done)
            if not self.task.allows(simplex_input_carrier(done), tau):
                self.failures.append({"kind": "delta", "simplex": format_simplex(done)})

    def audit(self, deep: bool = False) -> List[dict]:
        """Re-verify invariants (1)-(3) on everything materialized."""
        out = list(self.failures)
        for C in self.reached.values():
            for s in C.states:
                if s is None:
                    continue
                if level(s) > self.t:
                    out.append({"kind": "invariant-1", "state": format_vertex(s), "detail": "beyond t"})
                elif level(s) == self.t and s not in self.term and self.final is None and \
                        not C.terminated(s[0]) and self.delta(s) is None:
                    out.append({"kind": "invariant-1", "state": format_vertex(s), "detail": "undefined"})
        for v, tm in self.term.items():
            if tm.rule == "rule1":
                if not vertex_in_label(v, tm.label):
                    out.append({"kind": "invariant-2", "vertex": format_vertex(v), "detail": "outside F(U)"})
                elif tm.value != self._member(tm.label).decide(own_ancestor(v, self.r_m)):
                    out.append({"kind": "invariant-2", "vertex": format_vertex(v), "detail": "value"})
            elif tm.rule in ("rule2", "carrier"):
                # a terminated path with the same label reaching F(U')
                w, hops = v, 0
                while w is not None and self.term[w].rule in ("rule2", "carrier") and hops < 10 ** 6:
                    w, hops = self.term[w].via, hops + 1
                if w is None or self.term[w].label != tm.label or not vertex_in_label(w, tm.label):
                    out.append({"kind": "invariant-2", "vertex": format_vertex(v), "detail": "no path"})
                if tm.facet is None or not shared_vertices(tm.facet, tm.label):
                    out.append({"kind": "rule2-confinement", "vertex": format_vertex(v)})
        if deep:
            out.extend(self._audit_distance())
        for rec in self.answers:
            if rec.get("answer"):
                try:
                    got = self.replay(rec["C"], rec["answer"]).output_map
                except AdversaryError as e:
                    out.append({"kind": "replay", "detail": str(e)})
                    continue
                if any(got.get(q) != x for q, x in rec["f"].items()):
                    out.append({"kind": "replay", "detail": "outputs changed"})
        return out

    def _audit_distance(self) -> List[dict]:
        out = []
        recent = [v for v, tm in self.term.items() if tm.t >= self.t - 1 and level(v) <= self.t]
        for v in sorted(recent, key=vertex_key)[:200]:
            if level(v) > self.t:
                continue
            tm = self.term[v]
            seen, frontier = {v}, [v]
            for cost in range(3):
                nxt = []
                for a in frontier:
                    for x in self.neighbors(a):
                        xt = self.term.get(x)
                        if xt is not None:
                            if xt.label != tm.label and xt.rule != "final":
                                out.append({"kind": "invariant-3", "pair": [format_vertex(v), format_vertex(x)],
                                            "cost": cost})
                            continue
                        if cost < 2 and x not in seen:
                            seen.add(x)
                            nxt.append(x)
                frontier = nxt
        return out

    def snapshot(self) -> dict:
        return {
            "t": self.t,
            "phase": self.phase,
            "terminated": len(self.term),
            "labels": sorted({format_label(tm.label) for tm in self.term.values()}),
            "final": None if self.final is None else format_label(self.final.label),
        }


def init(task: ColoredTask, family: Family, r_a: int = 2, r_s: int = 3, mode: str = "phase1") -> Adversary:
    return Adversary(task, family, r_a=r_a, r_s=r_s, mode=mode)


AdversaryState = Adversary


def visible_carrier(C: Configuration, P: Iterable[int]) -> Simplex:
    """Inputs that P-only executions from C can ever see.

    Every output the adversary gives is valid for the input carrier of the
    deciding state, so f must already be valid for this carrier.
    """
    P = frozenset(P)
    low = min(C.object_of(p) for p in P)
    acc = simplex_input_carrier(C.states[p] for p in P)
    for k in range(low - 1, len(C.memory)):
        acc = acc | simplex_input_carrier(C.memory[k])
    return acc


def _nonempty_subsets(S: FrozenSet[int]) -> List[FrozenSet[int]]:
    items = sorted(S)
    out = []
    for k in range(len(items), 0, -1):
        for c in combinations(items, k):
            out.append(frozenset(c))
    return out


def _fmt(bad: dict) -> dict:
    return {"simplex": format_simplex(bad["simplex"]),
            "outputs": sorted((p, repr(x)) for p, x in bad["outputs"])}


# --------------------------------------------------------- finalization --

@dataclass
class FinalProtocol:
    """Total decision map on the non-uniform F_{t_f}(label).

    Terminated vertices keep their values; undefined vertices at level
    t_f take the band assignment near foreign-labelled sets and δ_label of
    their own level-r_m ancestor everywhere else.
    """

    label: Label
    t_f: int
    r_m: int
    term: Dict[Vertex, Term]
    band: Dict[Vertex, Any]
    member: PartialProtocol
    layers: Dict[Vertex, int] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def default(self, v: Vertex):
        return self.member.decide(own_ancestor(v, self.r_m))

    def value(self, v: Vertex):
        tm = self.term.get(v)
        if tm is not None:
            return tm.value
        lv = level(v)
        if lv < self.t_f:
            return BOT
        if lv > self.t_f or not vertex_in_label(v, self.label):
            return None
        x = self.band.get(v)
        return x if x is not None else self.default(v)

    def value_at(self, v: Vertex):
        x = self.value(v)
        return None if x is BOT else x

    def decide(self, v: Vertex):
        for j in range(1, level(v) + 1):
            x = self.value(own_ancestor(v, j))
            if x is not None and x is not BOT:
                return x
        raise AdversaryError(f"no decision along {format_vertex(v)}")

    def to_json(self) -> dict:
        return {
            "label": format_label(self.label),
            "t_f": self.t_f,
            "band": [[encode_vertex(v), encode_value(x)] for v, x in sorted(self.band.items(),
                                                                          key=lambda kv: vertex_key(kv[0]))],
            "stats": self.stats,
        }


class Finalizer:
    """Stages of finalization on F_t(label).

    1. subdivide (advance t) while the band problem is unsolvable;
    2-3. bands: breadth-first shells around every non-default terminated
       set, valued by the layer walk δ_{U'}(s_0..s_e), δ_U(s_e..s_0) and
       repaired by a simplex CSP where layers would clash;
    4. everything else takes δ_U of its own level-r_m ancestor.
    """

    def __init__(self, adv: Adversary, label: Label, layered: bool = True, max_nodes: int = 400_000):
        self.adv = adv
        self.label = label
        self.layered = layered
        self.max_nodes = max_nodes
        if label not in adv.family:
            raise FinalizationError(f"no partial protocol for {format_label(label)}")
        self.member = adv.family[label]

    def in_region(self, v: Vertex) -> bool:
        return level(v) >= 1 and vertex_in_label(v, self.label)

    def default(self, v: Vertex):
        return self.member.decide(own_ancestor(v, self.adv.r_m))

    def sources(self) -> List[Vertex]:
        adv = self.adv
        out = []
        for v, tm in adv.term.items():
            if level(v) >= 1 and self.in_region(v) and tm.value != self.default(v):
                out.append(v)
        return sorted(out, key=vertex_key)

    def region_star(self, v: Vertex) -> List[Simplex]:
        return [F for F in self.adv.star(v) if all(self.in_region(w) for w in F)]

    def layer_values(self, w: Vertex) -> List[Dict[int, Any]]:
        """Output sets of the walk for the set containing w."""
        adv = self.adv
        tm = adv.term[w]
        other = tm.label
        if other not in adv.family:
            return []
        tau = carrier_at(w, adv.r_m)
        for s_n in adv.uniform_facets(tau, adv.r_m):
            if not all(self.in_region(x) for x in s_n) or not shared_vertices(s_n, other):
                continue
            try:
                path = category_path(s_n, self.label, other)
            except NeighborError:
                continue
            d_o, d_u = adv.family[other], self.member
            seq = [{x[0]: d_o.decide(x) for x in s} for s in path]
            seq += [{x[0]: d_u.decide(x) for x in s} for s in reversed(path[:-1])]
            return seq
        return []

    @staticmethod
    def pick(v: Vertex, layer: Mapping[int, Any], r_m: int):
        p = v[0]
        if p in layer:
            return layer[p]
        pc = sorted(ids(carrier_at(v, r_m)) & set(layer))
        q = pc[0] if pc else min(layer)
        return layer[q]

    def shells(self, srcs: Sequence[Vertex], depth: int) -> Tuple[Dict[Vertex, int], Dict[Vertex, Vertex]]:
        adv = self.adv
        dist: Dict[Vertex, int] = {}
        origin: Dict[Vertex, Vertex] = {}
        frontier = list(srcs)
        for s in srcs:
            origin[s] = s
        for d in range(1, depth + 1):
            nxt = []
            for a in frontier:
                for F in self.region_star(a):
                    for x in sorted(F, key=vertex_key):
                        if x in adv.term or x in dist or level(x) != adv.t:
                            continue
                        dist[x] = d
                        origin[x] = origin[a]
                        nxt.append(x)
            frontier = nxt
        return dist, origin

    def attempt(self, srcs: Sequence[Vertex], depth: int, seqs: Dict[Vertex, List[Dict[int, Any]]]):
        adv = self.adv
        task = adv.task
        dist, origin = self.shells(srcs, depth)
        facets: Set[Simplex] = set()
        for v in list(srcs) + list(dist):
            facets.update(self.region_star(v))
        fixed: Dict[Vertex, Any] = {}
        domains: Dict[Vertex, List[Any]] = {}
        for F in facets:
            for x in F:
                if x in fixed or x in domains:
                    continue
                tm = adv.term.get(x)
                if tm is not None:
                    fixed[x] = tm.value
                elif x in dist:
                    allowed = list(task.allowed_values(input_carrier(x), x[0]))
                    pref = []
                    seq = seqs.get(origin[x]) or []
                    k = dist[x] - 1
                    if self.layered and k < len(seq):
                        pref.append(self.pick(x, seq[k], adv.r_m))
                    pref.append(self.default(x))
                    doms = []
                    for y in pref + allowed:
                        if y not in doms and y in allowed:
                            doms.append(y)
                    domains[x] = doms
                else:
                    fixed[x] = self.default(x)

        def ok(g: Simplex, assign: Mapping[Vertex, Any]) -> bool:
            tau = frozenset((w[0], assign[w]) for w in g)
            return task.allows(simplex_input_carrier(g), tau)

        order = sorted(domains, key=lambda x: (dist[x], vertex_key(x)))
        csp = SimplexCSP(sorted(facets, key=simplex_key), domains, ok, fixed=fixed,
                         max_nodes=self.max_nodes, order=order)
        bad = csp.check_fixed()
        if bad is not None:
            return None, {"fixed-clash": format_simplex(bad)}
        try:
            sol = csp.solve()
        except BudgetExceeded:
            return None, {"budget": self.max_nodes}
        if sol is None:
            return None, {"unsat": depth}
        band = {x: sol[x] for x in domains if sol[x] != self.default(x)}
        return (band, dist, facets), None

    def precheck(self) -> Optional[dict]:
        """All terminated outputs in F(label) must fit one admissible component."""
        adv = self.adv
        outs = frozenset((v[0], tm.value) for v, tm in adv.term.items() if self.in_region(v))
        if label_admits(adv.task, self.label, outs):
            return None
        return {"kind": "component-clash", "label": format_label(self.label),
                "outputs": [[p, encode_value(x)] for p, x in sorted(outs, key=repr)]}

    def run(self, max_extra: int) -> FinalProtocol:
        adv = self.adv
        clash = self.precheck()
        if clash is not None:
            raise FinalizationError(f"no partial protocol for {clash['label']} can keep the outputs "
                                    f"already given", witness=clash)
        srcs = self.sources()
        seqs = {w: self.layer_values(w) for w in srcs}
        longest = max((len(s) for s in seqs.values()), default=0)
        tried = []
        for extra in range(max_extra + 1):
            depths = sorted({longest, 1, 2, 3} if self.layered else {1, 2, 3})
            if self.layered and longest:
                depths = [longest] + [d for d in depths if d != longest]
            for depth in depths:
                if not srcs:
                    res = ({}, {}, set())
                    err = None
                else:
                    res, err = self.attempt(srcs, depth, seqs)
                if res is not None:
                    band, dist, facets = res
                    fp = FinalProtocol(self.label, adv.t, adv.r_m, adv.term, band, self.member,
                                       layers=dist, stats={"sources": len(srcs), "depth": depth,
                                                           "extra_subdivisions": extra,
                                                           "band": len(band), "facets": len(facets),
                                                           "attempts": tried})
                    fails = audit_final(adv, fp, facets)
                    if fails:
                        raise FinalizationError(f"finalized map fails its audit: {fails[:3]}")
                    return fp
                tried.append({"t": adv.t, "depth": depth, **err})
                if not srcs:
                    break
            if extra < max_extra:
                adv.advance()
                srcs = self.sources()
        raise FinalizationError(f"no band assignment found: {tried}")


def audit_final(adv: Adversary, fp: FinalProtocol, facets: Iterable[Simplex]) -> List[dict]:
    """Check every face of every facet touching a non-default value."""
    out = []
    seen = set()
    for F in facets:
        vals = {}
        for v in F:
            x = fp.value(v)
            if x is None or x is BOT:
                out.append({"kind": "undefined", "vertex": format_vertex(v)})
                break
            vals[v] = x
        else:
            fl = sorted(F, key=vertex_key)
            for k in range(1, len(fl) + 1):
                for g in combinations(fl, k):
                    g = frozenset(g)
                    if g in seen:
                        continue
                    seen.add(g)
                    tau = frozenset((v[0], vals[v]) for v in g)
                    if not adv.task.allows(simplex_input_carrier(g), tau):
                        out.append({"kind": "delta", "simplex": format_simplex(g)})
    return out


def sample_final(adv: Adversary, fp: FinalProtocol, n: int = 500, seed: int = 0) -> List[dict]:
    """Random executions inside F(label): each must end in a valid output simplex."""
    rng = random.Random(seed)
    firsts = first_round_facets(adv.inputs, fp.label)
    out = []
    for _ in range(n):
        F = rng.choice(firsts)
        while True:
            live = [v for v in F if fp.value(v) is BOT]
            undefined = [v for v in F if fp.value(v) is None]
            if undefined:
                out.append({"kind": "undefined", "simplex": format_simplex(F)})
                break
            if not live:
                break
            dead = frozenset(F) - frozenset(live)
            F = dead | rng.choice(ch_facet(frozenset(live)))
        else:
            continue
        if undefined:
            continue
        tau = frozenset((v[0], fp.value(v)) for v in F)
        if not adv.task.allows(simplex_input_carrier(F), tau):
            out.append({"kind": "delta", "simplex": format_simplex(F)})
    return out
