"""Existence search: partial protocols, compatible families, 1-dim tasks."""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .protocol import (
    Label,
    PartialProtocol,
    as_label,
    cen_vertices,
    first_round_facets,
    format_label,
    in_first_round,
    label_key,
    label_prefixes,
    label_union,
    protocol_facets,
    solves,
)
from .subdivision import (
    carrier_at,
    ch_iter_facet,
    input_carrier,
    ordered_partitions,
    own_ancestor,
    simplex_input_carrier,
)
from .tasks import ColoredTask, restricted_outputs, vals
from .topology import (
    ColoredComplex,
    Simplex,
    Vertex,
    encode_simplex,
    encode_value,
    format_simplex,
    ids,
    level,
    simplex_key,
    sorted_simplex,
    vertex_key,
    view_key,
)


class SearchError(Exception):
    pass


class NotOneDimensional(SearchError):
    pass


class BudgetExceeded(SearchError):
    pass


@dataclass
class SearchBudget:
    max_depth: int = 3
    max_nodes: int = 10 ** 6

    def __post_init__(self):
        if self.max_depth < 0 or self.max_nodes <= 0:
            raise ValueError("budget must be positive")


FOUND, INFEASIBLE, UNKNOWN = "FOUND", "INFEASIBLE", "UNKNOWN"
SHALLOW_NODES = 20_000
SOLVABLE, IMPOSSIBLE = "SOLVABLE", "IMPOSSIBLE"


@dataclass
class SearchVerdict:
    status: str
    artifact: Any = None
    witness: Any = None
    detail: Dict[str, Any] = field(default_factory=dict)

    def __bool__(self):
        return self.status in (FOUND, SOLVABLE)


def _vs(xs):
    return sorted(xs, key=view_key)


# ------------------------------------------------------------ generic CSP

class SimplexCSP:
    """Assign outputs to vertices so every face of every facet passes ``ok``.

    ``ok(face, values)`` receives a frozenset of vertices and a dict of their
    values.  Values are tried in the order given by ``domains``.
    """

    def __init__(self, facets: Sequence[Simplex], domains: Mapping[Vertex, Sequence],
                 ok: Callable[[Simplex, Mapping[Vertex, Any]], bool],
                 fixed: Optional[Mapping[Vertex, Any]] = None, max_nodes: int = 10 ** 6,
                 order: Optional[Sequence[Vertex]] = None):
        self.facets = list(facets)
        self.domains = domains
        self.ok = ok
        self.fixed = dict(fixed or {})
        self.max_nodes = max_nodes
        self.nodes = 0
        self._face_cache: Dict[Vertex, list] = {}
        self.by_vertex: Dict[Vertex, List[Simplex]] = defaultdict(list)
        for f in self.facets:
            for v in f:
                self.by_vertex[v].append(f)
        free = [v for v in self.by_vertex if v not in self.fixed]
        self.order = list(order) if order is not None else self._bfs_order(free)

    def _bfs_order(self, free: List[Vertex]) -> List[Vertex]:
        free_set = set(free)
        seen, out = set(), []
        for start in sorted(free, key=vertex_key):
            if start in seen:
                continue
            seen.add(start)
            q = deque([start])
            while q:
                v = q.popleft()
                out.append(v)
                nbrs = set()
                for f in self.by_vertex[v]:
                    nbrs.update(f)
                for w in sorted(nbrs - seen, key=vertex_key):
                    if w in free_set:
                        seen.add(w)
                        q.append(w)
        return out

    def _faces(self, v: Vertex) -> List[Tuple[Simplex, Tuple[Vertex, ...]]]:
        fs = self._face_cache.get(v)
        if fs is None:
            seen = set()
            for f in self.by_vertex[v]:
                rest = [w for w in f if w != v]
                for k in range(0, len(rest) + 1):
                    for c in combinations(rest, k):
                        seen.add(frozenset(c) | {v})
            fs = [(g, tuple(w for w in g if w != v)) for g in sorted(seen, key=len)]
            self._face_cache[v] = fs
        return fs

    def _consistent(self, v: Vertex, assign: Dict[Vertex, Any]) -> bool:
        for g, others in self._faces(v):
            if all(w in assign for w in others) and not self.ok(g, assign):
                return False
        return True

    def check_fixed(self) -> Optional[Simplex]:
        assign = dict(self.fixed)
        for f in self.facets:
            known = [w for w in f if w in assign]
            for k in range(1, len(known) + 1):
                for g in combinations(known, k):
                    if not self.ok(frozenset(g), assign):
                        return frozenset(g)
        return None

    def solve(self) -> Optional[Dict[Vertex, Any]]:
        if self.check_fixed() is not None:
            return None
        assign = dict(self.fixed)
        order = self.order
        n = len(order)
        choice = [0] * n
        opts: List[Sequence] = [()] * n
        i = 0
        if n == 0:
            return assign
        opts[0] = self.domains[order[0]]
        while True:
            if i == n:
                return assign
            v = order[i]
            placed = False
            while choice[i] < len(opts[i]):
                x = opts[i][choice[i]]
                choice[i] += 1
                self.nodes += 1
                if self.nodes > self.max_nodes:
                    raise BudgetExceeded(f"CSP node cap {self.max_nodes} reached")
                assign[v] = x
                if self._consistent(v, assign):
                    placed = True
                    break
                del assign[v]
            if placed:
                i += 1
                if i < n:
                    choice[i] = 0
                    opts[i] = self.domains[order[i]]
                continue
            # backtrack
            choice[i] = 0
            i -= 1
            if i < 0:
                return None
            del assign[order[i]]


def task_face_check(t: ColoredTask):
    """Face predicate for SimplexCSP enforcing Δ(carrier)."""
    carriers: Dict[Simplex, Simplex] = {}

    def ok(g: Simplex, assign: Mapping[Vertex, Any]) -> bool:
        car = carriers.get(g)
        if car is None:
            car = carriers[g] = simplex_input_carrier(g)
        return t.allows(car, frozenset((v[0], assign[v]) for v in g))
    return ok


# -------------------------------------------------- partial protocol search

def label_facet_choices(t: ColoredTask, label: Label) -> List[Simplex]:
    """Outputs for the label's processes valid for every label prefix."""
    label = as_label(label)
    U = label_union(label)
    prefixes = label_prefixes(label)
    out = []
    for ro in restricted_outputs(t, U):
        lam = ro.label_facet
        good = True
        for P in prefixes[:-1]:
            part = frozenset(w for w in lam if w[0] in ids(P))
            if not t.allows(P, part):
                good = False
                break
        if good:
            out.append(lam)
    return out


def _link_subdivision(t: ColoredTask, U: Simplex, d: int) -> List[Simplex]:
    lk_facets = [f - U for f in t.input.facets_containing(U) if f - U]
    out = []
    for f in sorted(set(lk_facets), key=simplex_key):
        out.extend(ch_iter_facet(f, d))
    return out


def _strip(v: Vertex, drop: FrozenSet[int]) -> Vertex:
    """Remove the states of processes in ``drop`` from every nested view."""
    if level(v) == 0:
        return v
    return (v[0], frozenset(_strip(x, drop) for x in v[1] if x[0] not in drop))


def search_partial_protocol(t: ColoredTask, label, b: Optional[SearchBudget] = None,
                            r_m: Optional[int] = None) -> SearchVerdict:
    """Search μ: Ch^d(lk(U)) → 𝒪_U^i and assemble the partial protocol."""
    b = b or SearchBudget()
    label = as_label(label)
    U = label_union(label)
    lams = label_facet_choices(t, label)
    if not lams:
        return SearchVerdict(INFEASIBLE, witness={"reason": "empty Δ(U)", "label": format_label(label)})
    drop = ids(U)
    nodes = 0
    for d in range(0, b.max_depth + 1):
        facets = _link_subdivision(t, U, d)
        for i, lam in enumerate(lams):
            if not facets:
                mu: Dict[Vertex, Any] = {}
            else:
                def ok(g, assign, lam=lam):
                    tau = lam | frozenset((v[0], assign[v]) for v in g)
                    return t.allows(simplex_input_carrier(g) | U, tau)
                doms = {}
                for f in facets:
                    for v in f:
                        if v not in doms:
                            car = simplex_input_carrier([v]) | U
                            doms[v] = [x for x in t.allowed_values(car, v[0])
                                       if t.allows(car, lam | {(v[0], x)})]
                            lamvals = _vs(vals(lam))
                            doms[v].sort(key=lambda x: (x not in lamvals, view_key(x)))
                csp = SimplexCSP(facets, doms, ok, max_nodes=max(1, b.max_nodes - nodes))
                try:
                    mu = csp.solve()
                except BudgetExceeded:
                    return SearchVerdict(UNKNOWN, detail={"depth": d, "nodes": b.max_nodes})
                nodes += csp.nodes
                if mu is None:
                    continue
            rr = max(2, d + 1) if r_m is None else r_m
            if rr < d + 1:
                continue
            delta = _assemble(t, label, lam, mu, d, rr)
            p = PartialProtocol(label, rr, delta, t.input, name=format_label(label))
            ok_, wit = solves(p, t)
            if not ok_:
                raise SearchError(f"assembled protocol fails audit: {wit}")
            return SearchVerdict(FOUND, artifact=p, detail={"depth": d, "restricted_output": i})
    return SearchVerdict(UNKNOWN, detail={"depth": b.max_depth})


def _assemble(t, label, lam, mu, d, r_m) -> Dict[Vertex, Any]:
    lam_by = {w[0]: w[1] for w in lam}
    drop = ids(label_union(label))
    delta = {}
    for f in protocol_facets(t.input, label, r_m):
        for v in f:
            if v in delta:
                continue
            if v[0] in lam_by:
                delta[v] = lam_by[v[0]]
            else:
                a = own_ancestor(v, d) if d > 0 else own_ancestor(v, 0)
                key = _strip(a, drop) if d > 0 else a
                delta[v] = mu[key]
    return delta


# ------------------------------------------------------- family search

@dataclass
class Family:
    """A compatible family of partial protocols sharing r_m."""

    r_m: int
    members: Dict[Label, PartialProtocol]
    cen_values: Dict[Simplex, Dict[int, Any]] = field(default_factory=dict)

    def labels(self) -> List[Label]:
        return sorted(self.members, key=label_key)

    def __getitem__(self, label) -> PartialProtocol:
        return self.members[as_label(label)]

    def __contains__(self, label) -> bool:
        return as_label(label) in self.members

    def __len__(self):
        return len(self.members)


def simplex_labels(t: ColoredTask) -> List[Label]:
    return sorted(((s,) for s in t.input.simplices()), key=label_key)


def prefix_labels(t: ColoredTask, max_len: int = 2) -> List[Label]:
    """Sequence labels [U1..Uk] whose ids form a schedule prefix."""
    out = set()
    for sigma in t.input.facets:
        by = {v[0]: v for v in sigma}
        for part in ordered_partitions(ids(sigma)):
            for k in range(1, min(max_len, len(part)) + 1):
                out.add(tuple(frozenset(by[c] for c in blk) for blk in part[:k]))
    return sorted(out, key=label_key)


def _components(facets: Iterable[Simplex]) -> List[FrozenSet[Vertex]]:
    parent: Dict[Vertex, Vertex] = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f in facets:
        fl = list(f)
        for v in fl:
            parent.setdefault(v, v)
        for v in fl[1:]:
            a, b_ = find(fl[0]), find(v)
            if a != b_:
                parent[a] = b_
    groups: Dict[Vertex, set] = defaultdict(set)
    for v in parent:
        groups[find(v)].add(v)
    return sorted((frozenset(g) for g in groups.values()), key=lambda g: simplex_key(g))


class _Relaxation:
    """Component relaxation shared by all labels.

    Every δ_L is a simplicial map on the connected complex F_{r_m}(L), so
    its image lies in one connected component of ∪_{σ ⊇ L} Δ(σ).  CEN
    outputs of shared first-round simplices must be the same under every
    label containing them.  Unsatisfiability is independent of depth.
    """

    def __init__(self, t: ColoredTask, labels: Sequence[Label]):
        self.t = t
        self.labels = list(labels)
        self.comps: Dict[Label, List[FrozenSet[Vertex]]] = {}
        self.lams: Dict[Label, List[Simplex]] = {}
        for L in self.labels:
            U = label_union(L)
            img = [phi for sigma in t.input.facets_containing(U) for phi in t.delta_of(sigma)]
            comps = _components(img)
            lams = label_facet_choices(t, L)
            self.lams[L] = lams
            self.comps[L] = [c for c in comps if any(lam <= c for lam in lams)]
        # shared first-round simplices
        holders: Dict[Simplex, List[Label]] = defaultdict(list)
        for L in self.labels:
            faces = set()
            for f in first_round_facets(t.input, L):
                fl = list(f)
                for k in range(1, len(fl) + 1):
                    for c in combinations(fl, k):
                        faces.add(frozenset(c))
            for S in faces:
                holders[S].append(L)
        self.shared = {S: Ls for S, Ls in holders.items() if len(Ls) >= 2}
        self.options: Dict[Simplex, List[Simplex]] = {}
        for S in self.shared:
            self.options[S] = self._cen_options(S)

    def _cen_options(self, S: Simplex) -> List[Simplex]:
        car = simplex_input_carrier(S)
        opts = set()
        for phi in self.t.delta_of(car):
            opts.add(frozenset(w for w in phi if w[0] in ids(S)))
        return sorted(opts, key=lambda o: (tuple(view_key(w[1]) for w in sorted(o)), simplex_key(o)))

    def solve(self, labels=None, shared=None) -> Optional[Tuple[Dict[Label, FrozenSet], Dict[Simplex, Simplex]]]:
        labels = self.labels if labels is None else labels
        shared = self.shared if shared is None else shared
        lset = set(labels)
        cons = {S: [L for L in Ls if L in lset] for S, Ls in shared.items()}
        cons = {S: Ls for S, Ls in cons.items() if len(Ls) >= 2}
        by_label: Dict[Label, List[Simplex]] = defaultdict(list)
        for S, Ls in cons.items():
            for L in Ls:
                by_label[L].append(S)
        order = sorted(labels, key=lambda L: (len(self.comps[L]), -len(by_label[L]), label_key(L)))
        choice: Dict[Label, FrozenSet] = {}

        def fits(S):
            assigned = [choice[L] for L in cons[S] if L in choice]
            for o in self.options[S]:
                if all(o <= c for c in assigned):
                    return o
            return None

        def rec(i):
            if i == len(order):
                return True
            L = order[i]
            for c in self.comps[L]:
                choice[L] = c
                if all(fits(S) is not None for S in by_label[L]):
                    if rec(i + 1):
                        return True
                del choice[L]
            return False

        if any(not self.comps[L] for L in labels):
            return None
        if not rec(0):
            return None
        pins = {S: fits(S) for S in cons}
        return dict(choice), pins

    def core(self) -> Optional[dict]:
        """A small unsatisfiable cluster, searched one input facet at a time."""
        def facet_rank(sigma):
            return (-len(vals(sigma)), simplex_key(sigma))

        for sigma in sorted(self.t.input.facets, key=facet_rank):
            Ls = [L for L in self.labels if label_union(L) <= sigma]
            sh = {S: [L for L in LL if L in Ls] for S, LL in self.shared.items()
                  if simplex_input_carrier(S) <= sigma}
            sh = {S: LL for S, LL in sh.items() if len(LL) >= 2}
            if self.solve(Ls, sh) is not None:
                continue
            # deletion-based minimization: labels first, then simplices
            keep = list(Ls)
            # drop big labels first so the forced solo labels survive
            for L in sorted(keep, key=label_key, reverse=True):
                trial = [x for x in keep if x != L]
                if self.solve(trial, sh) is None:
                    keep = trial
            shk = {S: LL for S, LL in sh.items() if sum(1 for L in LL if L in keep) >= 2}
            order = sorted(shk, key=lambda S: (-len(S), simplex_key(S)))
            for S in order:
                trial = {k: v for k, v in shk.items() if k != S}
                if self.solve(keep, trial) is None:
                    shk = trial
            return {
                "kind": "cen-clash",
                "input_facet": sigma,
                "labels": sorted(keep, key=label_key),
                "simplices": sorted(shk, key=simplex_key),
                "components": {L: self.comps[L] for L in keep},
            }
        return None


def _preferred(lam: Simplex, domain: Sequence, p: int) -> List:
    lam_by = {w[0]: w[1] for w in lam}
    first = [lam_by[p]] if p in lam_by else []
    rest = [x for x in _vs(vals(lam)) if x not in first]
    head = [x for x in first + rest if x in domain]
    return head + [x for x in domain if x not in head]


def extend_label(t: ColoredTask, L: Label, comp: FrozenSet[Vertex], pins: Mapping[Simplex, Simplex],
                 r_m: int, max_nodes: int, ch_cache: Optional[dict] = None) -> Optional[PartialProtocol]:
    """Per-label CSP on F_{r_m}(L) with CEN vertices pinned."""
    lams = [lam for lam in label_facet_choices(t, L) if lam <= comp]
    if not lams:
        return None
    facets: List[Simplex] = []
    for f1 in first_round_facets(t.input, L):
        if ch_cache is not None:
            key = (f1, r_m - 1)
            if key not in ch_cache:
                ch_cache[key] = ch_iter_facet(f1, r_m - 1)
            facets.extend(ch_cache[key])
        else:
            facets.extend(ch_iter_facet(f1, r_m - 1))
    fixed: Dict[Vertex, Any] = {}
    for S, o in pins.items():
        if not all(in_first_round(v, L) for v in S):
            continue
        ob = {w[0]: w[1] for w in o}
        for q, cv in cen_vertices(S, r_m).items():
            if cv in fixed and fixed[cv] != ob[q]:
                return None
            fixed[cv] = ob[q]
    comp_by: Dict[int, set] = defaultdict(set)
    for w in comp:
        comp_by[w[0]].add(w[1])
    check = task_face_check(t)
    for lam in lams:
        doms = {}
        for f in facets:
            for v in f:
                if v in doms or v in fixed:
                    continue
                base = [x for x in t.allowed_values(input_carrier(v), v[0]) if x in comp_by[v[0]]]
                doms[v] = _preferred(lam, base, v[0])
        csp = SimplexCSP(facets, doms, check, fixed=fixed, max_nodes=max_nodes)
        sol = csp.solve()
        if sol is not None:
            return PartialProtocol(L, r_m, sol, t.input, name=format_label(L))
    return None


def audit_family(t: ColoredTask, fam: Family) -> Tuple[bool, Optional[dict]]:
    """Every member solves t and all CEN outputs agree on shared simplices."""
    for L in fam.labels():
        ok, wit = solves(fam.members[L], t)
        if not ok:
            return False, {"kind": "solves", "label": L, **wit}
    seen: Dict[Simplex, Tuple[Label, Dict]] = {}
    for L in fam.labels():
        p = fam.members[L]
        faces = set()
        for f in first_round_facets(t.input, L):
            fl = list(f)
            for k in range(1, len(fl) + 1):
                for c in combinations(fl, k):
                    faces.add(frozenset(c))
        for S in faces:
            out = {q: p.decide(v) for q, v in cen_vertices(S, p.r_m).items()}
            if S in seen:
                if seen[S][1] != out:
                    return False, {"kind": "compatible", "simplex": S, "labels": [seen[S][0], L],
                                   "outputs": [seen[S][1], out]}
            else:
                seen[S] = (L, out)
    return True, None


def search_compatible_family(t: ColoredTask, labels=None, b: Optional[SearchBudget] = None,
                             ) -> SearchVerdict:
    b = b or SearchBudget()
    if labels is None or labels == "simplices":
        labels = simplex_labels(t)
    elif labels == "prefixes":
        labels = prefix_labels(t)
    else:
        labels = [as_label(L) for L in labels]
    rel = _Relaxation(t, labels)
    sol = rel.solve()
    d1 = decide_1dim(t) if t.input.dim == 1 else None
    if sol is None:
        core = rel.core()
        if core is None and d1 is not None and d1.status == IMPOSSIBLE:
            core = d1.witness
        return SearchVerdict(INFEASIBLE, witness=core, detail={"stage": "relaxation"})
    comps, pins = sol
    if d1 is not None and d1.status == IMPOSSIBLE:
        return SearchVerdict(INFEASIBLE, witness=d1.witness, detail={"stage": "1-dim"})
    ch_cache: dict = {}
    top = max(2, b.max_depth)
    for r_m in range(2, top + 1):
        # shallow depths get a small node cap; deeper rounds have more room
        cap = b.max_nodes if r_m == top else min(b.max_nodes, SHALLOW_NODES)
        members: Dict[Label, PartialProtocol] = {}
        failed = None
        for L in labels:
            try:
                p = extend_label(t, L, comps[L], pins, r_m, cap, ch_cache)
            except BudgetExceeded:
                p = None
            if p is None:
                failed = L
                break
            members[L] = p
        if failed is None:
            fam = Family(r_m, members, {S: {w[0]: w[1] for w in o} for S, o in pins.items()})
            ok, wit = audit_family(t, fam)
            if not ok:
                raise SearchError(f"family failed its audit: {wit}")
            return SearchVerdict(FOUND, artifact=fam, detail={"r_m": r_m, "labels": len(labels)})
    return SearchVerdict(UNKNOWN, detail={"max_depth": b.max_depth, "failed_label": format_label(failed)})


def refine_family(t: ColoredTask, fam: Family, max_len: int = 2) -> Family:
    """Add sequence labels [U1..Uk] by restricting δ_{U1} to F([U1..Uk]).

    Members with a common first block then agree wherever their complexes
    meet, so compatibility carries over from the simplex family.
    """
    members = dict(fam.members)
    for L in prefix_labels(t, max_len):
        if L in members:
            continue
        parent = fam.members.get(L[:1])
        if parent is None:
            raise SearchError(f"no member for the first block of {format_label(L)}")
        members[L] = PartialProtocol(L, fam.r_m, parent.delta, t.input, name=format_label(L))
    return Family(fam.r_m, members, dict(fam.cen_values))


def independent_family(t: ColoredTask, labels=None, b: Optional[SearchBudget] = None) -> Family:
    """One partial protocol per label with no compatibility requirement.

    Used to play an adversary on tasks whose compatible family does not
    exist; its phase-1 answers are valid, its finalization may not be.
    """
    b = b or SearchBudget()
    labels = simplex_labels(t) if labels is None else [as_label(L) for L in labels]
    rel = _Relaxation(t, labels)
    for r_m in range(2, max(2, b.max_depth) + 1):
        members: Dict[Label, PartialProtocol] = {}
        for L in labels:
            p = None
            for comp in rel.comps[L]:
                try:
                    p = extend_label(t, L, comp, {}, r_m, b.max_nodes)
                except BudgetExceeded:
                    p = None
                if p is not None:
                    break
            if p is None:
                break
            members[L] = p
        else:
            return Family(r_m, members)
    raise SearchError("some label has no partial protocol within budget")


def label_components(t: ColoredTask, label) -> List[FrozenSet[Vertex]]:
    """Connected pieces of the output image a partial protocol for label may use."""
    L = as_label(label)
    return _Relaxation(t, [L]).comps[L]


def label_admits(t: ColoredTask, label, outputs: Iterable[Tuple[int, Any]]) -> bool:
    """Can a partial protocol for label produce all of these (process, value) pairs?

    Its decision map is simplicial on a connected complex, so every output it
    produces lies in one component that also holds the label's own outputs.
    """
    outs = frozenset(outputs)
    return any(outs <= c for c in label_components(t, label))


# ------------------------------------------------------------- 1-dim ---

def _graph(facets: Iterable[Simplex]) -> Dict[Vertex, set]:
    g: Dict[Vertex, set] = defaultdict(set)
    for f in facets:
        fl = list(f)
        for v in fl:
            g[v]
        for a, c in combinations(fl, 2):
            g[a].add(c)
            g[c].add(a)
    return g


def _path(g: Mapping[Vertex, set], a: Vertex, z: Vertex) -> Optional[List[Vertex]]:
    if a not in g or z not in g:
        return None
    prev = {a: None}
    q = deque([a])
    while q:
        x = q.popleft()
        if x == z:
            out = []
            while x is not None:
                out.append(x)
                x = prev[x]
            return out[::-1]
        for y in sorted(g[x], key=vertex_key):
            if y not in prev:
                prev[y] = x
                q.append(y)
    return None


def _pad(path: List, length: int) -> List:
    """Stretch a path to exactly ``length`` edges by stuttering back and forth."""
    extra = length - (len(path) - 1)
    if extra < 0 or extra % 2:
        raise SearchError("cannot pad path to that length")
    if len(path) == 1:
        raise SearchError("cannot pad a single vertex")
    out = [path[0]]
    for _ in range(extra // 2):
        out += [path[1], path[0]]
    return out + path[1:]


def edge_walk(f: Simplex, d: int) -> List[Vertex]:
    """Vertices of Ch^d(edge) in order from the lower color's corner."""
    facets = ch_iter_facet(f, d)
    g = _graph(facets)
    lo = min(ids(f))
    corners = [v for v in g if len(g[v]) == 1]
    start = min((v for v in corners if v[0] == lo), key=vertex_key)
    walk, prev = [start], None
    while True:
        nxt = [y for y in g[walk[-1]] if y != prev]
        if not nxt:
            return walk
        prev = walk[-1]
        walk.append(nxt[0])


def decide_1dim(t: ColoredTask, subcomplex: Optional[ColoredComplex] = None) -> SearchVerdict:
    """Exact solvability of a task whose input complex is 1-dimensional."""
    I = subcomplex or t.input
    if I.dim != 1:
        raise NotOneDimensional(f"input dimension is {I.dim}")
    verts = sorted(I.vertices(), key=vertex_key)
    edges = sorted((f for f in I.simplices() if len(f) == 2), key=simplex_key)
    doms = {v: sorted({w for phi in t.delta_of(frozenset({v})) for w in phi}, key=vertex_key) for v in verts}
    comp_of: Dict[Simplex, Dict[Vertex, int]] = {}
    for e in edges:
        cs = _components(t.delta_of(e))
        comp_of[e] = {w: i for i, c in enumerate(cs) for w in c}
    nbrs: Dict[Vertex, List[Simplex]] = defaultdict(list)
    for e in edges:
        for v in e:
            nbrs[v].append(e)
    order = []
    seen = set()
    for s in verts:
        if s in seen:
            continue
        seen.add(s)
        q = deque([s])
        while q:
            v = q.popleft()
            order.append(v)
            for e in nbrs[v]:
                for w in e:
                    if w not in seen:
                        seen.add(w)
                        q.append(w)
    m: Dict[Vertex, Vertex] = {}

    def consistent(v):
        for e in nbrs[v]:
            (w,) = tuple(e - {v})
            if w in m:
                cm = comp_of[e]
                if m[v] not in cm or m[w] not in cm or cm[m[v]] != cm[m[w]]:
                    return False
        return True

    def rec(i):
        if i == len(order):
            return True
        v = order[i]
        for x in doms[v]:
            m[v] = x
            if consistent(v) and rec(i + 1):
                return True
            del m[v]
        return False

    if rec(0):
        paths = {}
        longest = 1
        for e in edges:
            a, z = sorted(e, key=lambda v: v[0])
            p = _path(_graph(t.delta_of(e)), m[a], m[z])
            paths[e] = p
            longest = max(longest, len(p) - 1)
        d = 0
        while 3 ** d < longest:
            d += 1
        mapping: Dict[Vertex, Any] = {}
        for e in edges:
            walk = edge_walk(e, d)
            p = _pad(paths[e], 3 ** d)
            for v, w in zip(walk, p):
                mapping[v] = w[1]
        for v in verts:
            if not nbrs[v]:
                mapping[_lift_vertex(v, d)] = m[v][1]
        return SearchVerdict(SOLVABLE, artifact={"depth": d, "map": mapping, "vertex_choice": m})
    return SearchVerdict(IMPOSSIBLE, witness=_impossibility_witness(t, I))


def _lift_vertex(v: Vertex, d: int) -> Vertex:
    for _ in range(d):
        v = (v[0], frozenset({v}))
    return v


def check_1dim_map(t: ColoredTask, I: ColoredComplex, d: int, mapping: Mapping[Vertex, Any]) -> bool:
    for f in I.facets:
        for g in ch_iter_facet(f, d):
            fl = list(g)
            for k in range(1, len(fl) + 1):
                for c in combinations(fl, k):
                    c = frozenset(c)
                    tau = frozenset((v[0], mapping[v]) for v in c)
                    if not t.allows(simplex_input_carrier(c), tau):
                        return False
    return True


def exhaustive_1dim_maps(t: ColoredTask, d: int) -> bool:
    """Oracle: brute-force a valid map Ch^d(ℐ) → 𝒪 by plain backtracking."""
    facets = []
    for f in t.input.facets:
        facets.extend(ch_iter_facet(f, d))
    doms = {}
    for f in facets:
        for v in f:
            doms[v] = list(t.allowed_values(input_carrier(v), v[0]))
    csp = SimplexCSP(facets, doms, task_face_check(t), max_nodes=10 ** 7)
    return csp.solve() is not None


def _impossibility_witness(t: ColoredTask, I: ColoredComplex) -> dict:
    """For covering tasks: a cycle whose lift fails to close (two sheets)."""
    cl = t.colorless
    if cl is not None and cl.inputs and all(len(s) <= 2 for s in cl.inputs):
        from .tasks import covering_sheets
        edges = sorted((s for s in cl.inputs if len(s) == 2), key=_vs)
        cycle = _find_cycle(edges)
        if cycle is not None:
            starts = covering_sheets(cl, frozenset({cycle[0]}))
            lifts = []
            for s0 in starts:
                (x,) = tuple(s0)
                lift = [x]
                for a, z in zip(cycle, cycle[1:]):
                    sheet = [sh for sh in covering_sheets(cl, frozenset({a, z})) if lift[-1] in sh]
                    if not sheet:
                        lift = None
                        break
                    (y,) = tuple(sheet[0] - {lift[-1]})
                    lift.append(y)
                lifts.append(lift)
            if all(l is not None and l[-1] != l[0] for l in lifts):
                first = lifts[0]
                return {
                    "kind": "two-sheets",
                    "cycle": list(cycle),
                    "lift": first,
                    "closing_edge": [cycle[-2], cycle[-1]],
                    "sheets": [[first[0]], [first[-1]]],
                    "all_lifts": lifts,
                }
    return {"kind": "unsat", "vertices": sorted(I.vertices(), key=vertex_key)}


def _find_cycle(edges: List[FrozenSet]) -> Optional[List]:
    g: Dict[Any, set] = defaultdict(set)
    for e in edges:
        a, c = _vs(e)
        g[a].add(c)
        g[c].add(a)
    if not g:
        return None
    start = _vs(g)[0]
    prev = {start: None}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in _vs(g[x]):
            if y == prev[x]:
                continue
            if y in prev:
                # cycle through x and y: paths to the root
                px, py = [x], [y]
                while prev[px[-1]] is not None:
                    px.append(prev[px[-1]])
                while prev[py[-1]] is not None:
                    py.append(prev[py[-1]])
                common = next(v for v in px if v in py)
                a = px[:px.index(common) + 1]
                c = py[:py.index(common)]
                cyc = list(reversed(a)) + c + [common]
                # rotate so the cycle starts at the smallest vertex
                body = cyc[:-1]
                i = body.index(_vs(body)[0])
                body = body[i:] + body[:i]
                return body + [body[0]]
            prev[y] = x
            stack.append(y)
    return None
