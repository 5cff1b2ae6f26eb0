"""Canonical neighbors, intersections of protocol complexes and categories."""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .protocol import Label, as_label, first_round_facets, label_union, vertex_in_label
from .subdivision import (
    carrier_at,
    ch_iter_facet,
    facet_from_rounds,
    input_carrier,
    ordered_partitions,
    rounds_from_facet,
    simplex_input_carrier,
)
from .topology import (ColoredComplex, Simplex, Vertex, format_simplex, ids, intern_vertex, level, simplex_key,
                       vertex_key)


class NeighborError(Exception):
    pass


class NoIntersection(NeighborError):
    pass


class NoNeighbor(NeighborError):
    """A sequence label can meet a facet that no neighbor can match."""


Schedule = List[FrozenSet[int]]


@dataclass(frozen=True)
class NeighborResult:
    neighbor: Simplex
    shared: Simplex
    rewrite: Tuple[FrozenSet[int], ...]
    label: Label

    def vertex(self, p: int) -> Vertex:
        for v in self.neighbor:
            if v[0] == p:
                return v
        raise KeyError(p)


@dataclass
class Category:
    label: Simplex
    members: List[Simplex]


# ------------------------------------------------------------ rewriting --

def limit(partition: Sequence[FrozenSet[int]], subset) -> Schedule:
    """Restrict an ordered partition to ``subset``, dropping emptied blocks."""
    subset = frozenset(subset)
    return [b & subset for b in partition if b & subset]


def rewrite_first_round(round1: Sequence[FrozenSet[int]], target: FrozenSet[int]) -> Schedule:
    """Move ``target`` to the front of a first round.

    With B1 the first block and A = target - B1, the blocks after B1 up to
    the last one meeting A form a partition of A ∪ D.  The new round is
    target, B1 - target, that partition limited to D, then the tail.
    """
    round1 = [frozenset(b) for b in round1]
    target = frozenset(target)
    b1, rest = round1[0], round1[1:]
    A = target - b1
    if A:
        last = max(i for i, b in enumerate(rest) if b & A)
        seg, tail = rest[:last + 1], rest[last + 1:]
        D = frozenset().union(*seg) - A
        middle = limit(seg, D)
    else:
        middle, tail = [], rest
    out = [target]
    if b1 - target:
        out.append(b1 - target)
    return out + middle + tail


def shared_vertices(s_n: Iterable[Vertex], label) -> Simplex:
    """SHA: vertices of s_n lying in F_r(label)."""
    label = as_label(label)
    return frozenset(v for v in s_n if vertex_in_label(v, label))


def canonical_neighbor(s_n, U_prime, r_m: Optional[int] = None) -> NeighborResult:
    s_n = frozenset(s_n)
    label = as_label(U_prime)
    lv = level(next(iter(s_n)))
    if r_m is not None and r_m != lv:
        raise NeighborError(f"facet is at level {lv}, not {r_m}")
    if lv < 2:
        raise NeighborError("canonical neighbors need r_m >= 2")
    sigma = simplex_input_carrier(s_n)
    W = label_union(label)
    if not W <= sigma:
        raise NoIntersection(f"{format_simplex(W)} is not a face of the facet's input carrier")
    sha = shared_vertices(s_n, label)
    if not sha:
        raise NoIntersection(f"{format_simplex(s_n)} misses F_{lv}")
    rounds = rounds_from_facet(s_n)
    if len(sha) == len(s_n):
        return NeighborResult(s_n, sha, tuple(rounds[0]), label)
    new1 = rewrite_first_round(rounds[0], ids(W))
    if len(label) == 1:
        nb = facet_from_rounds(sigma, [new1] + rounds[1:])
        return NeighborResult(nb, sha, tuple(new1), label)
    # sequence labels: split the merged block, else the first valid round
    head = [ids(u) for u in label]
    cands = [head + new1[1:]]
    rest = ids(sigma) - ids(W)
    cands += [head + list(p) for p in (ordered_partitions(rest) if rest else ((),))]
    for c in cands:
        nb = facet_from_rounds(sigma, [c] + rounds[1:])
        res = NeighborResult(nb, sha, tuple(c), label)
        if verify_neighbor(res, s_n, label)[0]:
            return res
    # later rounds must change too: first valid facet in schedule order
    for nb in _label_facets(sigma, label, lv):
        if sha <= nb:
            res = NeighborResult(nb, sha, tuple(rounds_from_facet(nb)[0]), label)
            if verify_neighbor(res, s_n, label)[0]:
                return res
    raise NoNeighbor(f"no neighbor for {format_simplex(s_n)}")


_LABEL_FACETS: Dict[tuple, List[Simplex]] = {}


def _label_facets(sigma: Simplex, label: Label, r: int) -> List[Simplex]:
    key = (sigma, label, r)
    if key not in _LABEL_FACETS:
        I = ColoredComplex([sigma], trusted=True)
        fs = []
        for f1 in first_round_facets(I, label):
            fs.extend(ch_iter_facet(f1, r - 1))
        _LABEL_FACETS[key] = fs
    return _LABEL_FACETS[key]


# --------------------------------------------------------- verification --

def verify_neighbor(r: NeighborResult, s_n, U_prime,
                    others: Optional[Mapping[Simplex, NeighborResult]] = None) -> Tuple[bool, Optional[dict]]:
    s_n = frozenset(s_n)
    label = as_label(U_prime)
    nb = r.neighbor
    if len(nb) != len(s_n) or ids(nb) != ids(s_n) or not all(vertex_in_label(v, label) for v in nb):
        return False, {"requirement": 1, "witness": nb}
    sha = shared_vertices(s_n, label)
    if not sha <= nb:
        return False, {"requirement": 2, "witness": sha - nb}
    by = {v[0]: v for v in nb}
    for v in sorted(s_n - sha, key=vertex_key):
        if input_carrier(v) != input_carrier(by[v[0]]):
            return False, {"requirement": 3, "witness": v}
    if others:
        for f2, r2 in others.items():
            for v in s_n & f2:
                if r2.vertex(v[0]) != by[v[0]]:
                    return False, {"requirement": 4, "witness": {"vertex": v, "facet": f2}}
    return True, None


def coherence_violations(results: Mapping[Simplex, NeighborResult]) -> List[dict]:
    """Requirement 4 over a whole family of facets, vertex by vertex."""
    seen: Dict[Vertex, Tuple[Vertex, Simplex]] = {}
    bad = []
    for f in sorted(results, key=simplex_key):
        r = results[f]
        for v in f:
            w = r.vertex(v[0])
            if v in seen and seen[v][0] != w:
                bad.append({"vertex": v, "facets": [seen[v][1], f], "images": [seen[v][0], w]})
            seen.setdefault(v, (w, f))
    return bad


# ---------------------------------------------------------- intersections

def intersection_complex(U1, U2, i: int, inputs: ColoredComplex) -> ColoredComplex:
    """Q_i(U1, U2): simplices of F_i(U1) whose vertices all lie in F_i(U2)."""
    l1, l2 = as_label(U1), as_label(U2)
    if i == 0:
        W = label_union(l1) | label_union(l2)
        return ColoredComplex(inputs.facets_containing(W), trusted=True)
    out = []
    for f1 in first_round_facets(inputs, l1):
        for f in ch_iter_facet(f1, i - 1):
            g = frozenset(v for v in f if vertex_in_label(v, l2))
            if g:
                out.append(g)
    return ColoredComplex(out)


def _ok_view(p: int, view: FrozenSet[Vertex], label: Label) -> bool:
    acc = frozenset()
    for u in label:
        acc = acc | u
        if p in ids(u):
            return view == acc
    return acc <= view


def intersection_by_restriction(U1, U2, i: int, inputs: ColoredComplex) -> ColoredComplex:
    """Q_i built as Ch^{i-1} of the first-round states that see U1 * U2.

    Vertices are generated from views directly (no F_1 enumeration), then
    assembled into chains of nested views; this is the independent check
    on ``intersection_complex``.
    """
    l1, l2 = as_label(U1), as_label(U2)
    W = label_union(l1) | label_union(l2)
    if i == 0:
        return ColoredComplex(inputs.facets_containing(W), trusted=True)
    q1 = []
    for sigma in inputs.facets_containing(W):
        rest = sorted(sigma - W, key=vertex_key)
        cand: List[Vertex] = []
        for k in range(len(rest) + 1):
            for extra in combinations(rest, k):
                view = W | frozenset(extra)
                for p in ids(view):
                    if _ok_view(p, view, l1) and _ok_view(p, view, l2):
                        cand.append(intern_vertex((p, view)))
        # maximal chains: nested views, and a process seen by another sees less
        cand.sort(key=lambda v: (len(v[1]), vertex_key(v)))
        faces = _chromatic_chains(cand)
        q1.extend(faces)
    q1 = ColoredComplex(q1)
    out = []
    for f in q1.facets:
        out.extend(ch_iter_facet(f, i - 1))
    return ColoredComplex(out)


def _compatible(a: Vertex, b: Vertex) -> bool:
    if a[0] == b[0]:
        return False
    va, vb = a[1], b[1]
    if not (va <= vb or vb <= va):
        return False
    if a[0] in ids(vb) and not va <= vb:
        return False
    if b[0] in ids(va) and not vb <= va:
        return False
    return True


def _chromatic_chains(cand: List[Vertex]) -> List[Simplex]:
    out = []

    def grow(cur: List[Vertex], start: int):
        extended = False
        for j in range(start, len(cand)):
            v = cand[j]
            if all(_compatible(v, w) for w in cur):
                extended = True
                grow(cur + [v], j + 1)
        if not extended and cur:
            out.append(frozenset(cur))

    grow([], 0)
    return out


# ------------------------------------------------------------ categories --

def min_carrier(sha: Iterable[Vertex]) -> Simplex:
    """mc: intersection of the level-1 carriers of the shared vertices."""
    it = iter(sha)
    acc = carrier_at(next(it), 1)
    for v in it:
        acc = acc & carrier_at(v, 1)
    return acc


def project(s_n, U_prime) -> Simplex:
    """Prj(s_n, U'): the face of s_n on the processes of its category label."""
    sha = shared_vertices(s_n, U_prime)
    if not sha:
        raise NoIntersection("facet misses the label's protocol complex")
    mc = min_carrier(sha)
    return frozenset(v for v in s_n if v[0] in ids(mc))


def categorize(U, U_prime, r_m: int, inputs: ColoredComplex) -> List[Category]:
    l1, l2 = as_label(U), as_label(U_prime)
    groups: Dict[Simplex, List[Simplex]] = defaultdict(list)
    for f1 in first_round_facets(inputs, l1):
        for f in ch_iter_facet(f1, r_m - 1):
            sha = shared_vertices(f, l2)
            if sha:
                groups[min_carrier(sha)].append(f)
    return [Category(k, groups[k]) for k in sorted(groups, key=lambda s: (-len(s), simplex_key(s)))]


def category_path(s_n, U, U_prime) -> List[Simplex]:
    """Path s_0 = Prj(s_n) ... s_e = CEN(s^k) of ids(s^k)-simplices in Q.

    Consecutive simplices share all but one vertex and every simplex has
    the same per-process carriers in the input complex as s_0 where that is
    possible; the walk is a breadth-first shortest path.
    """
    from .protocol import cen_vertices

    s_n = frozenset(s_n)
    l1, l2 = as_label(U), as_label(U_prime)
    sha = shared_vertices(s_n, l2)
    if not sha:
        raise NoIntersection("facet misses the label's protocol complex")
    sk = min_carrier(sha)
    r = level(next(iter(s_n)))
    start = frozenset(v for v in s_n if v[0] in ids(sk))
    goal = frozenset(cen_vertices(sk, r).values())
    if start == goal:
        return [start]
    P = ids(sk)
    # faces on P of the level-r facets above the level-1 facets containing sk
    faces = set()
    for f1 in first_round_facets(inputs_of(s_n), l1):
        if not sk <= f1:
            continue
        for f in ch_iter_facet(f1, r - 1):
            g = frozenset(v for v in f if v[0] in P)
            if all(vertex_in_label(v, l2) for v in g):
                faces.add(g)
    by_ridge: Dict[FrozenSet, List[Simplex]] = defaultdict(list)
    for g in faces:
        for v in g:
            by_ridge[g - {v}].append(g)
    prev = {start: None}
    q = deque([start])
    while q:
        g = q.popleft()
        if g == goal:
            path = []
            while g is not None:
                path.append(g)
                g = prev[g]
            return path[::-1]
        for v in sorted(g, key=vertex_key):
            for h in sorted(by_ridge[g - {v}], key=simplex_key):
                if h not in prev:
                    prev[h] = g
                    q.append(h)
    raise NeighborError("no path to the CEN simplex")


_INPUTS: Dict[Simplex, ColoredComplex] = {}


def inputs_of(s_n) -> ColoredComplex:
    """Single-facet input complex spanned by the facet's input carrier."""
    sigma = simplex_input_carrier(s_n)
    if sigma not in _INPUTS:
        _INPUTS[sigma] = ColoredComplex([sigma], trusted=True)
    return _INPUTS[sigma]
