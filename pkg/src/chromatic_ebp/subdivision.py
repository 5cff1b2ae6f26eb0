"""Chromatic subdivisions, carriers, schedules and IS configurations."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import combinations
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .topology import (
    intern_vertex,
    ColoredComplex,
    Simplex,
    TopologyError,
    Vertex,
    ids,
    level,
    maximal,
    simplex_key,
    sorted_simplex,
    vertex_by_color,
)


class SubdivisionError(TopologyError):
    pass


class NotAPartition(SubdivisionError):
    pass


class UndefinedVertex(SubdivisionError):
    pass


class InactiveProcess(SubdivisionError):
    pass


class MixedObjects(SubdivisionError):
    pass


class _Bottom:
    __slots__ = ()

    def __repr__(self):
        return "⊥"

    def __reduce__(self):
        return (_bottom, ())


def _bottom():
    return BOT


BOT = _Bottom()

Schedule = List[FrozenSet[int]]


# ------------------------------------------------------ ordered partitions

def _partitions(items: Tuple) -> List[Tuple[FrozenSet, ...]]:
    if not items:
        return [()]
    out = []
    n = len(items)
    # choose the first block, recurse on the rest
    for k in range(1, n + 1):
        for first in combinations(items, k):
            rest = tuple(x for x in items if x not in first)
            for tail in _partitions(rest):
                out.append((frozenset(first),) + tail)
    return out


def partition_key(p: Sequence[FrozenSet]) -> tuple:
    return tuple((len(b), min(b)) for b in p) + tuple(tuple(sorted(b)) for b in p)


@lru_cache(maxsize=None)
def ordered_partitions(items: FrozenSet) -> Tuple[Tuple[FrozenSet, ...], ...]:
    """All ordered set partitions, sorted by (block size, lowest member)."""
    ps = _partitions(tuple(sorted(items)))
    ps.sort(key=partition_key)
    return tuple(ps)


def facet_for_partition(base: Simplex, partition: Sequence[FrozenSet[int]]) -> Simplex:
    by = vertex_by_color(base)
    out = []
    prefix: List[Vertex] = []
    for block in partition:
        prefix.extend(by[c] for c in block)
        seen = frozenset(prefix)
        out.extend(intern_vertex((c, seen)) for c in block)
    return frozenset(out)


@lru_cache(maxsize=None)
def ch_facet(base: Simplex) -> Tuple[Simplex, ...]:
    """Facets of Ch(base) in ordered-partition order (memoized)."""
    if len(base) == 1:
        (v,) = tuple(base)
        return (frozenset({intern_vertex((v[0], base))}),)
    return tuple(facet_for_partition(base, p) for p in ordered_partitions(ids(base)))


@lru_cache(maxsize=None)
def ch_iter_facet(base: Simplex, depth: int) -> Tuple[Simplex, ...]:
    if depth == 0:
        return (base,)
    out = []
    for f in ch_iter_facet(base, depth - 1):
        out.extend(ch_facet(f))
    return tuple(out)


# ------------------------------------------------------------- carriers --

@lru_cache(maxsize=None)
def input_carrier(v: Vertex) -> Simplex:
    """The level-0 simplex a vertex has (transitively) seen."""
    view = v[1]
    if isinstance(view, frozenset) and view:
        acc = frozenset()
        for x in view:
            acc = acc | input_carrier(x)
        return acc
    return frozenset({v})


@lru_cache(maxsize=None)
def carrier_at(v: Vertex, j: int) -> Simplex:
    """Carrier of ``v`` in the level-``j`` complex it descends from."""
    lv = level(v)
    if lv <= j:
        return frozenset({v})
    if lv == j + 1:
        return v[1]
    acc = frozenset()
    for x in v[1]:
        acc = acc | carrier_at(x, j)
    return acc


def simplex_carrier_at(s: Iterable[Vertex], j: int) -> Simplex:
    acc = frozenset()
    for v in s:
        acc = acc | carrier_at(v, j)
    return acc


def simplex_input_carrier(s: Iterable[Vertex]) -> Simplex:
    acc = frozenset()
    for v in s:
        acc = acc | input_carrier(v)
    return acc


@lru_cache(maxsize=None)
def own_ancestor(v: Vertex, j: int) -> Vertex:
    """The same-colored vertex at level ``j`` that ``v`` evolved from."""
    lv = level(v)
    if lv <= j:
        return v
    for x in v[1]:
        if x[0] == v[0]:
            return own_ancestor(x, j)
    raise SubdivisionError("view without own state")


# --------------------------------------------------------- SubdividedComplex

@dataclass
class SubdividedComplex:
    base: ColoredComplex
    depth: int
    complex: ColoredComplex
    carrier_index: Dict[Vertex, Simplex]

    def carrier(self, s) -> Simplex:
        return carrier(s, self)


def _base_carrier(v: Vertex, base_vertices: FrozenSet[Vertex], memo: Dict[Vertex, Simplex]) -> Simplex:
    hit = memo.get(v)
    if hit is not None:
        return hit
    if v in base_vertices:
        res = frozenset({v})
    else:
        view = v[1]
        if not isinstance(view, frozenset):
            raise SubdivisionError("vertex outside the subdivided base")
        res = frozenset()
        for x in view:
            res = res | _base_carrier(x, base_vertices, memo)
    memo[v] = res
    return res


def _index(base: ColoredComplex, K: ColoredComplex, prior: Optional[Dict] = None) -> Dict[Vertex, Simplex]:
    bv = base.vertices()
    memo: Dict[Vertex, Simplex] = dict(prior or {})
    for v in K.vertices():
        _base_carrier(v, bv, memo)
    return {v: memo[v] for v in K.vertices()}


def identity_subdivision(K: ColoredComplex) -> SubdividedComplex:
    return SubdividedComplex(K, 0, K, {v: frozenset({v}) for v in K.vertices()})


def chromatic_subdivide(K, depth: int = 1) -> SubdividedComplex:
    """Ch^depth of a complex (or one more round on top of a subdivision)."""
    if isinstance(K, SubdividedComplex):
        base, start, cur = K.base, K.depth, K.complex
    else:
        base, start, cur = K, 0, K
    facets = list(cur.facets)
    for _ in range(depth):
        nxt = []
        for f in facets:
            nxt.extend(ch_facet(f))
        facets = nxt
    cx = ColoredComplex(facets, trusted=all(len(f) == len(facets[0]) for f in facets) and _pure(cur))
    return SubdividedComplex(base, start + depth, cx, _index(base, cx))


def _pure(K: ColoredComplex) -> bool:
    return len({len(f) for f in K.facets}) <= 1


def carrier(s, sub: SubdividedComplex) -> Simplex:
    s = frozenset(s)
    if s and s not in sub.complex:
        from .topology import NotInComplex, format_simplex
        raise NotInComplex(f"{format_simplex(s)} is not in the subdivision")
    acc = frozenset()
    for v in s:
        c = sub.carrier_index.get(v)
        if c is None:
            c = _base_carrier(v, sub.base.vertices(), {})
        acc = acc | c
    return acc


def non_boundary_complex(sub: SubdividedComplex) -> ColoredComplex:
    """Simplices whose vertices all have the whole base simplex as carrier."""
    if len(sub.base.facets) != 1:
        raise SubdivisionError("non-boundary complex needs a single base simplex")
    (top,) = tuple(sub.base.facets)
    gens = []
    for f in sub.complex.facets:
        inner = frozenset(v for v in f if sub.carrier_index[v] == top)
        if inner:
            gens.append(inner)
    return ColoredComplex(gens)


def ch_int(base: Simplex, depth: int) -> ColoredComplex:
    """Ch_int^depth(base), built directly from memoized facets."""
    gens = []
    for f in ch_iter_facet(base, depth):
        inner = frozenset(v for v in f if input_carrier_rel(v, base) == base)
        if inner:
            gens.append(inner)
    return ColoredComplex(gens)


def input_carrier_rel(v: Vertex, base: Simplex) -> Simplex:
    lb = level(next(iter(base)))
    return carrier_at(v, lb) if level(v) > lb else frozenset({v})


# ------------------------------------------------------------ schedules --

def _check_partition(colors: FrozenSet[int], sched: Sequence[Iterable[int]]) -> List[FrozenSet[int]]:
    blocks = [frozenset(b) for b in sched]
    seen: set = set()
    for b in blocks:
        if not b or b & seen:
            raise NotAPartition(f"{[sorted(x) for x in blocks]} is not an ordered partition")
        seen |= b
    if seen != set(colors):
        raise NotAPartition(f"{[sorted(x) for x in blocks]} does not cover {sorted(colors)}")
    return blocks


def facet_from_schedule(base_facet, sched: Sequence[Iterable[int]]) -> Simplex:
    base_facet = frozenset(base_facet)
    return facet_for_partition(base_facet, _check_partition(ids(base_facet), sched))


def facet_from_rounds(base_facet, rounds: Sequence[Sequence[Iterable[int]]]) -> Simplex:
    f = frozenset(base_facet)
    for r in rounds:
        f = facet_from_schedule(f, r)
    return f


def schedule_from_facet(facet) -> List[FrozenSet[int]]:
    """Ordered partition of the last round that produced ``facet``."""
    groups: Dict[int, List[int]] = {}
    for c, view in facet:
        groups.setdefault(len(view), []).append(c)
    return [frozenset(groups[k]) for k in sorted(groups)]


def parent_facet(facet) -> Simplex:
    return max((v[1] for v in facet), key=len)


def rounds_from_facet(facet) -> List[List[FrozenSet[int]]]:
    """All rounds (first round first) leading from the input facet."""
    rounds = []
    f = frozenset(facet)
    while level(next(iter(f))) > 0:
        rounds.append(schedule_from_facet(f))
        f = parent_facet(f)
    rounds.reverse()
    return rounds


# ------------------------------------------------------- non-uniform χ ---

def nonuniform_facets(facet: Simplex, terminated: Callable[[Vertex], bool]) -> List[Simplex]:
    T = frozenset(v for v in facet if terminated(v))
    A = facet - T
    if not A:
        return [facet]
    return [T | f for f in ch_facet(A)]


def nonuniform_subdivide(sub, delta: Mapping[Vertex, Any]) -> SubdividedComplex:
    if not isinstance(sub, SubdividedComplex):
        sub = identity_subdivision(sub)
    for v in sub.complex.vertices():
        if v not in delta or delta[v] is None:
            from .topology import format_vertex
            raise UndefinedVertex(f"δ undefined at {format_vertex(v)}")
    term = lambda v: delta[v] is not BOT
    facets = []
    for f in sub.complex.facets:
        facets.extend(nonuniform_facets(f, term))
    cx = ColoredComplex(facets)
    return SubdividedComplex(sub.base, sub.depth + 1, cx, _index(sub.base, cx, sub.carrier_index))


# ------------------------------------------------------- configurations --

@dataclass(frozen=True)
class Configuration:
    """IS configuration: per-process state, object contents and outputs.

    ``states[p]`` is the process's current vertex (its last view) or None if
    the process does not participate.  ``memory[k]`` holds the states written
    to object k+1.  ``outputs`` maps terminated processes to their outputs.
    """

    states: Tuple[Optional[Vertex], ...]
    memory: Tuple[FrozenSet[Vertex], ...] = ()
    outputs: Tuple[Tuple[int, Any], ...] = ()
    schedule: Tuple[FrozenSet[int], ...] = field(default=(), compare=False, hash=False)

    @classmethod
    def initial(cls, sigma, n_plus_1: Optional[int] = None) -> "Configuration":
        by = vertex_by_color(sigma)
        n = n_plus_1 if n_plus_1 is not None else max(by) + 1
        return cls(tuple(by.get(p) for p in range(n)))

    @property
    def output_map(self) -> Dict[int, Any]:
        return dict(self.outputs)

    def terminated(self, p: int) -> bool:
        return any(q == p for q, _ in self.outputs)

    def active(self) -> FrozenSet[int]:
        done = {q for q, _ in self.outputs}
        return frozenset(p for p, s in enumerate(self.states) if s is not None and p not in done)

    def participants(self) -> FrozenSet[int]:
        return frozenset(p for p, s in enumerate(self.states) if s is not None)

    def object_of(self, p: int) -> int:
        """Index (1-based) of the IS object p is poised to access next."""
        return level(self.states[p]) + 1

    def input_simplex(self) -> Simplex:
        acc = frozenset()
        for s in self.states:
            if s is not None:
                acc = acc | frozenset({own_ancestor(s, 0)})
        return acc

    def state_simplex(self) -> Simplex:
        return frozenset(s for s in self.states if s is not None)

    def with_outputs(self, new: Mapping[int, Any]) -> "Configuration":
        merged = dict(self.outputs)
        merged.update(new)
        return replace(self, outputs=tuple(sorted(merged.items())))

    def key(self) -> tuple:
        # vertices are hashable and cache their hash; nested sort keys are not
        return (self.states, tuple((p, repr(o)) for p, o in self.outputs))


def apply_schedule(C: Configuration, P: Iterable[int]) -> Configuration:
    """One IS step: processes in P write and snapshot the same object."""
    P = frozenset(P)
    if not P:
        return C
    for p in P:
        if p >= len(C.states) or C.states[p] is None or C.terminated(p):
            raise InactiveProcess(f"p{p} is not active")
    objs = {C.object_of(p) for p in P}
    if len(objs) != 1:
        raise MixedObjects(f"processes {sorted(P)} are poised on objects {sorted(objs)}")
    (k,) = objs
    memory = list(C.memory)
    while len(memory) < k:
        memory.append(frozenset())
    memory[k - 1] = memory[k - 1] | frozenset(C.states[p] for p in P)
    seen = memory[k - 1]
    states = list(C.states)
    for p in P:
        states[p] = intern_vertex((p, seen))
    return Configuration(tuple(states), tuple(memory), C.outputs, C.schedule + (P,))


def run_schedule(C: Configuration, steps: Iterable[Iterable[int]]) -> Configuration:
    for P in steps:
        C = apply_schedule(C, P)
    return C
