"""Finite chromatic simplicial complexes.

A vertex is a plain ``(color, view)`` tuple.  The view is either an input
value (int, str or tuple) or a frozenset of vertices, which is how iterated
chromatic subdivisions nest.  A simplex is a frozenset of vertices with
pairwise distinct colors.
"""
from __future__ import annotations

from collections import defaultdict
from functools import lru_cache
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

Vertex = Tuple[int, Any]
Simplex = FrozenSet[Vertex]


class TopologyError(Exception):
    pass


class DuplicateColor(TopologyError):
    pass


class NotInComplex(TopologyError):
    pass


class NotPseudomanifold(TopologyError):
    pass


# ---------------------------------------------------------------- keys ----

_INTERN: Dict[Vertex, Vertex] = {}


def intern_vertex(v: Vertex) -> Vertex:
    """Canonical instance of v.

    Deep views compare recursively; when every child is already canonical
    equality stops at identity checks, which keeps hashing and caching cheap.
    """
    return _INTERN.setdefault(v, v)


@lru_cache(maxsize=None)
def view_key(view) -> tuple:
    if isinstance(view, frozenset):
        return (1, tuple(sorted(vertex_key(x) for x in view)))
    return (0, type(view).__name__, view)


@lru_cache(maxsize=None)
def vertex_key(v: Vertex) -> tuple:
    return (v[0], view_key(v[1]))


def simplex_key(s: Iterable[Vertex]) -> tuple:
    return tuple(sorted(vertex_key(v) for v in s))


def sorted_simplex(s: Iterable[Vertex]) -> List[Vertex]:
    return sorted(s, key=vertex_key)


def ids(s: Iterable[Vertex]) -> FrozenSet[int]:
    return frozenset(v[0] for v in s)


def color(v: Vertex) -> int:
    return v[0]


@lru_cache(maxsize=None)
def level(v: Vertex) -> int:
    """Nesting depth of a vertex's view (0 for input vertices)."""
    view = v[1]
    if isinstance(view, frozenset) and view:
        return 1 + level(next(iter(view)))
    return 0


def simplex_of(vertices: Iterable[Vertex]) -> Simplex:
    s = frozenset(vertices)
    if len(ids(s)) != len(s):
        raise DuplicateColor(f"repeated color in {format_simplex(s)}")
    return s


def vertex_by_color(s: Iterable[Vertex]) -> Dict[int, Vertex]:
    return {v[0]: v for v in s}


# ---------------------------------------------------------- formatting ----

def format_view(view) -> str:
    if isinstance(view, frozenset):
        return "{" + ",".join(format_vertex(x) for x in sorted_simplex(view)) + "}"
    return str(view)


def format_vertex(v: Vertex) -> str:
    return f"(p{v[0]},{format_view(v[1])})"


def format_simplex(s: Iterable[Vertex]) -> str:
    return "[" + " ".join(format_vertex(v) for v in sorted_simplex(s)) + "]"


# --------------------------------------------------------------- json -----

def encode_value(x):
    if isinstance(x, tuple):
        return {"t": [encode_value(y) for y in x]}
    return x


def decode_value(x):
    if isinstance(x, dict) and "t" in x:
        return tuple(decode_value(y) for y in x["t"])
    if isinstance(x, list):
        return tuple(decode_value(y) for y in x)
    return x


def encode_view(view):
    if isinstance(view, frozenset):
        return {"s": [encode_vertex(x) for x in sorted_simplex(view)]}
    return encode_value(view)


def decode_view(obj):
    if isinstance(obj, dict) and "s" in obj:
        return frozenset(decode_vertex(x) for x in obj["s"])
    return decode_value(obj)


def encode_vertex(v: Vertex) -> list:
    return [v[0], encode_view(v[1])]


def decode_vertex(obj) -> Vertex:
    return intern_vertex((int(obj[0]), decode_view(obj[1])))


def encode_simplex(s: Iterable[Vertex]) -> list:
    return [encode_vertex(v) for v in sorted_simplex(s)]


def decode_simplex(obj) -> Simplex:
    return simplex_of(decode_vertex(x) for x in obj)


# ------------------------------------------------------------ complex -----

def maximal(sets: Iterable[FrozenSet]) -> FrozenSet[FrozenSet]:
    """Inclusion-maximal members of a family of finite sets."""
    by_size = sorted(set(sets), key=len, reverse=True)
    kept: List[FrozenSet] = []
    index: Dict[Any, List[FrozenSet]] = defaultdict(list)
    for s in by_size:
        if not s:
            continue
        probe = next(iter(s))
        if any(s <= f for f in index[probe]):
            continue
        kept.append(s)
        for v in s:
            index[v].append(s)
    return frozenset(kept)


class ColoredComplex:
    """A complex stored by its facets; faces are implicit."""

    __slots__ = ("facets", "_by_vertex", "_hash")

    def __init__(self, facets: Iterable[Iterable[Vertex]] = (), *, trusted: bool = False):
        fs = [frozenset(f) for f in facets]
        for f in fs:
            if len(ids(f)) != len(f):
                raise DuplicateColor(f"repeated color in {format_simplex(f)}")
        self.facets: FrozenSet[Simplex] = frozenset(fs) if trusted else maximal(fs)
        self._by_vertex: Optional[Dict[Vertex, List[Simplex]]] = None
        self._hash = None

    # identity
    def __eq__(self, other):
        return isinstance(other, ColoredComplex) and self.facets == other.facets

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.facets)
        return self._hash

    def __repr__(self):
        return f"ColoredComplex({len(self.facets)} facets, dim {self.dim})"

    def __len__(self):
        return len(self.facets)

    @property
    def by_vertex(self) -> Dict[Vertex, List[Simplex]]:
        if self._by_vertex is None:
            idx: Dict[Vertex, List[Simplex]] = defaultdict(list)
            for f in self.facets:
                for v in f:
                    idx[v].append(f)
            self._by_vertex = dict(idx)
        return self._by_vertex

    @property
    def dim(self) -> int:
        return max((len(f) for f in self.facets), default=0) - 1

    def vertices(self) -> FrozenSet[Vertex]:
        return frozenset(self.by_vertex)

    def sorted_facets(self) -> List[Simplex]:
        return sorted(self.facets, key=simplex_key)

    def __contains__(self, s) -> bool:
        s = frozenset(s)
        if not s:
            return True
        v = next(iter(s))
        return any(s <= f for f in self.by_vertex.get(v, ()))

    def facets_containing(self, s) -> List[Simplex]:
        s = frozenset(s)
        if not s:
            return list(self.facets)
        v = next(iter(s))
        return [f for f in self.by_vertex.get(v, ()) if s <= f]

    def simplices(self) -> FrozenSet[Simplex]:
        out = set()
        for f in self.facets:
            fl = list(f)
            for k in range(1, len(fl) + 1):
                for c in combinations(fl, k):
                    out.add(frozenset(c))
        return frozenset(out)

    def simplices_of_dim(self, k: int) -> FrozenSet[Simplex]:
        out = set()
        for f in self.facets:
            if len(f) > k:
                for c in combinations(list(f), k + 1):
                    out.add(frozenset(c))
        return frozenset(out)

    def is_empty(self) -> bool:
        return not self.facets

    def to_json(self) -> list:
        return [encode_simplex(f) for f in self.sorted_facets()]

    @classmethod
    def from_json(cls, obj) -> "ColoredComplex":
        return cls(decode_simplex(f) for f in obj)


def closure(generators: Iterable[Iterable[Vertex]]) -> ColoredComplex:
    return ColoredComplex(generators)


def _require(s, K: ColoredComplex):
    if s not in K:
        raise NotInComplex(f"{format_simplex(s)} is not a simplex of the complex")


def star(s, K: ColoredComplex) -> ColoredComplex:
    s = frozenset(s)
    _require(s, K)
    return ColoredComplex(K.facets_containing(s), trusted=True)


def link(s, K: ColoredComplex) -> ColoredComplex:
    s = frozenset(s)
    _require(s, K)
    return ColoredComplex(f - s for f in K.facets_containing(s) if f - s)


def join(s, t) -> Simplex:
    """Union of two simplices; shared vertices appear once."""
    return simplex_of(frozenset(s) | frozenset(t))


def skeleton(K: ColoredComplex, l: int) -> ColoredComplex:
    gens = []
    for f in K.facets:
        if len(f) <= l + 1:
            gens.append(f)
        else:
            gens.extend(frozenset(c) for c in combinations(list(f), l + 1))
    return ColoredComplex(gens)


# ------------------------------------------------------ pseudomanifold ----

def facet_adjacency(K: ColoredComplex, k: int) -> Dict[Simplex, List[Tuple[int, Simplex]]]:
    """k-facet graph; each neighbor is tagged with the color that changes."""
    ridges: Dict[Simplex, List[Simplex]] = defaultdict(list)
    top = [f for f in K.facets if len(f) == k + 1]
    for f in top:
        for v in f:
            ridges[f - {v}].append(f)
    adj: Dict[Simplex, List[Tuple[int, Simplex]]] = {f: [] for f in top}
    for r, fs in ridges.items():
        for a in fs:
            for b in fs:
                if a is not b and a != b:
                    (c,) = ids(a - r)
                    adj[a].append((c, b))
    for f in adj:
        adj[f].sort(key=lambda cb: (cb[0], simplex_key(cb[1])))
    return adj


def is_pseudomanifold(K: ColoredComplex, k: int) -> Tuple[bool, Optional[dict]]:
    if K.is_empty():
        return False, {"condition": "a", "witness": None}
    for f in K.sorted_facets():
        if len(f) != k + 1:
            return False, {"condition": "a", "witness": f}
    count: Dict[Simplex, int] = defaultdict(int)
    for f in K.facets:
        for v in f:
            count[f - {v}] += 1
    for r in sorted(count, key=simplex_key):
        if count[r] > 2:
            return False, {"condition": "b", "witness": r}
    adj = facet_adjacency(K, k)
    start = K.sorted_facets()[0]
    seen = {start}
    todo = [start]
    while todo:
        f = todo.pop()
        for _, g in adj[f]:
            if g not in seen:
                seen.add(g)
                todo.append(g)
    if len(seen) != len(K.facets):
        missing = min((f for f in K.facets if f not in seen), key=simplex_key)
        return False, {"condition": "c", "witness": missing}
    return True, None


def facet_equivalence_sequence(K: ColoredComplex, k: int, last) -> Tuple[List[Simplex], List[Simplex]]:
    """Walk over all k-facets ending at ``last``.

    Built as the reverse of a depth-first tour rooted at ``last`` that does
    not return from its final branch, so it doubles back only where needed.
    """
    ok, why = is_pseudomanifold(K, k)
    if not ok:
        raise NotPseudomanifold(str(why))
    last = frozenset(last)
    if last not in K.facets:
        raise NotInComplex("terminal simplex is not a facet")
    adj = facet_adjacency(K, k)

    # DFS tree with children in tie-break order
    children: Dict[Simplex, List[Simplex]] = {}
    seen = {last}
    stack = [(last, iter(adj[last]))]
    children[last] = []
    while stack:
        node, it = stack[-1]
        for _, nxt in it:
            if nxt not in seen:
                seen.add(nxt)
                children[node].append(nxt)
                children[nxt] = []
                stack.append((nxt, iter(adj[nxt])))
                break
        else:
            stack.pop()

    height: Dict[Simplex, int] = {}
    order = []
    stack2 = [last]
    while stack2:
        n = stack2.pop()
        order.append(n)
        stack2.extend(children[n])
    for n in reversed(order):
        height[n] = 1 + max((height[c] for c in children[n]), default=0)

    tour: List[Simplex] = []
    # frames: (node, remaining children, returns?)
    def kids(n):
        cs = list(children[n])
        # deepest subtree last so the open end is as long as possible
        cs.sort(key=lambda c: height[c])
        return cs

    work = [("enter", last, False)]
    while work:
        op, node, ret = work.pop()
        if op == "emit":
            tour.append(node)
            continue
        tour.append(node)
        cs = kids(node)
        plan = []
        for i, c in enumerate(cs):
            is_final = (i == len(cs) - 1) and not ret
            plan.append(("enter", c, not is_final))
            if not is_final:
                plan.append(("emit", node, False))
        work.extend(reversed(plan))
    walk = list(reversed(tour))
    shared = [a & b for a, b in zip(walk, walk[1:])]
    return walk, shared
