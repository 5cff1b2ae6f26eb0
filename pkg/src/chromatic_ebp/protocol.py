"""Partial protocols over protocol complexes F_i([U1..Uk])."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .subdivision import (
    BOT,
    Configuration,
    apply_schedule,
    ch_iter_facet,
    facet_for_partition,
    input_carrier,
    carrier_at,
    level,
    nonuniform_facets,
    ordered_partitions,
    own_ancestor,
    simplex_input_carrier,
)
from .topology import (
    intern_vertex,
    ColoredComplex,
    Simplex,
    Vertex,
    decode_simplex,
    decode_value,
    decode_vertex,
    encode_simplex,
    encode_value,
    encode_vertex,
    format_simplex,
    ids,
    simplex_key,
    sorted_simplex,
    vertex_by_color,
    vertex_key,
)


class ProtocolError(Exception):
    pass


class DoesNotTerminate(ProtocolError):
    pass


Label = Tuple[Simplex, ...]


def as_label(x) -> Label:
    """Accept a simplex or a sequence of simplices."""
    if isinstance(x, frozenset):
        if x and isinstance(next(iter(x)), frozenset):
            raise ProtocolError("ambiguous label")
        return (x,)
    if isinstance(x, (set,)):
        return (frozenset(x),)
    lab = tuple(frozenset(u) for u in x)
    seen: set = set()
    for u in lab:
        if not u or ids(u) & seen:
            raise ProtocolError("label sets must be nonempty with disjoint ids")
        seen |= ids(u)
    return lab


def label_union(label: Label) -> Simplex:
    acc = frozenset()
    for u in label:
        acc = acc | u
    return acc


def label_key(label: Label) -> tuple:
    return (sum(len(u) for u in label), len(label), tuple(simplex_key(u) for u in label))


def format_label(label: Label) -> str:
    return "·".join(format_simplex(u) for u in label)


def label_prefixes(label: Label) -> List[Simplex]:
    out, acc = [], frozenset()
    for u in label:
        acc = acc | u
        out.append(acc)
    return out


def in_first_round(v: Vertex, label: Label) -> bool:
    """Is a level-1 vertex in F_1(label)?"""
    view = v[1]
    acc = frozenset()
    for u in label:
        acc = acc | u
        if v[0] in ids(u):
            return view == acc
    return acc <= view


def vertex_in_label(v: Vertex, label: Label) -> bool:
    """Is a vertex of level >= 1 in F_{level}(label)?"""
    lv = level(v)
    if lv == 0:
        raise ProtocolError("level-0 membership depends on the input complex")
    if lv == 1:
        return in_first_round(v, label)
    return all(in_first_round(x, label) for x in carrier_at(v, 1))


def simplex_in_label(s: Iterable[Vertex], label: Label) -> bool:
    return all(vertex_in_label(v, label) for v in s)


def first_round_facets(inputs: ColoredComplex, label: Label) -> List[Simplex]:
    """Facets of F_1(label): first rounds begin with the label's blocks."""
    U = label_union(label)
    out = []
    for sigma in sorted(inputs.facets_containing(U), key=simplex_key):
        rest = ids(sigma) - ids(U)
        head = [ids(u) for u in label]
        tails = ordered_partitions(frozenset(rest)) if rest else ((),)
        for tail in tails:
            out.append(facet_for_partition(sigma, head + list(tail)))
    return out


def protocol_facets(inputs: ColoredComplex, label: Label, i: int) -> List[Simplex]:
    if i == 0:
        return sorted(inputs.facets_containing(label_union(label)), key=simplex_key)
    out = []
    for f in first_round_facets(inputs, label):
        out.extend(ch_iter_facet(f, i - 1))
    return out


def protocol_complex(label, i: int, inputs: ColoredComplex, delta=None) -> ColoredComplex:
    """F_i(label); with a protocol, decided vertices are carried (χ)."""
    label = as_label(label)
    if delta is None or i == 0:
        return ColoredComplex(protocol_facets(inputs, label, i), trusted=True)
    decided = lambda v: delta.value_at(v) is not None
    facets = first_round_facets(inputs, label)
    for _ in range(1, i):
        nxt = []
        for f in facets:
            nxt.extend(nonuniform_facets(f, decided))
        facets = nxt
    return ColoredComplex(facets)


def cen_vertices(S: Iterable[Vertex], r: int) -> Dict[int, Vertex]:
    """Level-r states of ids(S) under repetition of ids(S) after S."""
    cur = vertex_by_color(S)
    for _ in range(level(next(iter(cur.values()))), r):
        seen = frozenset(cur.values())
        cur = {p: intern_vertex((p, seen)) for p in cur}
    return cur


def schedule_to_simplex(S: Iterable[Vertex]) -> List[FrozenSet[int]]:
    """A first-round block sequence producing the level-1 vertices of S."""
    views = sorted({v[1] for v in S}, key=len)
    blocks, seen = [], frozenset()
    for w in views:
        b = ids(w) - seen
        if b:
            blocks.append(frozenset(b))
        seen = seen | ids(w)
    return blocks


@dataclass
class PartialProtocol:
    label: Label
    r_m: int
    delta: Dict[Vertex, Any]
    inputs: ColoredComplex
    name: str = ""

    def __post_init__(self):
        self.label = as_label(self.label)
        self._facets: Dict[int, List[Simplex]] = {}

    def value_at(self, v: Vertex):
        return self.delta.get(v)

    def decide(self, v: Vertex):
        """Output of the execution through v: its earliest decided ancestor."""
        for j in range(1, level(v) + 1):
            a = own_ancestor(v, j)
            if a in self.delta:
                return self.delta[a]
        raise DoesNotTerminate(f"no decision along {v[0]}'s history")

    def facets(self, i: Optional[int] = None) -> List[Simplex]:
        i = self.r_m if i is None else i
        if i not in self._facets:
            self._facets[i] = protocol_facets(self.inputs, self.label, i)
        return self._facets[i]

    def contains_first_round(self, S) -> bool:
        return simplex_in_label(S, self.label)

    def max_round(self) -> int:
        return max((level(v) for v in self.delta), default=0)

    def to_json(self) -> dict:
        return {
            "label": [encode_simplex(u) for u in self.label],
            "r_m": self.r_m,
            "assignments": [[encode_vertex(v), encode_value(self.delta[v])]
                            for v in sorted(self.delta, key=vertex_key)],
        }

    @classmethod
    def from_json(cls, obj, inputs: ColoredComplex) -> "PartialProtocol":
        return cls(tuple(decode_simplex(u) for u in obj["label"]), int(obj["r_m"]),
                   {decode_vertex(v): decode_value(x) for v, x in obj["assignments"]}, inputs)


def initial_config_for(S: Iterable[Vertex], inputs: ColoredComplex, n_plus_1: int) -> Configuration:
    carrier = simplex_input_carrier(S)
    sigma = min(inputs.facets_containing(carrier), key=simplex_key)
    return Configuration.initial(sigma, n_plus_1)


def cen(S, p: PartialProtocol, n_plus_1: Optional[int] = None) -> Configuration:
    """Repeat ids(S) after S until those processes terminate."""
    S = frozenset(S)
    if not S:
        raise ProtocolError("CEN of the empty simplex")
    if any(level(v) != 1 for v in S):
        raise ProtocolError("CEN needs a simplex of the first-round complex")
    n = n_plus_1 or max(c for f in p.inputs.facets for c in ids(f)) + 1
    C = initial_config_for(S, p.inputs, n)
    for block in schedule_to_simplex(S):
        C = apply_schedule(C, block)
    group = ids(S)
    outs: Dict[int, Any] = {}
    while True:
        for q in sorted(group):
            if q not in outs:
                x = p.value_at(C.states[q])
                if x is not None:
                    outs[q] = x
        C = C.with_outputs({q: outs[q] for q in outs})
        live = frozenset(q for q in group if q not in outs)
        if not live:
            return C
        if min(level(C.states[q]) for q in live) >= max(p.r_m, p.max_round()):
            raise DoesNotTerminate(f"CEN{format_simplex(S)} runs past round {p.r_m}")
        C = apply_schedule(C, live)


def cen_outputs(S, p: PartialProtocol) -> Dict[int, Any]:
    """Fast CEN outputs for protocols decided at level r_m (padded)."""
    cv = cen_vertices(S, p.r_m)
    return {q: p.decide(v) for q, v in cv.items()}


def pad_to_round(p: PartialProtocol, r_m: int) -> PartialProtocol:
    if r_m < 2:
        raise ProtocolError("r_m >= 2 is required")
    if r_m < p.max_round():
        raise ProtocolError(f"protocol decides as late as round {p.max_round()}")
    delta = {}
    for f in protocol_facets(p.inputs, p.label, r_m):
        for v in f:
            if v not in delta:
                delta[v] = p.decide(v)
    return PartialProtocol(p.label, r_m, delta, p.inputs, p.name)


def shared_first_round(l1: Label, l2: Label, inputs: ColoredComplex) -> List[Simplex]:
    """All simplices of F_1(l1) ∩ F_1(l2)."""
    out = set()
    for f in first_round_facets(inputs, l1):
        X = [v for v in f if in_first_round(v, l2)]
        for k in range(1, len(X) + 1):
            for c in combinations(X, k):
                out.add(frozenset(c))
    return sorted(out, key=lambda s: (-len(s), simplex_key(s)))


def compatible(p1: PartialProtocol, p2: PartialProtocol) -> Tuple[bool, Optional[dict]]:
    for S in shared_first_round(p1.label, p2.label, p1.inputs):
        o1 = cen_outputs(S, p1)
        o2 = cen_outputs(S, p2)
        if o1 != o2:
            return False, {"simplex": S, "outputs": [o1, o2]}
    return True, None


def solves(p: PartialProtocol, t) -> Tuple[bool, Optional[dict]]:
    seen = set()
    for f in p.facets():
        outs = {v: p.decide(v) for v in f}
        fl = sorted_simplex(f)
        for k in range(1, len(fl) + 1):
            for g in combinations(fl, k):
                g = frozenset(g)
                if g in seen:
                    continue
                seen.add(g)
                tau = frozenset((v[0], outs[v]) for v in g)
                sigma = simplex_input_carrier(g)
                if not t.allows(sigma, tau):
                    return False, {"simplex": g, "carrier": sigma, "outputs": tau}
    return True, None
