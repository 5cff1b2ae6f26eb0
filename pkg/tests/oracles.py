"""Independent reference implementations used to cross-check the library.

Nothing here imports chromatic_ebp; vertices are plain (color, view) tuples
with frozenset views, the same structural encoding the library promises.
"""
from itertools import combinations, permutations
from math import comb


def fubini(n):
    """Number of ordered set partitions of an n-element set."""
    a = [1]
    for m in range(1, n + 1):
        a.append(sum(comb(m, k) * a[m - k] for k in range(1, m + 1)))
    return a[n]


def ordered_partitions(items):
    items = sorted(items)
    if not items:
        return [[]]
    out = []
    for k in range(1, len(items) + 1):
        for first in combinations(items, k):
            rest = [x for x in items if x not in first]
            for tail in ordered_partitions(rest):
                out.append([frozenset(first)] + tail)
    return out


def ch(facet):
    """Facets of the standard chromatic subdivision of one simplex, from ordered partitions."""
    by = {v[0]: v for v in facet}
    out = set()
    for part in ordered_partitions(by):
        seen = set()
        f = []
        for block in part:
            seen |= {by[p] for p in block}
            view = frozenset(seen)
            f.extend((p, view) for p in block)
        out.add(frozenset(f))
    return out


def ch_iter(facet, depth):
    cur = {frozenset(facet)}
    for _ in range(depth):
        nxt = set()
        for f in cur:
            nxt |= ch(f)
        cur = nxt
    return cur


def chi(facet, terminated):
    """One non-uniform step: terminated vertices stay, the rest are subdivided."""
    dead = frozenset(v for v in facet if terminated(v))
    live = frozenset(facet) - dead
    if not live:
        return {frozenset(facet)}
    return {dead | f for f in ch(live)}


def base_carrier(v, depth):
    """Input vertices seen by a vertex at the given depth."""
    if depth == 0:
        return frozenset([v])
    out = set()
    for w in v[1]:
        out |= base_carrier(w, depth - 1)
    return frozenset(out)


def faces(s):
    s = sorted(s, key=repr)
    for k in range(1, len(s) + 1):
        for c in combinations(s, k):
            yield frozenset(c)


def bfs_active_distance(edges, terminated, A, B):
    """Plain Dijkstra over edge weights 0/1; weight 1 only when both ends are active."""
    import heapq
    adj = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    dist = {a: 0 for a in A}
    heap = [(0, repr(a), a) for a in A]
    heapq.heapify(heap)
    while heap:
        d, _, x = heapq.heappop(heap)
        if d > dist.get(x, float("inf")):
            continue
        if x in B:
            return d
        for y in adj.get(x, ()):
            w = 0 if (terminated(x) or terminated(y)) else 1
            if d + w < dist.get(y, float("inf")):
                dist[y] = d + w
                heapq.heappush(heap, (d + w, repr(y), y))
    return float("inf")


def replay_schedule(inputs, steps):
    """Immediate-snapshot replay with one snapshot object per round.

    inputs: {p: input vertex}; steps: list of process sets. Returns the
    state of each process after the steps.
    """
    state = dict(inputs)
    obj = {p: 0 for p in inputs}
    mem = {}
    for P in steps:
        k = {obj[p] for p in P}
        assert len(k) == 1
        k = k.pop()
        mem.setdefault(k, set()).update(state[p] for p in P)
        view = frozenset(mem[k])
        for p in P:
            state[p] = (p, view)
            obj[p] = k + 1
    return state


def all_orders(xs):
    return list(permutations(xs))


def find_map(facets, domain, ok):
    """Plain backtracking for a vertex map under which every face satisfies ok(face, map)."""
    facets = [frozenset(f) for f in facets]
    allv = sorted({v for f in facets for v in f}, key=repr)
    touching = {v: [f for f in facets if v in f] for v in allv}
    # breadth-first order so each vertex is checked against placed neighbours early
    verts, seen = [], set()
    for s in allv:
        if s in seen:
            continue
        seen.add(s)
        queue = [s]
        while queue:
            v = queue.pop(0)
            verts.append(v)
            for f in touching[v]:
                for w in sorted(f, key=repr):
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
    m = {}

    def good(v):
        for f in touching[v]:
            done = [w for w in f if w in m]
            for k in range(1, len(done) + 1):
                for c in combinations(done, k):
                    if v in c and not ok(frozenset(c), m):
                        return False
        return True

    def rec(i):
        if i == len(verts):
            return True
        v = verts[i]
        for x in domain(v):
            m[v] = x
            if good(v) and rec(i + 1):
                return True
            del m[v]
        return False

    return dict(m) if rec(0) else None
