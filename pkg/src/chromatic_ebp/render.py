"""SVG drawings of chromatic subdivisions of complexes of dimension at most 2."""
from __future__ import annotations

import math
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .subdivision import nonuniform_facets
from .topology import ColoredComplex, Simplex, Vertex, level, simplex_key, vertex_key

PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


class TooHighDimensional(ValueError):
    pass


def base_simplex(k: int) -> ColoredComplex:
    """s^k: one facet, process i holding input i."""
    return ColoredComplex([frozenset((i, i) for i in range(k + 1))])


BUILTIN_COMPLEXES = {f"s{k}": (lambda k=k: base_simplex(k)) for k in range(4)}


def parse_terminate(spec: Optional[str]) -> Callable[[Vertex], bool]:
    """``p0-corner,p2-corner``: those processes' input vertices stop after no steps."""
    if not spec:
        return lambda v: False
    corners = set()
    for tok in spec.split(","):
        tok = tok.strip()
        if not (tok.startswith("p") and tok.endswith("-corner")):
            raise ValueError(f"cannot parse termination {tok!r}; expected pN-corner")
        corners.add(int(tok[1:-len("-corner")]))
    return lambda v: level(v) == 0 and v[0] in corners


def subdivide_facets(K: ColoredComplex, depth: int, terminated: Callable[[Vertex], bool]) -> List[Simplex]:
    facets = list(K.sorted_facets())
    for _ in range(depth):
        nxt = []
        for f in facets:
            nxt.extend(nonuniform_facets(f, terminated))
        facets = nxt
    return sorted(set(facets), key=simplex_key)


def _corners(base: Sequence[Vertex]) -> Dict[Vertex, Tuple[float, float]]:
    n = len(base)
    if n == 1:
        return {base[0]: (0.5, 0.5)}
    if n == 2:
        return {base[0]: (0.05, 0.5), base[1]: (0.95, 0.5)}
    out = {}
    for i, v in enumerate(base):
        a = math.pi / 2 + 2 * math.pi * i / n
        out[v] = (0.5 + 0.45 * math.cos(a), 0.55 - 0.45 * math.sin(a))
    return out


def layout(K: ColoredComplex, facets: Iterable[Simplex], scale: float = 0.55) -> Dict[Vertex, Tuple[float, float]]:
    """Input vertices on a regular polygon; each Ch step places the inverted inner simplex.

    (p, S) sits at c - scale / (|S| - 1) * (own - c), c the centroid of S.
    With scale 1 the inner simplex would touch the boundary of its facet.
    """
    if not 0 < scale < 1:
        raise ValueError("scale must lie strictly between 0 and 1")
    base = sorted(K.vertices(), key=vertex_key)
    pos = _corners(base) if len(K.facets) == 1 else _spread(K)

    def place(v):
        if v in pos:
            return pos[v]
        view = v[1]
        pts = [place(x) for x in view]
        cx = sum(x for x, _ in pts) / len(pts)
        cy = sum(y for _, y in pts) / len(pts)
        ox, oy = place(next(x for x in view if x[0] == v[0]))
        k = scale / (len(pts) - 1) if len(pts) > 1 else 0.0
        pos[v] = (cx - k * (ox - cx), cy - k * (oy - cy))
        return pos[v]

    for f in facets:
        for v in f:
            place(v)
    return pos


def _spread(K: ColoredComplex) -> Dict[Vertex, Tuple[float, float]]:
    # several facets: spring layout of the input complex, deterministic seed
    import networkx as nx

    g = nx.Graph()
    for f in K.sorted_facets():
        fl = sorted(f, key=vertex_key)
        g.add_nodes_from(fl)
        g.add_edges_from((a, b) for i, a in enumerate(fl) for b in fl[i + 1:])
    raw = nx.spring_layout(g, seed=0)
    xs = [p[0] for p in raw.values()]
    ys = [p[1] for p in raw.values()]
    span = max(max(xs) - min(xs), max(ys) - min(ys)) or 1.0
    return {v: (0.05 + 0.9 * (p[0] - min(xs)) / span, 0.05 + 0.9 * (p[1] - min(ys)) / span)
            for v, p in raw.items()}


def render_svg(K: ColoredComplex, depth: int, terminated: Callable[[Vertex], bool] = lambda v: False,
               size: int = 600, scale: float = 0.55) -> str:
    if K.dim > 2:
        raise TooHighDimensional(f"cannot draw a complex of dimension {K.dim}")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    facets = subdivide_facets(K, depth, terminated)
    pos = layout(K, facets, scale)

    def xy(v):
        x, y = pos[v]
        return f"{x * size:.2f},{y * size:.2f}"

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<title>{len(facets)} facets</title>',
             '<rect width="100%" height="100%" fill="white"/>']
    edges = set()
    for f in facets:
        fl = sorted(f, key=vertex_key)
        if len(fl) == 3:
            lines.append(f'<polygon points="{" ".join(xy(v) for v in fl)}" fill="#f4f4f4" '
                         f'stroke="none" class="facet"/>')
        for i, a in enumerate(fl):
            for b in fl[i + 1:]:
                edges.add((a, b))
    for a, b in sorted(edges, key=lambda e: (vertex_key(e[0]), vertex_key(e[1]))):
        (x1, y1), (x2, y2) = pos[a], pos[b]
        lines.append(f'<line x1="{x1 * size:.2f}" y1="{y1 * size:.2f}" x2="{x2 * size:.2f}" '
                     f'y2="{y2 * size:.2f}" stroke="#555" stroke-width="1"/>')
    verts = sorted({v for f in facets for v in f}, key=vertex_key)
    for v in verts:
        x, y = pos[v]
        c = PALETTE[v[0] % len(PALETTE)]
        if terminated(v):
            lines.append(f'<rect x="{x * size - 6:.2f}" y="{y * size - 6:.2f}" width="12" height="12" '
                         f'fill="{c}" stroke="black" stroke-width="2" class="terminated"/>')
        else:
            lines.append(f'<circle cx="{x * size:.2f}" cy="{y * size:.2f}" r="4" fill="{c}" class="vertex"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
