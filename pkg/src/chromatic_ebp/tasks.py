"""Task specifications: colorless tasks, their colorization, and helpers."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .topology import (
    ColoredComplex,
    Simplex,
    TopologyError,
    Vertex,
    decode_simplex,
    decode_value,
    encode_simplex,
    encode_value,
    format_simplex,
    ids,
    link,
    maximal,
    simplex_key,
    view_key,
)


class TaskError(Exception):
    pass


class LabelNotAllowed(TaskError):
    pass


class NotACovering(TaskError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


def vals(s: Iterable[Vertex]) -> FrozenSet:
    return frozenset(v[1] for v in s)


def _vsort(xs):
    return sorted(xs, key=view_key)


def faces(s: FrozenSet) -> List[FrozenSet]:
    items = list(s)
    return [frozenset(c) for k in range(1, len(items) + 1) for c in combinations(items, k)]


@dataclass
class ColorlessTask:
    """Value-only task: complexes are families of value sets."""

    inputs: FrozenSet[FrozenSet]
    outputs: FrozenSet[FrozenSet]
    delta_star: Dict[FrozenSet, FrozenSet[FrozenSet]]
    name: str = "colorless"

    def input_simplices(self) -> List[FrozenSet]:
        out = set()
        for f in self.inputs:
            out.update(faces(f))
        return sorted(out, key=lambda s: (len(s), _vsort(s)))

    def allows_star(self, in_vals, out_vals) -> bool:
        out_vals = frozenset(out_vals)
        return any(out_vals <= phi for phi in self.delta_star.get(frozenset(in_vals), ()))


class ColoredTask:
    """(ℐ, 𝒪, Δ) with Δ stored per input simplex as a set of output facets."""

    def __init__(self, input: ColoredComplex, output: ColoredComplex,
                 delta: Mapping[Simplex, Iterable[Simplex]], n_plus_1: int,
                 name: str = "task", colorless: Optional[ColorlessTask] = None):
        self.input = input
        self.output = output
        self.delta: Dict[Simplex, FrozenSet[Simplex]] = {
            frozenset(k): maximal(frozenset(x) for x in v) for k, v in delta.items()
        }
        self.n_plus_1 = n_plus_1
        self.name = name
        self.colorless = colorless
        self._allow_cache: Dict[Tuple[Simplex, FrozenSet], bool] = {}
        self._dom_cache: Dict[Tuple[Simplex, int], Tuple] = {}

    def __repr__(self):
        return f"ColoredTask({self.name}, n+1={self.n_plus_1})"

    def delta_of(self, sigma) -> FrozenSet[Simplex]:
        return self.delta.get(frozenset(sigma), frozenset())

    def allows(self, sigma, tau) -> bool:
        """Is the output simplex ``tau`` (possibly partial) in Δ(sigma)?"""
        key = (frozenset(sigma), frozenset(tau))
        hit = self._allow_cache.get(key)
        if hit is not None:
            return hit
        sigma, tau = key
        if not tau:
            ok = True
        elif self.colorless is not None and sigma in self.delta:
            ok = ids(tau) <= ids(sigma) and len(ids(tau)) == len(tau) and \
                self.colorless.allows_star(vals(sigma), vals(tau))
        else:
            ok = any(tau <= phi for phi in self.delta.get(sigma, ()))
        self._allow_cache[key] = ok
        return ok

    def allowed_values(self, sigma, p: int) -> Tuple:
        """Outputs a process of color p may produce with carrier sigma."""
        key = (frozenset(sigma), p)
        hit = self._dom_cache.get(key)
        if hit is None:
            xs = {w[1] for phi in self.delta_of(sigma) for w in phi if w[0] == p}
            hit = tuple(_vsort(xs))
            self._dom_cache[key] = hit
        return hit

    def input_simplices(self) -> List[Simplex]:
        return sorted(self.input.simplices(), key=lambda s: (len(s), simplex_key(s)))

    # -------------------------------------------------------------- json
    def to_json(self) -> dict:
        if self.colorless is not None:
            t = self.colorless
            return {
                "name": self.name,
                "processes": self.n_plus_1,
                "colorless": {
                    "inputs": [[encode_value(x) for x in _vsort(f)] for f in sorted(t.inputs, key=_vsort)],
                    "outputs": [[encode_value(x) for x in _vsort(f)] for f in sorted(t.outputs, key=_vsort)],
                    "delta": [
                        [[encode_value(x) for x in _vsort(s)],
                         [[encode_value(x) for x in _vsort(f)] for f in sorted(t.delta_star[s], key=_vsort)]]
                        for s in t.input_simplices()
                    ],
                },
            }
        return {
            "name": self.name,
            "processes": self.n_plus_1,
            "colored": {
                "input": self.input.to_json(),
                "output": self.output.to_json(),
                "delta": [[encode_simplex(s), [encode_simplex(f) for f in sorted(self.delta_of(s), key=simplex_key)]]
                          for s in self.input_simplices()],
            },
        }


@dataclass
class RestrictedOutput:
    label_facet: Simplex
    component: ColoredComplex


# ------------------------------------------------------------ colorize --

def pseudosphere(colors: Iterable[int], values: Iterable) -> List[Simplex]:
    colors = sorted(colors)
    values = _vsort(values)
    return [frozenset(zip(colors, combo)) for combo in product(values, repeat=len(colors))]


def colorize(t: ColorlessTask, n_plus_1: int) -> ColoredTask:
    if n_plus_1 < 1:
        raise TaskError("need at least one process")
    procs = range(n_plus_1)
    I = ColoredComplex(f for tau in t.inputs for f in pseudosphere(procs, tau))
    O = ColoredComplex(f for tau in t.outputs for f in pseudosphere(procs, tau))
    delta = {}
    for sigma in I.simplices():
        img = t.delta_star.get(vals(sigma), frozenset())
        delta[sigma] = [f for phi in img for f in pseudosphere(ids(sigma), phi)]
    return ColoredTask(I, O, delta, n_plus_1, name=t.name, colorless=t)


# -------------------------------------------------------------- checks --

def check_monotone(t: ColoredTask) -> Tuple[bool, Optional[dict]]:
    simp = t.input_simplices()
    for s in simp:
        for s2 in simp:
            if s < s2:
                big = t.delta_of(s2)
                for phi in t.delta_of(s):
                    if not any(phi <= psi for psi in big):
                        return False, {"sigma": s, "sigma_prime": s2, "output": phi}
    return True, None


def check_colorless_property(t: ColoredTask) -> Tuple[bool, Optional[dict]]:
    simp = t.input_simplices()
    for s in simp:
        for p in sorted(ids(s)):
            allowed = set(t.allowed_values(s, p))
            for s2 in simp:
                if not s <= s2:
                    continue
                for q in sorted(ids(s2)):
                    extra = allowed - set(t.allowed_values(s2, q))
                    if extra:
                        return False, {"sigma": s, "sigma_prime": s2, "p": p, "q": q,
                                       "value": _vsort(extra)[0]}
    return True, None


# --------------------------------------------------- restricted outputs --

def restricted_outputs(t: ColoredTask, U) -> List[RestrictedOutput]:
    U = frozenset(U)
    res = []
    for lam in sorted(t.delta_of(U), key=simplex_key):
        comp = ColoredComplex((f for f in t.output.facets if lam <= f), trusted=True)
        res.append(RestrictedOutput(lam, comp))
    return res


def link_task(t: ColoredTask, U, i: int) -> ColoredTask:
    U = frozenset(U)
    ros = restricted_outputs(t, U)
    if not 0 <= i < len(ros):
        raise LabelNotAllowed(f"restricted output {i} does not exist for {format_simplex(U)}")
    lam = ros[i].label_facet
    lk = link(U, t.input)
    out = ColoredComplex(f - lam for f in ros[i].component.facets if f - lam)
    delta = {}
    for s in lk.simplices():
        delta[s] = [phi - lam for phi in t.delta_of(s | U) if lam <= phi]
    return ColoredTask(lk, out, delta, t.n_plus_1, name=f"{t.name}/link")


# ------------------------------------------------------------ builtins --

def _full_simplex_inputs(values) -> FrozenSet[FrozenSet]:
    return frozenset({frozenset(values)})


def _all_faces(facets) -> List[FrozenSet]:
    out = set()
    for f in facets:
        out.update(faces(frozenset(f)))
    return list(out)


def consensus_star(values) -> ColorlessTask:
    values = frozenset(values)
    ins = _full_simplex_inputs(values)
    outs = frozenset(frozenset({x}) for x in values)
    delta = {s: frozenset(frozenset({x}) for x in s) for s in _all_faces(ins)}
    return ColorlessTask(ins, outs, delta, name="consensus")


def consensus(n_plus_1: int, values=(0, 1, 2)) -> ColoredTask:
    return colorize(consensus_star(values), n_plus_1)


def set_agreement_star(k: int, values) -> ColorlessTask:
    values = frozenset(values)
    ins = _full_simplex_inputs(values)
    outs = frozenset(frozenset(c) for c in combinations(_vsort(values), min(k, len(values))))
    delta = {}
    for s in _all_faces(ins):
        m = min(k, len(s))
        delta[s] = frozenset(frozenset(c) for c in combinations(_vsort(s), m))
    return ColorlessTask(ins, outs, delta, name=f"set_agreement_{k}")


def set_agreement(n_plus_1: int, k: int, values=None) -> ColoredTask:
    if values is None:
        values = range(n_plus_1)
    return colorize(set_agreement_star(k, values), n_plus_1)


def approx_agreement_star(steps: int = 9) -> ColorlessTask:
    """Inputs 0 and ``steps``; outputs must be adjacent grid points in range."""
    if steps < 1:
        raise TaskError("steps must be positive")
    ins = frozenset({frozenset({0, steps})})
    outs = frozenset(frozenset({i, i + 1}) for i in range(steps))
    delta = {
        frozenset({0}): frozenset({frozenset({0})}),
        frozenset({steps}): frozenset({frozenset({steps})}),
        frozenset({0, steps}): outs,
    }
    return ColorlessTask(ins, outs, delta, name=f"approx_agreement_{steps}")


def approx_agreement(n_plus_1: int = 2, steps: int = 9) -> ColoredTask:
    return colorize(approx_agreement_star(steps), n_plus_1)


def covering_star(O_star: Iterable[Iterable], f: Mapping, name: str = "covering") -> ColorlessTask:
    """Colorless covering task (f(𝒪*), 𝒪*, f⁻¹); validates the covering."""
    outs = maximal(frozenset(x) for x in O_star)
    ins = maximal(frozenset(f[v] for v in tau) for tau in outs)
    out_simplices = set()
    for tau in outs:
        out_simplices.update(faces(tau))
    delta = {}
    for s in _all_faces(ins):
        sheets = [rho for rho in out_simplices if frozenset(f[v] for v in rho) == s and len(rho) == len(s)]
        for a, b in combinations(sorted(sheets, key=_vsort), 2):
            if a & b:
                raise NotACovering(f"sheets {_vsort(a)} and {_vsort(b)} over {_vsort(s)} intersect",
                                   witness={"simplex": _vsort(s), "sheets": [_vsort(a), _vsort(b)]})
        delta[s] = frozenset(sheets)
    return ColorlessTask(ins, outs, delta, name=name)


def covering_task(O_star, f, n_plus_1: int, name: str = "covering") -> ColoredTask:
    return colorize(covering_star(O_star, f, name), n_plus_1)


def hexagone_star() -> ColorlessTask:
    O = [(f"v{i}", f"v{(i + 1) % 6}") for i in range(6)]
    f = {f"v{i}": f"u{i % 3}" for i in range(6)}
    return covering_star(O, f, name="hexagone")


def hexagone(n_plus_1: int = 2) -> ColoredTask:
    return colorize(hexagone_star(), n_plus_1)


def covering_sheets(t: ColorlessTask, s) -> List[FrozenSet]:
    return sorted(t.delta_star.get(frozenset(s), ()), key=_vsort)


def is_nontrivial_covering(t: ColorlessTask) -> bool:
    return all(len(t.delta_star[s]) >= 2 for s in t.delta_star)


BUILTINS = {
    "consensus": lambda n=3, values=(0, 1, 2): consensus(n, values),
    "set_agreement": lambda n=3, k=2, values=None: set_agreement(n, k, values),
    "hexagone": lambda n=2: hexagone(n),
    "approx_agreement": lambda n=2, steps=9: approx_agreement(n, steps),
}


# ---------------------------------------------------------------- json --

def task_from_json(obj) -> ColoredTask:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if "builtin" in obj:
        name = obj["builtin"]
        if name not in BUILTINS:
            raise TaskError(f"unknown builtin {name!r}")
        return BUILTINS[name](**obj.get("args", {}))
    n = int(obj["processes"])
    name = obj.get("name", "task")
    if "colorless" in obj:
        c = obj["colorless"]
        ins = maximal(frozenset(decode_value(x) for x in f) for f in c["inputs"])
        outs = maximal(frozenset(decode_value(x) for x in f) for f in c["outputs"])
        delta = {}
        for s, img in c.get("delta", []):
            delta[frozenset(decode_value(x) for x in s)] = frozenset(
                frozenset(decode_value(x) for x in phi) for phi in img)
        for s in _all_faces(ins):
            delta.setdefault(s, frozenset())
        if "covering" in c:
            fmap = {decode_value(k): decode_value(v) for k, v in c["covering"]}
            return covering_task(outs, fmap, n, name)
        return colorize(ColorlessTask(ins, outs, delta, name), n)
    if "colored" in obj:
        c = obj["colored"]
        I = ColoredComplex.from_json(c["input"])
        O = ColoredComplex.from_json(c["output"])
        delta = {decode_simplex(s): [decode_simplex(f) for f in img] for s, img in c["delta"]}
        return ColoredTask(I, O, delta, n, name)
    raise TaskError("task JSON needs 'builtin', 'colorless' or 'colored'")
