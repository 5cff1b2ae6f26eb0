"""Command-line front end.

Exit codes: 0 on success, 1 on a negative verdict (INFEASIBLE, IMPOSSIBLE,
prover wins), 2 on bad input.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import search as S
from .adversary import init as adversary_init
from .neighbor import NeighborError, canonical_neighbor
from .prover import PROVER, PROVERS, ProverBudget, make_prover, run_arena
from .render import BUILTIN_COMPLEXES, TooHighDimensional, parse_terminate, render_svg, subdivide_facets
from .subdivision import facet_from_rounds
from .tasks import (BUILTINS, NotACovering, TaskError, check_colorless_property, check_monotone,
                    task_from_json)
from .topology import (ColoredComplex, TopologyError, decode_simplex, encode_simplex,
                       encode_value, encode_vertex, format_simplex, simplex_of)


class ParseError(click.ClickException):
    exit_code = 2


def _fail_input(msg: str):
    raise ParseError(msg)


def jsonify(x):
    """Best-effort JSON form for witnesses: sets of vertices become sorted lists."""
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, (str, int)) else k: jsonify(v) for k, v in x.items()}
    if isinstance(x, frozenset):
        if all(isinstance(v, tuple) and len(v) == 2 and isinstance(v[0], int) for v in x):
            try:
                return encode_simplex(x)
            except TypeError:
                pass
        return sorted((jsonify(v) for v in x), key=repr)
    if isinstance(x, (list, tuple)):
        return [jsonify(v) for v in x]
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    return repr(x)


def _emit(obj, out=None):
    text = json.dumps(jsonify(obj), indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        _fail_input(f"cannot read {path}: {e.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        _fail_input(f"{path}:{e.lineno}:{e.colno}: {e.msg}")


def load_task(spec: str):
    """A JSON file, or ``name`` / ``name:arg,arg`` naming a builtin task."""
    name, _, args = spec.partition(":")
    if name in BUILTINS and not Path(spec).exists():
        vals = [int(a) for a in args.split(",") if a] if args else []
        try:
            return BUILTINS[name](*vals)
        except (TypeError, ValueError, TaskError) as e:
            _fail_input(f"bad builtin arguments for {name}: {e}")
    obj = _read_json(spec)
    try:
        return task_from_json(obj)
    except NotACovering as e:
        _fail_input(f"{spec}: not a covering: {e}")
    except (KeyError, TypeError, ValueError, TaskError, TopologyError) as e:
        _fail_input(f"{spec}: malformed task: {e!r}")


def load_complex(spec: str) -> ColoredComplex:
    if spec in BUILTIN_COMPLEXES:
        return BUILTIN_COMPLEXES[spec]()
    obj = _read_json(spec)
    try:
        return ColoredComplex.from_json(obj["facets"] if isinstance(obj, dict) else obj)
    except (KeyError, TypeError, ValueError, TopologyError) as e:
        _fail_input(f"{spec}: malformed complex: {e!r}")


def parse_inputs(text: str):
    """``0:a,1:b`` -> simplex {(0,'a'), (1,'b')}; integer-looking values become ints."""
    out = []
    for tok in text.split(","):
        p, sep, x = tok.strip().partition(":")
        if not sep:
            raise ValueError(f"expected process:value, got {tok!r}")
        try:
            val = int(x)
        except ValueError:
            val = x
        out.append((int(p), val))
    return simplex_of(out)


def parse_facet(text: str):
    """Either an encoded simplex (JSON) or ``inputs@rounds``.

    Rounds are ``;``-separated, blocks ``|``-separated, e.g. ``0:0,1:1,2:2@01|2;012``.
    """
    text = text.strip()
    if text.startswith("["):
        return decode_simplex(json.loads(text))
    ins, _, rounds = text.partition("@")
    base = parse_inputs(ins)
    rs = [[frozenset(int(c) for c in blk) for blk in r.split("|")] for r in rounds.split(";") if r]
    return facet_from_rounds(base, rs) if rs else base


def parse_label(text: str):
    """``0:0,1:1`` for a simplex label, ``0:0|1:1`` for the sequence [U1, U2]."""
    text = text.strip()
    if text.startswith("["):
        obj = json.loads(text)
        if obj and isinstance(obj[0][0], list) and isinstance(obj[0][0][0], list):
            return tuple(decode_simplex(u) for u in obj)
        return (decode_simplex(obj),)
    return tuple(parse_inputs(u) for u in text.split("|"))


@click.group()
def main():
    """Chromatic subdivisions, partial protocols and extension-based proof arenas."""


# ------------------------------------------------------------ validate --

def validate_report(t) -> dict:
    checks = {}
    # closure: every input simplex needs a Δ entry
    missing = [s for s in t.input.simplices() if s and frozenset(s) not in t.delta]
    checks["closure"] = {"ok": not missing, "witness": missing[:1] or None}
    ok, wit = check_monotone(t)
    checks["monotone"] = {"ok": ok, "witness": wit}
    ok, wit = check_colorless_property(t)
    checks["property1"] = {"ok": ok, "witness": wit}
    ds = t.colorless.delta_star if t.colorless is not None else {}
    if ds and all(len(r) == len(s) for s, sh in ds.items() for r in sh):
        # sheet-shaped Δ*: check the sheets over each simplex are disjoint
        bad = None
        for s, sheets in t.colorless.delta_star.items():
            ss = sorted(sheets, key=repr)
            for i, a in enumerate(ss):
                for b in ss[i + 1:]:
                    if a & b:
                        bad = {"simplex": s, "sheets": [a, b]}
            if bad:
                break
        checks["covering"] = {"ok": bad is None, "witness": bad}
    warnings = [f"Δ is empty on {format_simplex(s)}: the task is unsolvable"
                for s in t.input_simplices() if s and not t.delta_of(s)]
    ok = all(c["ok"] for k, c in checks.items() if k != "covering")
    return {"task": t.name, "ok": ok, "checks": checks, "warnings": warnings}


@main.command()
@click.argument("task")
@click.option("--out", type=click.Path(), default=None)
def validate(task, out):
    """Closure, monotonicity, Property-1 and covering checks."""
    rep = validate_report(load_task(task))
    _emit(rep, out)
    sys.exit(0 if rep["ok"] else 1)


# ----------------------------------------------------------- subdivide --

@main.command()
@click.argument("complex_spec", metavar="COMPLEX")
@click.option("--depth", default=1, show_default=True, type=click.IntRange(0, 4))
@click.option("--terminate", default=None, help="e.g. p0-corner,p1-corner")
@click.option("--out", type=click.Path(), default=None)
def subdivide(complex_spec, depth, terminate, out):
    """Facets of the (non-uniform) chromatic subdivision as canonical JSON."""
    K = load_complex(complex_spec)
    try:
        facets = subdivide_facets(K, depth, parse_terminate(terminate))
    except ValueError as e:
        _fail_input(str(e))
    _emit({"depth": depth, "facets": len(facets), "complex": [encode_simplex(f) for f in facets]}, out)


@main.command()
@click.argument("complex_spec", metavar="COMPLEX")
@click.option("--depth", default=1, show_default=True, type=click.IntRange(0, 3))
@click.option("--terminate", default=None, help="e.g. p0-corner")
@click.option("--scale", default=0.55, show_default=True, type=float, help="inner simplex size")
@click.option("--out", type=click.Path(), default=None)
def render(complex_spec, depth, terminate, scale, out):
    """SVG drawing of a subdivided complex of dimension at most 2."""
    K = load_complex(complex_spec)
    try:
        svg = render_svg(K, depth, parse_terminate(terminate), scale=scale)
    except TooHighDimensional as e:
        _fail_input(str(e))
    except ValueError as e:
        _fail_input(str(e))
    out = out or f"{Path(complex_spec).stem}-d{depth}.svg"
    Path(out).write_text(svg)
    click.echo(out)


# ----------------------------------------------------- search commands --

def _verdict_json(v: S.SearchVerdict) -> dict:
    rec = {"status": v.status, "detail": v.detail, "witness": v.witness}
    if isinstance(v.artifact, S.Family):
        rec["family"] = family_json(v.artifact)
    elif isinstance(v.artifact, dict):
        rec["map"] = [[encode_vertex(x), encode_value(y)] for x, y in v.artifact.items()]
    return rec


def family_json(fam: S.Family) -> dict:
    return {"r_m": fam.r_m, "members": [fam.members[L].to_json() for L in fam.labels()]}


@main.command("check-task")
@click.argument("task")
@click.option("--depth", default=3, show_default=True, type=click.IntRange(0, 6))
@click.option("--out", type=click.Path(), default=None)
def check_task(task, depth, out):
    """Decide the compatible-family condition (exactly for 1-dimensional inputs)."""
    t = load_task(task)
    b = S.SearchBudget(max_depth=depth)
    rec = {"task": t.name}
    if t.input.dim == 1:
        d1 = S.decide_1dim(t)
        rec["one_dimensional"] = {"status": d1.status, "witness": d1.witness}
    v = S.search_compatible_family(t, b=b)
    rec["family"] = {"status": v.status, "detail": v.detail, "witness": v.witness}
    _emit(rec, out)
    neg = v.status == S.INFEASIBLE or rec.get("one_dimensional", {}).get("status") == S.IMPOSSIBLE
    sys.exit(1 if neg else 0)


@main.command("search-family")
@click.argument("task")
@click.option("--depth", default=3, show_default=True, type=click.IntRange(0, 6))
@click.option("--out", type=click.Path(), default=None)
def search_family(task, depth, out):
    """Search for a compatible family; prints its protocols as JSON."""
    v = S.search_compatible_family(load_task(task), b=S.SearchBudget(max_depth=depth))
    _emit(_verdict_json(v), out)
    sys.exit(0 if v.status == S.FOUND else 1)


@main.command()
@click.argument("facet")
@click.argument("label")
def neighbor(facet, label):
    """Canonical neighbor of an r_m-facet with respect to a label.

    FACET is ``inputs@rounds`` (``0:0,1:1,2:2@01|2;012``) or encoded JSON;
    LABEL is ``0:0,1:1`` or ``0:0|1:1`` for a sequence label.
    """
    try:
        s_n, L = parse_facet(facet), parse_label(label)
    except (ValueError, TypeError, IndexError, TopologyError) as e:
        _fail_input(f"cannot parse arguments: {e}")
    try:
        r = canonical_neighbor(s_n, L)
    except NeighborError as e:
        _fail_input(str(e))
    _emit({"neighbor": encode_simplex(r.neighbor), "shared": encode_simplex(r.shared),
           "rewrite": [sorted(b) for b in r.rewrite], "pretty": format_simplex(r.neighbor)})


# --------------------------------------------------------------- arena --

@main.group()
def arena():
    """Extension-based prover against the adaptive adversary."""


@arena.command("run")
@click.argument("task")
@click.option("--prover", "prover_name", type=click.Choice(sorted(PROVERS)), required=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--budget", default="200,3,500", show_default=True, help="Q,P,L")
@click.option("--ra", default=2, show_default=True, type=int)
@click.option("--rs", default=3, show_default=True, type=int)
@click.option("--mode", type=click.Choice(["phase1", "phase2"]), default="phase1", show_default=True)
@click.option("--out", type=click.Path(), default=None, help="transcript JSONL path")
def arena_run(task, prover_name, seed, budget, ra, rs, mode, out):
    """Play a scripted prover; prints the verdict and the transcript path."""
    t = load_task(task)
    try:
        b = ProverBudget.parse(budget)
    except ValueError as e:
        _fail_input(f"bad --budget: {e}")
    v = S.search_compatible_family(t)
    if v.status == S.FOUND:
        fam, source = v.artifact, "compatible"
        if mode == "phase2":
            fam = S.refine_family(t, fam)
    else:
        # no compatible family: play with independent protocols and let finalization fail
        fam, source = S.independent_family(t), "independent"
    try:
        adv = adversary_init(t, fam, r_a=ra, r_s=rs, mode=mode)
    except ValueError as e:
        _fail_input(str(e))
    out = out or f"transcript-{prover_name}-{seed}.jsonl"
    verdict = run_arena(t, make_prover(prover_name, seed), adv, b, transcript_path=out)
    rec = verdict.summary()
    rec.update({"family": source, "transcript": out})
    _emit(rec)
    sys.exit(1 if verdict.winner == PROVER else 0)


@main.group()
def transcript():
    """Inspect arena transcripts."""


@transcript.command("show")
@click.argument("path", type=click.Path())
@click.option("--json", "as_json", is_flag=True, help="dump records instead of a table")
def transcript_show(path, as_json):
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        _fail_input(f"cannot read {path}: {e.strerror}")
    recs = []
    for i, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            recs.append(json.loads(line))
        except json.JSONDecodeError as e:
            _fail_input(f"{path}:{i}:{e.colno}: {e.msg}")
    if as_json:
        _emit(recs)
        return
    fails = 0
    for i, r in enumerate(recs):
        fails += r.get("audit") == "fail"
        resp = r.get("response")
        if r.get("kind") == "end-phase":
            resp = f"alpha={r.get('alpha')} finalized={r.get('finalized')}"
        click.echo(f"{i:4d} ph{r.get('phase', '?')} {r.get('kind', '?'):9s} {r.get('C', '')} "
                   f"P={r.get('P', '')} -> {resp} t={r.get('t-after', '')} audit={r.get('audit', '')}")
    click.echo(f"{len(recs)} records, {fails} audit failures")


if __name__ == "__main__":
    main()
