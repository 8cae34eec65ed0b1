"""Command-line interface: build digraphs, check conditions, decompose, and
inspect free algebras and congruence lattices.

Without --json a human report goes to stdout.  With --json the machine
payload goes to stdout (sorted keys, no timing) and the summary to stderr.
Exit codes: 0 found / holds, 1 none, 2 error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
import time
from pathlib import Path

from . import algebra as alg
from .conditions import find_polymorphisms, resolve_condition
from .decomposition import is_nth_power
from .errors import CapExceeded
from .structures import (DEFAULT_MAX_SIZE, Digraph, components, disjoint_union,
                         make_c, make_c1, make_edge, make_loop, power, product)

EXIT_OK, EXIT_NONE, EXIT_ERROR = 0, 1, 2


class ExprError(ValueError):
    def __init__(self, pos: int, message: str):
        super().__init__(f"position {pos}: {message}")
        self.pos = pos


# -- digraph expressions -------------------------------------------------------------

_ATOMS = {"C": make_c, "C1": make_c1, "loop": make_loop, "edge": make_edge}


class _ExprParser:
    def __init__(self, text: str, max_size: int):
        self.text = text
        self.pos = 0
        self.max_size = max_size

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch: str):
        self.skip()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise ExprError(self.pos, f"expected {ch!r}")
        self.pos += 1

    def name(self) -> str:
        self.skip()
        m = re.compile(r"[A-Za-z_][A-Za-z0-9_]*").match(self.text, self.pos)
        if not m:
            raise ExprError(self.pos, "expected a name")
        self.pos = m.end()
        return m.group()

    def integer(self) -> int:
        self.skip()
        m = re.compile(r"\d+").match(self.text, self.pos)
        if not m:
            raise ExprError(self.pos, "expected a non-negative integer")
        self.pos = m.end()
        return int(m.group())

    def expr(self) -> Digraph:
        start = self.pos
        word = self.name()
        if word in _ATOMS:
            return _ATOMS[word]()
        if word == "file":
            self.expect("(")
            self.skip()
            end = self.text.find(")", self.pos)
            if end < 0:
                raise ExprError(self.pos, "unterminated file(...)")
            path = self.text[self.pos:end].strip()
            self.pos = end + 1
            return Digraph.load(path)
        if word == "pow":
            self.expect("(")
            base = self.expr()
            self.expect(",")
            k = self.integer()
            self.expect(")")
            return power(base, k, self.max_size)
        if word in ("prod", "union"):
            self.expect("(")
            parts = [self.expr()]
            while True:
                self.skip()
                if self.pos < len(self.text) and self.text[self.pos] == ",":
                    self.pos += 1
                    parts.append(self.expr())
                    continue
                break
            self.expect(")")
            return product(parts, self.max_size) if word == "prod" else disjoint_union(parts)
        raise ExprError(start, f"unknown constructor {word!r}")

    def parse(self) -> Digraph:
        g = self.expr()
        self.skip()
        if self.pos != len(self.text):
            raise ExprError(self.pos, "trailing input")
        return g


def parse_expression(text: str, max_size: int = DEFAULT_MAX_SIZE) -> Digraph:
    return _ExprParser(text, max_size).parse()


def load_structure(arg: str, max_size: int) -> Digraph:
    if Path(arg).is_file():
        return Digraph.load(arg)
    return parse_expression(arg, max_size)


_ALGEBRAS = {
    "a1": alg.algebra_a1,
    "a2": alg.algebra_a2,
    "meet": alg.meet_semilattice,
    "cpol2": lambda: alg.polymorphism_algebra(make_c(), 2),
}


def load_algebra(arg: str) -> alg.FiniteAlgebra:
    """A JSON path, or name[^k] with name one of a1, a2, meet, cpol2, set<n>."""
    if Path(arg).is_file():
        return alg.FiniteAlgebra.load(arg)
    m = re.fullmatch(r"\s*([a-z]+\d*)\s*(?:\^\s*(\d+))?\s*", arg)
    if not m:
        raise ValueError(f"unknown algebra {arg!r}")
    name, exp = m.groups()
    sm = re.fullmatch(r"set(\d+)", name)
    if sm:
        a = alg.set_algebra(int(sm.group(1)))
    elif name in _ALGEBRAS:
        a = _ALGEBRAS[name]()
    else:
        raise ValueError(f"unknown algebra {arg!r}; use a JSON file, set<n>, "
                         f"{', '.join(sorted(_ALGEBRAS))}, optionally with ^k")
    return alg.power_algebra(a, int(exp)) if exp else a


# -- reports ------------------------------------------------------------------------------

def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(json.dumps(p, sort_keys=True).encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


def _emit(args, payload: dict, lines: list[str], started: float) -> None:
    elapsed = f"({time.perf_counter() - started:.3f}s)"
    if args.json:
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
        for line in lines:
            print(line, file=sys.stderr)
        print(elapsed, file=sys.stderr)
    else:
        for line in lines:
            print(line)
        print(elapsed, file=sys.stderr)


def _digraph_summary(g: Digraph) -> str:
    return f"{g.vertex_count} vertices, {len(g.edges)} edges, {len(components(g))} components"


# -- commands --------------------------------------------------------------------------------

def cmd_build(args) -> int:
    started = time.perf_counter()
    g = parse_expression(args.expression, args.max_elements)
    if args.out:
        g.save(args.out)
    payload = {"command": "build", "inputs_digest": _digest(args.expression),
               "result": {"vertices": g.vertex_count, "edges": len(g.edges),
                          "components": len(components(g)), "digraph": g.to_json()}}
    lines = [_digraph_summary(g)] + ([f"written to {args.out}"] if args.out else [g.dumps()])
    _emit(args, payload, lines, started)
    return EXIT_OK


def cmd_check(args) -> int:
    started = time.perf_counter()
    g = load_structure(args.structure, args.max_elements)
    system = resolve_condition(args.condition)
    res = find_polymorphisms(g, system, max_nodes=args.max_nodes)
    result = {"status": "SAT" if res.found else "UNSAT", "nodes": res.nodes}
    lines = []
    if res.found:
        result["tables"] = {s: {"arity": t.arity, "table": list(t.values)}
                            for s, t in sorted(res.tables.items())}
        lines.append(f"SAT after {res.nodes} nodes")
        for s, t in sorted(res.tables.items()):
            lines.append(f"{s}/{t.arity}: {' '.join(map(str, t.values))}")
    else:
        lines.append(f"none (explored {res.nodes} nodes)")
    payload = {"command": "check", "inputs_digest": _digest(g.to_json(), system.to_dsl()),
               "condition": args.condition, "result": result}
    _emit(args, payload, lines, started)
    return EXIT_OK if res.found else EXIT_NONE


def cmd_decompose(args) -> int:
    started = time.perf_counter()
    g = load_structure(args.structure, args.max_elements)
    w = is_nth_power(g, args.n, method=args.method, max_nodes=args.max_nodes)
    result: dict = {"n": args.n, "power": w is not None}
    if w is None:
        lines = [f"none: not a power with exponent {args.n}"]
    else:
        result["base"] = w.base.to_json()
        result["iso"] = list(w.iso.image)
        lines = [f"base: {_digraph_summary(w.base)}", w.base.dumps(),
                 f"iso: {' '.join(map(str, w.iso.image))}"]
    payload = {"command": "decompose", "inputs_digest": _digest(g.to_json(), args.n),
               "result": result}
    _emit(args, payload, lines, started)
    return EXIT_OK if w is not None else EXIT_NONE


def cmd_free(args) -> int:
    started = time.perf_counter()
    a = load_algebra(args.algebra)
    r = alg.section4_pipeline(a, args.max_elements)
    comps = [{"label": list(c.label), "term": c.term, "size": len(c.vertices),
              "homs": len(c.homs)} for c in r.components_T]
    exps = sorted(r.exponents)
    result = {"free_size": r.free_algebra.universe_size, "components": comps,
              "claims": r.claims, "exponents": exps,
              "K_vertices": r.K.vertex_count, "G_vertices": r.G.vertex_count}
    lines = [f"free algebra on 3 generators: {r.free_algebra.universe_size} elements",
             "component  t           |F_t|  |H_t|"]
    for c in comps:
        lines.append(f"  {c['term']:<9} {str(tuple(c['label'])):<11} {c['size']:>5}  {c['homs']:>5}")
    lines.append(f"kernel of psi is a congruence: {r.claims['claim1_kernel_is_congruence']}")
    lines.append(f"[x],[y],[z] pairwise distinct: {r.claims['claim2_generators_distinct']}")
    lines.append(f"H_t nonempty iff t(x),t(y),t(z) separated, every component: {r.claims['claim3']}")
    lines.append(f"G exponents: {exps}")
    payload = {"command": "free", "inputs_digest": _digest(a.to_json()), "result": result}
    _emit(args, payload, lines, started)
    return EXIT_OK


def cmd_con(args) -> int:
    started = time.perf_counter()
    a = load_algebra(args.algebra)
    lat = alg.congruence_lattice(a)
    props = alg.lattice_properties(lat)
    hasse = lat.covers()
    result = {"size": len(lat), "congruences": [list(p.block_of) for p in lat.congruences],
              "hasse": [list(e) for e in hasse], "meet_sd": props.meet_sd,
              "join_sd": props.join_sd, "distributive": props.distributive, "m_n": props.m_n}
    lines = [f"|Con| = {len(lat)}",
             "hasse: " + " ".join(f"{i}<{j}" for i, j in hasse),
             f"meet_sd={str(props.meet_sd).lower()} join_sd={str(props.join_sd).lower()} "
             f"distributive={str(props.distributive).lower()}",
             f"M_n: {props.m_n if props.m_n is not None else 'no'}"]
    payload = {"command": "con", "inputs_digest": _digest(a.to_json()), "result": result}
    _emit(args, payload, lines, started)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------------

def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine payload on stdout")
    common.add_argument("--max-elements", type=int, default=None,
                        help="cap on generated elements (env VARKIT_MAX_ELEMENTS)")
    common.add_argument("--max-nodes", type=int, default=None, help="cap on search nodes")

    p = argparse.ArgumentParser(prog="varkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="build a digraph from an expression")
    b.add_argument("expression", help="C | C1 | loop | edge | pow(e,k) | prod(e,...) | union(e,...) | file(path)")
    b.add_argument("-o", "--out", help="write the digraph JSON here")
    b.set_defaults(func=cmd_build)

    c = sub.add_parser("check", parents=[common], help="search polymorphisms for a condition")
    c.add_argument("--structure", required=True, help="digraph JSON path or expression")
    c.add_argument("--condition", required=True, help="built-in name, e.g. olsak or power_decomposition(2), or DSL file")
    c.set_defaults(func=cmd_check)

    d = sub.add_parser("decompose", parents=[common], help="decide whether a digraph is an n-th power")
    d.add_argument("--structure", required=True)
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--method", choices=["auto", "search", "structural"], default="auto")
    d.set_defaults(func=cmd_decompose)

    f = sub.add_parser("free", parents=[common], help="free algebra on 3 generators and the component pipeline")
    f.add_argument("--algebra", required=True, help="algebra JSON path or name (a1, a2, meet, cpol2, set<n>)[^k]")
    f.set_defaults(func=cmd_free)

    k = sub.add_parser("con", parents=[common], help="congruence lattice")
    k.add_argument("--algebra", required=True)
    k.set_defaults(func=cmd_con)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    try:
        if args.max_elements is None:
            args.max_elements = _env_int("VARKIT_MAX_ELEMENTS",
                                         alg.DEFAULT_MAX_ELEMENTS if args.command in ("free", "con")
                                         else DEFAULT_MAX_SIZE)
        return args.func(args)
    except CapExceeded as exc:
        print(f"varkit: cap exceeded: {exc} (reached {exc.reached})", file=sys.stderr)
    except (ValueError, KeyError, OSError, json.JSONDecodeError, RecursionError) as exc:
        print(f"varkit: error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
