"""Strong Maltsev conditions as identity systems, and polymorphism search.

A condition is a finite signature plus identities between terms.  A digraph
admits it when its polymorphisms can interpret the symbols so that every
identity holds; :func:`find_polymorphisms` decides that by exhaustive search.
"""
from __future__ import annotations

import bisect
import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np

from ._engine import Engine, single_value
from .errors import CapExceeded, InvariantViolation
from .structures import Digraph, UnionFind, components, power

CHUNK = 1 << 20
MAX_GROUND_INSTANCES = 5_000_000


# -- terms -------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        return f"{self.symbol}({','.join(str(a) for a in self.args)})"


Term = Union[Var, App]


def app(symbol: str, *args) -> App:
    """Shorthand: string arguments become variables."""
    return App(symbol, tuple(Var(a) if isinstance(a, str) else a for a in args))


def term_vars(t: Term, out: dict | None = None) -> dict:
    """Variables of ``t`` in order of first occurrence (dict used as ordered set)."""
    if out is None:
        out = {}
    if isinstance(t, Var):
        out.setdefault(t.name, None)
    else:
        for a in t.args:
            term_vars(a, out)
    return out


def term_symbols(t: Term, out: dict | None = None) -> dict:
    if out is None:
        out = {}
    if isinstance(t, App):
        out.setdefault(t.symbol, len(t.args))
        for a in t.args:
            term_symbols(a, out)
    return out


def term_depth(t: Term) -> int:
    if isinstance(t, Var):
        return 0
    return 1 + max((term_depth(a) for a in t.args), default=0)


def is_linear_side(t: Term) -> bool:
    """A variable, or one symbol applied to variables."""
    return isinstance(t, Var) or all(isinstance(a, Var) for a in t.args)


@dataclass(frozen=True)
class IdentitySystem:
    signature: tuple
    identities: tuple
    variables: tuple = ()

    def __post_init__(self):
        sig = tuple((str(s), int(k)) for s, k in self.signature)
        object.__setattr__(self, "signature", sig)
        object.__setattr__(self, "identities", tuple((l, r) for l, r in self.identities))
        arity = dict(sig)
        if len(arity) != len(sig):
            raise ValueError("symbol declared twice")
        seen: dict = {}
        for lhs, rhs in self.identities:
            for side in (lhs, rhs):
                for s, k in term_symbols(side).items():
                    if s not in arity:
                        raise ValueError(f"undeclared symbol {s!r}")
                    if arity[s] != k:
                        raise ValueError(f"symbol {s!r} used with arity {k}, declared {arity[s]}")
                _check_arities(side, arity)
                term_vars(side, seen)
        if self.variables:
            declared = tuple(self.variables)
            missing = [v for v in seen if v not in declared]
            if missing:
                raise ValueError(f"undeclared variables {missing}")
            object.__setattr__(self, "variables", declared)
        else:
            object.__setattr__(self, "variables", tuple(seen))

    @property
    def arities(self) -> dict:
        return dict(self.signature)

    def identity_variables(self, index: int) -> tuple:
        lhs, rhs = self.identities[index]
        used = term_vars(rhs, term_vars(lhs))
        return tuple(v for v in self.variables if v in used)

    def to_dsl(self) -> str:
        lines = ["symbols: " + ", ".join(f"{s}/{k}" for s, k in self.signature)]
        lines += [f"{l} = {r}" for l, r in self.identities]
        return "\n".join(lines) + "\n"


def _check_arities(t: Term, arity: Mapping[str, int]) -> None:
    if isinstance(t, App):
        if len(t.args) != arity[t.symbol]:
            raise ValueError(f"symbol {t.symbol!r} applied to {len(t.args)} arguments")
        for a in t.args:
            _check_arities(a, arity)


# -- operation tables -------------------------------------------------------

@dataclass(frozen=True)
class OperationTable:
    """``values[i]`` is the result on the i-th argument tuple (lexicographic)."""

    arity: int
    universe_size: int
    values: tuple

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != self.universe_size ** self.arity:
            raise ValueError(f"table has {len(vals)} entries, expected "
                             f"{self.universe_size}^{self.arity}")
        for v in vals:
            if not 0 <= v < self.universe_size:
                raise ValueError(f"table entry {v} out of range")

    @classmethod
    def from_function(cls, n: int, k: int, fn) -> "OperationTable":
        return cls(k, n, tuple(fn(*t) for t in itertools.product(range(n), repeat=k)))

    @classmethod
    def projection(cls, n: int, k: int, i: int) -> "OperationTable":
        return cls.from_function(n, k, lambda *t: t[i])

    def index(self, args: Sequence[int]) -> int:
        n, i = self.universe_size, 0
        for a in args:
            i = i * n + a
        return i

    def __call__(self, *args: int) -> int:
        return self.values[self.index(args)]

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)

    def is_idempotent(self) -> bool:
        return all(self(*([a] * self.arity)) == a for a in range(self.universe_size))

    def to_json(self, name: str) -> dict:
        return {"name": name, "arity": self.arity, "table": list(self.values)}


# -- evaluation ---------------------------------------------------------------

def eval_term(t: Term, assignment: Mapping[str, int], tables: Mapping[str, OperationTable]) -> int:
    if isinstance(t, Var):
        if t.name not in assignment:
            raise KeyError(f"variable {t.name!r} not assigned")
        return assignment[t.name]
    if t.symbol not in tables:
        raise KeyError(f"no table for symbol {t.symbol!r}")
    table = tables[t.symbol]
    if table.arity != len(t.args):
        raise ValueError(f"symbol {t.symbol!r} has arity {table.arity}")
    return table(*(eval_term(a, assignment, tables) for a in t.args))


def _eval_vectorized(t: Term, columns: Mapping[str, np.ndarray],
                     tables: Mapping[str, OperationTable]) -> np.ndarray:
    if isinstance(t, Var):
        return columns[t.name]
    table = tables[t.symbol]
    n = table.universe_size
    idx = None
    for a in t.args:
        col = _eval_vectorized(a, columns, tables)
        idx = col if idx is None else idx * n + col
    if idx is None:
        return np.full(len(next(iter(columns.values()))) if columns else 1,
                       table.values[0], dtype=np.int64)
    return table.array[idx]


class IdentityCheck(NamedTuple):
    ok: bool
    identity: int | None = None
    assignment: dict | None = None

    def __bool__(self):
        return self.ok


def check_identities(tables: Mapping[str, OperationTable], system: IdentitySystem,
                     n: int) -> IdentityCheck:
    """Exhaustive check; reports the first failing identity and assignment."""
    for s, k in system.signature:
        if s not in tables:
            raise KeyError(f"no table for symbol {s!r}")
        if tables[s].arity != k or tables[s].universe_size != n:
            raise ValueError(f"table for {s!r} does not match arity {k} over {n} elements")
    for i, (lhs, rhs) in enumerate(system.identities):
        vs = system.identity_variables(i)
        total = n ** len(vs)
        for start in range(0, total, CHUNK):
            idx = np.arange(start, min(total, start + CHUNK), dtype=np.int64)
            columns, rest = {}, idx
            for v in reversed(vs):
                rest, columns[v] = np.divmod(rest, n)
            if not vs:
                columns = {}
            left = _eval_vectorized(lhs, columns, tables)
            right = _eval_vectorized(rhs, columns, tables)
            bad = np.nonzero(np.broadcast_to(left != right, idx.shape))[0]
            if len(bad):
                j = int(bad[0])
                return IdentityCheck(False, i, {v: int(columns[v][j]) for v in vs})
    return IdentityCheck(True)


def polymorphism_violation(table: OperationTable, g: Digraph):
    """First tuple of edges whose image is not an edge, or None."""
    k, n = table.arity, g.vertex_count
    if table.universe_size != n:
        raise ValueError("table and digraph universes differ")
    edges = g.sorted_edges()
    if k == 0:
        c = table.values[0]
        return None if g.has_edge(c, c) else ()
    if not edges:
        return None
    m = len(edges)
    tails = np.array([e[0] for e in edges], dtype=np.int64)
    heads = np.array([e[1] for e in edges], dtype=np.int64)
    adj = np.zeros((n, n), dtype=bool)
    adj[heads * 0 + tails, heads] = True
    total = m ** k
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK), dtype=np.int64)
        cell_t = np.zeros_like(idx)
        cell_h = np.zeros_like(idx)
        rest = idx
        digits = []
        for _ in range(k):
            rest, d = np.divmod(rest, m)
            digits.append(d)
        digits.reverse()
        for d in digits:
            cell_t = cell_t * n + tails[d]
            cell_h = cell_h * n + heads[d]
        ok = adj[table.array[cell_t], table.array[cell_h]]
        bad = np.nonzero(~ok)[0]
        if len(bad):
            j = int(bad[0])
            return tuple(edges[int(d[j])] for d in digits)
    return None


def is_polymorphism(table: OperationTable, g: Digraph) -> bool:
    return polymorphism_violation(table, g) is None


# -- polymorphism search ------------------------------------------------------

@dataclass
class PolymorphismSearch:
    """Outcome of :func:`find_polymorphisms`; ``tables`` is None when none exist."""

    tables: dict | None
    nodes: int = 0

    @property
    def found(self) -> bool:
        return self.tables is not None

    def __bool__(self):
        return self.found


class _CellLayout:
    def __init__(self, signature, n):
        self.n = n
        self.symbols = [s for s, _ in signature]
        self.arity = [k for _, k in signature]
        self.offset = []
        total = 0
        for k in self.arity:
            self.offset.append(total)
            total += n ** k
        self.total = total
        self.sym_index = {s: i for i, s in enumerate(self.symbols)}

    def cell(self, sym: int, args: Sequence[int]) -> int:
        i = 0
        for a in args:
            i = i * self.n + a
        return self.offset[sym] + i

    def locate(self, cell: int) -> tuple[int, tuple]:
        sym = bisect.bisect_right(self.offset, cell) - 1
        local, n, k = cell - self.offset[sym], self.n, self.arity[sym]
        args = [0] * k
        for pos in range(k - 1, -1, -1):
            local, args[pos] = divmod(local, n)
        return sym, tuple(args)


def _compile(t: Term, layout: _CellLayout, var_pos: Mapping[str, int]):
    if isinstance(t, Var):
        return (0, var_pos[t.name])
    return (1, layout.sym_index[t.symbol],
            tuple(_compile(a, layout, var_pos) for a in t.args))


class _NestedIdentities:
    """Propagates ground instances of identities that are not linear."""

    def __init__(self, layout, class_of, instances):
        self.layout = layout
        self.class_of = class_of
        self.instances = instances  # (lhs_code, rhs_code, assignment tuple)
        self.watch: dict[int, set] = {}

    def _eval(self, code, asg, dom):
        # -> (True, value) | (False, class, at_root)
        if code[0] == 0:
            return True, asg[code[1]]
        args = []
        for c in code[2]:
            r = self._eval(c, asg, dom)
            if not r[0]:
                return False, r[1], False
            args.append(r[1])
        x = self.class_of[self.layout.cell(code[1], args)]
        d = dom[x]
        if d & (d - 1) == 0:
            return True, single_value(d)
        return False, x, True

    def _process(self, engine, iid) -> bool:
        lhs, rhs, asg = self.instances[iid]
        dom = engine.dom
        l = self._eval(lhs, asg, dom)
        r = self._eval(rhs, asg, dom)
        if l[0] and r[0]:
            return l[1] == r[1]
        if l[0]:
            l, r = r, l
        # l is unknown from here on
        self.watch.setdefault(l[1], set()).add(iid)
        if r[0]:
            return engine.restrict(l[1], 1 << r[1]) if l[2] else True
        self.watch.setdefault(r[1], set()).add(iid)
        if l[2] and r[2] and l[1] != r[1]:
            both = dom[l[1]] & dom[r[1]]
            return engine.restrict(l[1], both) and engine.restrict(r[1], both)
        return True

    def initial(self, engine) -> bool:
        return all(self._process(engine, i) for i in range(len(self.instances)))

    def on_change(self, engine, var) -> bool:
        ids = self.watch.get(var)
        if not ids:
            return True
        return all(self._process(engine, i) for i in list(ids))

    def check_complete(self, engine) -> bool:
        dom = engine.dom
        for lhs, rhs, asg in self.instances:
            l = self._eval(lhs, asg, dom)
            r = self._eval(rhs, asg, dom)
            if not (l[0] and r[0] and l[1] == r[1]):
                return False
        return True


def _ground(system: IdentitySystem, layout: _CellLayout):
    """Compile linear identities to unions/fixed cells; ground the rest.

    Returns (union_find, fixed, nested) or None when some identity forces
    two distinct variables equal.
    """
    n = layout.n
    uf = UnionFind(layout.total)
    fixed: dict[int, int] = {}
    nested = []
    for i, (lhs, rhs) in enumerate(system.identities):
        vs = system.identity_variables(i)
        pos = {v: j for j, v in enumerate(vs)}
        count = n ** len(vs)
        if is_linear_side(lhs) and is_linear_side(rhs):
            for asg in itertools.product(range(n), repeat=len(vs)):
                sides = []
                for t in (lhs, rhs):
                    if isinstance(t, Var):
                        sides.append((0, asg[pos[t.name]]))
                    else:
                        sides.append((1, layout.cell(layout.sym_index[t.symbol],
                                                     [asg[pos[a.name]] for a in t.args])))
                (kl, l), (kr, r) = sides
                if kl == 0 and kr == 0:
                    if l != r:
                        return None
                elif kl == 1 and kr == 1:
                    uf.union(l, r)
                else:
                    c, v = (l, r) if kl == 1 else (r, l)
                    if fixed.setdefault(c, v) != v:
                        return None
        else:
            if len(nested) + count > MAX_GROUND_INSTANCES:
                raise CapExceeded(f"identity {lhs} = {rhs} grounds to {count} instances",
                                  reached=len(nested) + count)
            lc, rc = _compile(lhs, layout, pos), _compile(rhs, layout, pos)
            for asg in itertools.product(range(n), repeat=len(vs)):
                nested.append((lc, rc, asg))
    return uf, fixed, nested


NEIGHBOR_CACHE_BUDGET = 4_000_000


def find_polymorphisms(g: Digraph, system: IdentitySystem,
                       max_nodes: int | None = None) -> PolymorphismSearch:
    """Exhaustively search for polymorphisms of ``g`` satisfying ``system``.

    Table cells are CSP variables (lexicographic order, values ascending).
    Linear identities merge cells or fix them before search; identities with
    nested terms are grounded and propagated on partial tables.
    """
    n = g.vertex_count
    layout = _CellLayout(system.signature, n)
    if n == 0:
        # only the empty table exists for positive arity; nullary symbols have none
        if any(k == 0 for k in layout.arity):
            return PolymorphismSearch(None, 0)
        tables = {s: OperationTable(k, 0, ()) for s, k in system.signature}
        return PolymorphismSearch(tables, 0)
    grounded = _ground(system, layout)
    if grounded is None:
        return PolymorphismSearch(None, 0)
    uf, fixed, nested = grounded

    roots = sorted({uf.find(c) for c in range(layout.total)})
    root_id = {r: i for i, r in enumerate(roots)}
    class_of = [root_id[uf.find(c)] for c in range(layout.total)]
    members: list[list[int]] = [[] for _ in roots]
    for c in range(layout.total):
        members[class_of[c]].append(c)

    full = (1 << n) - 1
    domains = [full] * len(roots)
    for c, v in fixed.items():
        domains[class_of[c]] &= 1 << v
    for sym, (s, k) in enumerate(system.signature):
        if s in _idempotent_symbols(system):
            closure = _pp_closure(g)
            off = layout.offset[sym]
            for i, args in enumerate(itertools.product(range(n), repeat=k)):
                mask = 0
                for a in args:
                    mask |= 1 << a
                domains[class_of[off + i]] &= closure(mask)
    if any(d == 0 for d in domains):
        return PolymorphismSearch(None, 0)

    outs, ins = g.out_lists, g.in_lists
    cache_out: dict[int, tuple] = {}
    cache_in: dict[int, tuple] = {}
    budget = [NEIGHBOR_CACHE_BUDGET]

    def neighbours(x: int, lists, cache) -> tuple:
        hit = cache.get(x)
        if hit is not None:
            return hit
        found = set()
        for c in members[x]:
            sym, args = layout.locate(c)
            local = [0]
            for a in args:
                local = [acc * n + b for acc in local for b in lists[a]]
            off = layout.offset[sym]
            found.update(class_of[off + i] for i in local)
        result = tuple(found)
        if budget[0] >= len(result):
            budget[0] -= len(result)
            cache[x] = result
        return result

    if nested:
        groups = [list(range(len(roots)))]
    else:
        groups = _independent_groups(g, layout, class_of, len(roots))
    solution = [0] * len(roots)
    nodes = 0
    for group in sorted(groups, key=lambda grp: (len(grp), grp[0])):
        local_of = {x: i for i, x in enumerate(group)}
        props = [_NestedIdentities(layout, class_of, nested)] if nested else []
        out_of = lambda x, grp=group, lo=local_of: [lo[w] for w in neighbours(grp[x], outs, cache_out)]
        in_of = lambda x, grp=group, lo=local_of: [lo[w] for w in neighbours(grp[x], ins, cache_in)]
        engine = Engine(g, [domains[x] for x in group], out_of, in_of, props,
                        max_nodes=None if max_nodes is None else max_nodes - nodes)
        sol = next(iter(engine.solutions()), None)
        nodes += engine.nodes
        if sol is None:
            return PolymorphismSearch(None, nodes)
        for x, v in zip(group, sol):
            solution[x] = v
    tables = {}
    for sym, (s, k) in enumerate(system.signature):
        off = layout.offset[sym]
        tables[s] = OperationTable(k, n, tuple(solution[class_of[off + i]] for i in range(n ** k)))
    _assert_sound(g, system, tables)
    return PolymorphismSearch(tables, nodes)


def _idempotent_symbols(system: IdentitySystem) -> set:
    out = set()
    for lhs, rhs in system.identities:
        for a, b in ((lhs, rhs), (rhs, lhs)):
            if (isinstance(b, Var) and isinstance(a, App) and a.args
                    and all(isinstance(t, Var) and t.name == b.name for t in a.args)):
                out.add(a.symbol)
    return out


PP_FAMILY_CAP = 4096


def _pp_closure(g: Digraph):
    """Map a vertex mask to the least known pp-definable set containing it.

    Sets are generated from singletons by taking out- and in-neighbourhoods
    and intersections; idempotent polymorphisms preserve every one of them.
    """
    family = {1 << v for v in range(g.vertex_count)}
    frontier = list(family)
    while frontier and len(family) < PP_FAMILY_CAP:
        new = []
        for s in frontier:
            out = inn = 0
            for v in range(g.vertex_count):
                if s >> v & 1:
                    out |= g.out_masks[v]
                    inn |= g.in_masks[v]
            cands = [out, inn] + [s & t for t in family]
            for t in cands:
                if t and t not in family and len(family) < PP_FAMILY_CAP:
                    family.add(t)
                    new.append(t)
        frontier = new
    full = (1 << g.vertex_count) - 1
    ordered = sorted(family)
    cache: dict[int, int] = {}

    def closure(mask: int) -> int:
        hit = cache.get(mask)
        if hit is None:
            hit = full
            for t in ordered:
                if t & mask == mask:
                    hit &= t
            cache[mask] = hit
        return hit

    return closure


def _independent_groups(g: Digraph, layout: _CellLayout, class_of, count: int) -> list[list[int]]:
    """Partition classes so that no edge constraint crosses two parts.

    Edge constraints keep the weak-component pattern of an argument tuple, so
    classes are grouped by the patterns of their member cells.
    """
    comp = [0] * g.vertex_count
    for i, c in enumerate(components(g)):
        for v in c:
            comp[v] = i
    uf = UnionFind(count)
    first: dict = {}
    n = layout.n
    for sym, k in enumerate(layout.arity):
        off = layout.offset[sym]
        for i, args in enumerate(itertools.product(range(n), repeat=k)):
            key = (sym, tuple(comp[a] for a in args))
            x = class_of[off + i]
            if key in first:
                uf.union(first[key], x)
            else:
                first[key] = x
    groups: dict = {}
    for x in range(count):
        groups.setdefault(uf.find(x), []).append(x)
    return sorted(groups.values())


def _assert_sound(g: Digraph, system: IdentitySystem, tables: Mapping[str, OperationTable]) -> None:
    for s, t in tables.items():
        bad = polymorphism_violation(t, g)
        if bad is not None:
            raise InvariantViolation(f"search returned {s} breaking edges {bad}")
    chk = check_identities(tables, system, g.vertex_count)
    if not chk.ok:
        raise InvariantViolation(f"search returned tables failing identity {chk.identity}")


# -- built-in conditions -------------------------------------------------------

def _idempotence(symbol: str, k: int) -> tuple:
    return (app(symbol, *(["x"] * k)), Var("x"))


def majority() -> IdentitySystem:
    return IdentitySystem([("t", 3)], [
        (app("t", "y", "x", "x"), Var("x")),
        (app("t", "x", "y", "x"), Var("x")),
        (app("t", "x", "x", "y"), Var("x")),
    ])


def minority() -> IdentitySystem:
    return IdentitySystem([("m", 3)], [
        (app("m", "x", "y", "y"), Var("x")),
        (app("m", "y", "x", "y"), Var("x")),
        (app("m", "y", "y", "x"), Var("x")),
    ])


def maltsev() -> IdentitySystem:
    return IdentitySystem([("p", 3)], [
        (app("p", "x", "y", "y"), Var("x")),
        (app("p", "y", "y", "x"), Var("x")),
    ])


def olsak() -> IdentitySystem:
    a = app("t", "x", "y", "y", "y", "x", "x")
    b = app("t", "y", "x", "y", "x", "y", "x")
    c = app("t", "y", "y", "x", "x", "x", "y")
    return IdentitySystem([("t", 6)], [_idempotence("t", 6), (a, b), (b, c)])


def siggers() -> IdentitySystem:
    """4-ary Siggers term s(a,r,e,a) = s(r,a,r,e), idempotent."""
    return IdentitySystem([("s", 4)], [
        _idempotence("s", 4),
        (app("s", "a", "r", "e", "a"), app("s", "r", "a", "r", "e")),
    ])


def _grid_var(i: int, j: int) -> str:
    return f"x{i}_{j}"


def product_decomposition(n: int) -> IdentitySystem:
    if n < 1:
        raise ValueError("arity must be at least 1")
    rows = [app("f", *[_grid_var(i, j) for j in range(1, n + 1)]) for i in range(1, n + 1)]
    diag = app("f", *[_grid_var(i, i) for i in range(1, n + 1)])
    variables = ["x"] + [_grid_var(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    return IdentitySystem([("f", n)], [_idempotence("f", n), (App("f", rows), diag)],
                          variables)


def power_decomposition(n: int) -> IdentitySystem:
    base = product_decomposition(n)
    gx: Term = Var("x")
    for _ in range(n):
        gx = App("g", (gx,))
    xs = [f"x{i}" for i in range(1, n + 1)]
    lhs = App("g", (app("f", *xs),))
    rhs = App("f", tuple(App("g", (Var(v),)) for v in xs[1:] + xs[:1]))
    return IdentitySystem(
        [("f", n), ("g", 1)],
        list(base.identities) + [(gx, Var("x")), (lhs, rhs)],
        list(base.variables) + xs,
    )


def taylor(n: int, rows: Sequence[tuple[str, str]]) -> IdentitySystem:
    """Idempotent n-ary t with one identity per coordinate.

    ``rows[i]`` is a pair of words over {x, y}, x at position i on the left
    and y at position i on the right.
    """
    if len(rows) != n:
        raise ValueError(f"need {n} rows, got {len(rows)}")
    identities = [_idempotence("t", n)]
    for i, (left, right) in enumerate(rows):
        if len(left) != n or len(right) != n or set(left + right) - {"x", "y"}:
            raise ValueError(f"row {i} is not a pair of {n}-letter words over x, y")
        if left[i] != "x" or right[i] != "y":
            raise ValueError(f"row {i} needs x on the left and y on the right at position {i}")
        identities.append((app("t", *left), app("t", *right)))
    return IdentitySystem([("t", n)], identities, ["x", "y"])


def semilattice() -> IdentitySystem:
    return IdentitySystem([("s", 2)], [
        _idempotence("s", 2),
        (app("s", "x", "y"), app("s", "y", "x")),
        (app("s", "x", app("s", "y", "z")), app("s", app("s", "x", "y"), "z")),
    ])


_BUILTINS = {
    "majority": majority,
    "minority": minority,
    "maltsev": maltsev,
    "olsak": olsak,
    "siggers": siggers,
    "semilattice": semilattice,
    "product_decomposition": product_decomposition,
    "power_decomposition": power_decomposition,
}


def builtin(name: str, *args) -> IdentitySystem:
    if name == "taylor":
        return taylor(*args)
    if name not in _BUILTINS:
        raise ValueError(f"unknown condition {name!r}; known: {sorted(_BUILTINS) + ['taylor']}")
    return _BUILTINS[name](*args)


def resolve_condition(text: str) -> IdentitySystem:
    """A built-in such as ``olsak`` or ``power_decomposition(2)``, or a DSL file."""
    m = re.fullmatch(r"\s*([A-Za-z_]\w*)\s*(?:\(\s*(\d+)\s*\))?\s*", text)
    if m and (m.group(1) in _BUILTINS):
        args = (int(m.group(2)),) if m.group(2) else ()
        return builtin(m.group(1), *args)
    path = Path(text)
    if path.exists():
        return parse_dsl(path.read_text())
    raise ValueError(f"unknown condition {text!r}")


# -- identity DSL ---------------------------------------------------------------

class DslError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


_TOKEN = re.compile(r"\s*(?:([A-Za-z_]\w*)|(\()|(\))|(,)|(=))")
_VAR = re.compile(r"[a-z][a-z0-9_]*")


def _tokenize(text: str, line: int) -> list[str]:
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise DslError(line, f"unexpected character {text[pos:].strip()[:1]!r}")
        tokens.append(m.group(m.lastindex))
        pos = m.end()
    return tokens


def parse_dsl(text: str) -> IdentitySystem:
    """Parse ``symbols: f/3, g/1`` followed by one identity per line."""
    arity: dict[str, int] | None = None
    signature: list = []
    identities: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if arity is None:
            m = re.fullmatch(r"symbols\s*:\s*(.*)", line)
            if not m:
                raise DslError(lineno, 'expected header "symbols: f/3, ..."')
            arity = {}
            for item in filter(None, (s.strip() for s in m.group(1).split(","))):
                sm = re.fullmatch(r"([A-Za-z_]\w*)\s*/\s*(\d+)", item)
                if not sm:
                    raise DslError(lineno, f"bad symbol declaration {item!r}")
                if sm.group(1) in arity:
                    raise DslError(lineno, f"symbol {sm.group(1)!r} declared twice")
                arity[sm.group(1)] = int(sm.group(2))
                signature.append((sm.group(1), int(sm.group(2))))
            continue
        tokens = _tokenize(line, lineno)
        pos = 0

        def parse_term() -> Term:
            nonlocal pos
            if pos >= len(tokens) or tokens[pos] in "(),=":
                raise DslError(lineno, "expected a term")
            name = tokens[pos]
            pos += 1
            if pos < len(tokens) and tokens[pos] == "(":
                if name not in arity:
                    raise DslError(lineno, f"undeclared symbol {name!r}")
                pos += 1
                args = []
                if pos < len(tokens) and tokens[pos] == ")":
                    pos += 1
                else:
                    while True:
                        args.append(parse_term())
                        if pos < len(tokens) and tokens[pos] == ",":
                            pos += 1
                            continue
                        if pos < len(tokens) and tokens[pos] == ")":
                            pos += 1
                            break
                        raise DslError(lineno, "expected ',' or ')'")
                if len(args) != arity[name]:
                    raise DslError(lineno, f"{name} has arity {arity[name]}, "
                                           f"applied to {len(args)} arguments")
                return App(name, tuple(args))
            if name in arity:
                if arity[name] != 0:
                    raise DslError(lineno, f"{name} has arity {arity[name]}, used without arguments")
                return App(name, ())
            if not _VAR.fullmatch(name):
                raise DslError(lineno, f"variables must be lowercase identifiers, got {name!r}")
            return Var(name)

        lhs = parse_term()
        if pos >= len(tokens) or tokens[pos] != "=":
            raise DslError(lineno, "expected '='")
        pos += 1
        rhs = parse_term()
        if pos != len(tokens):
            raise DslError(lineno, f"trailing input {' '.join(tokens[pos:])!r}")
        identities.append((lhs, rhs))
    if arity is None:
        raise DslError(1, "empty condition")
    return IdentitySystem(signature, identities)


# -- Taylor search and binary-with-unit -------------------------------------------

def _normal_identity(left: tuple, right: tuple) -> tuple:
    swap = lambda w: tuple(1 - c for c in w)
    return min((left, right), (right, left), (swap(left), swap(right)), (swap(right), swap(left)))


def _normal_system(ids: Iterable[tuple], k: int) -> tuple:
    best = None
    for perm in itertools.permutations(range(k)):
        key = tuple(sorted(_normal_identity(tuple(l[p] for p in perm), tuple(r[p] for p in perm))
                           for l, r in ids))
        if best is None or key < best:
            best = key
    return best


def taylor_patterns(k: int) -> list[tuple]:
    """Canonical Taylor identity sets of arity k (0 = x, 1 = y in each word).

    Row swap x<->y, side swap, row order and coordinate permutations are
    quotiented out.  Ordered by number of identities, then lexicographically.
    """
    per_coord = []
    for i in range(k):
        opts = []
        for rest_l in itertools.product((0, 1), repeat=k - 1):
            for rest_r in itertools.product((0, 1), repeat=k - 1):
                left = rest_l[:i] + (0,) + rest_l[i:]
                right = rest_r[:i] + (1,) + rest_r[i:]
                opts.append(_normal_identity(left, right))
        per_coord.append(opts)
    systems = set()
    for choice in itertools.product(*per_coord):
        systems.add(_normal_system(set(choice), k))
    return sorted(systems, key=lambda s: (len(s), s))


def _pattern_system(k: int, pattern: Sequence[tuple]) -> IdentitySystem:
    word = lambda w: app("t", *("xy"[c] for c in w))
    return IdentitySystem([("t", k)], [_idempotence("t", k)] + [(word(l), word(r)) for l, r in pattern],
                          ["x", "y"])


@dataclass
class TaylorWitness:
    arity: int
    rows: list
    table: OperationTable
    system: IdentitySystem = field(repr=False)


def search_taylor(g: Digraph, max_arity: int = 3) -> TaylorWitness | None:
    if max_arity < 1:
        raise ValueError("max_arity must be at least 1")
    for k in range(2, max_arity + 1):
        for pattern in taylor_patterns(k):
            sys_ = _pattern_system(k, pattern)
            res = find_polymorphisms(g, sys_)
            if res.found:
                rows = [("".join("xy"[c] for c in l), "".join("xy"[c] for c in r))
                        for l, r in pattern]
                return TaylorWitness(k, rows, res.tables["t"], sys_)
    return None


def find_binary_with_unit(g: Digraph) -> tuple[OperationTable, int] | None:
    """Binary polymorphism f and unit e with f(e,x) = f(x,e) = x, if any."""
    from .hom_search import HomProblem, find_homomorphism

    n = g.vertex_count
    sq = power(g, 2)
    for e in range(n):
        pins = {}
        for x in range(n):
            pins[e * n + x] = x
            pins[x * n + e] = x
        f = find_homomorphism(HomProblem(sq, g, pins))
        if f is not None:
            return OperationTable(2, n, f.image), e
    return None
