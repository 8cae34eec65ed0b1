"""Finite algebras: compatibility, congruence lattices, free algebras, and the
component/homomorphism pipeline that embeds a compatible digraph of a
non-Taylor algebra into a disjoint union of powers of the triangle.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .conditions import OperationTable, polymorphism_violation
from .errors import CapExceeded, InvariantViolation
from .hom_search import HomProblem, iter_homomorphisms
from .structures import (Digraph, Partition, UnionFind, VertexMap, components,
                         decode_index, disjoint_union, encode_tuple, is_isomorphic,
                         make_c, power, spanned_subdigraph)

DEFAULT_MAX_ELEMENTS = 10**6


# -- algebras ------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteAlgebra:
    universe_size: int
    ops: tuple = ()  # (name, OperationTable) pairs

    def __post_init__(self):
        ops = tuple((str(name), t) for name, t in self.ops)
        names = [n for n, _ in ops]
        if len(set(names)) != len(names):
            raise ValueError("operation names must be distinct")
        for name, t in ops:
            if t.universe_size != self.universe_size:
                raise ValueError(f"operation {name!r} is over {t.universe_size} elements, "
                                 f"algebra has {self.universe_size}")
        object.__setattr__(self, "ops", ops)

    def op(self, name: str) -> OperationTable:
        for n, t in self.ops:
            if n == name:
                return t
        raise KeyError(name)

    @property
    def op_names(self) -> list[str]:
        return [n for n, _ in self.ops]

    def to_json(self) -> dict:
        return {"size": self.universe_size,
                "ops": [t.to_json(name) for name, t in self.ops]}

    @classmethod
    def from_json(cls, data: Mapping) -> "FiniteAlgebra":
        if not isinstance(data, Mapping) or "size" not in data:
            raise ValueError('algebra JSON needs "size" and "ops"')
        n = data["size"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise ValueError("size must be a non-negative integer")
        ops = []
        for i, entry in enumerate(data.get("ops", [])):
            try:
                name, k, table = entry["name"], entry["arity"], entry["table"]
            except (KeyError, TypeError):
                raise ValueError(f'operation {i} needs "name", "arity" and "table"') from None
            if not isinstance(k, int) or k < 0:
                raise ValueError(f"operation {name!r}: arity must be a non-negative integer")
            if not isinstance(table, list) or not all(isinstance(v, int) for v in table):
                raise ValueError(f"operation {name!r}: table must be a list of integers")
            ops.append((name, OperationTable(k, n, tuple(table))))
        return cls(n, tuple(ops))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "FiniteAlgebra":
        return cls.from_json(json.loads(Path(path).read_text()))


def _lift_table(tables: Sequence[OperationTable], sizes: Sequence[int]) -> OperationTable:
    """Coordinatewise operation on the product of universes with ``sizes``."""
    k = tables[0].arity
    total = 1
    for s in sizes:
        total *= s
    if total ** k > 10**8:
        raise CapExceeded(f"product operation table would have {total ** k} entries",
                          reached=total ** k)
    idx = np.arange(total ** k, dtype=np.int64)
    args, rest = [], idx
    for _ in range(k):
        rest, d = np.divmod(rest, total)
        args.append(d)
    args.reverse()
    result = np.zeros_like(idx)
    for c, (t, size) in enumerate(zip(tables, sizes)):
        weight = 1
        for s in sizes[c + 1:]:
            weight *= s
        cell = np.zeros_like(idx)
        for a in args:
            cell = cell * size + (a // weight) % size
        result = result * size + t.array[cell] if k else result * size + t.values[0]
    return OperationTable(k, total, tuple(result.tolist()))


def product_algebra(algebras: Sequence[FiniteAlgebra]) -> FiniteAlgebra:
    """Product of algebras of the same signature, elements in lexicographic order."""
    if not algebras:
        raise ValueError("need at least one factor")
    names = algebras[0].op_names
    for a in algebras[1:]:
        if a.op_names != names or [t.arity for _, t in a.ops] != [t.arity for _, t in algebras[0].ops]:
            raise ValueError("factors have different signatures")
    sizes = [a.universe_size for a in algebras]
    total = int(np.prod(sizes)) if sizes else 1
    ops = [(name, _lift_table([a.op(name) for a in algebras], sizes)) for name in names]
    return FiniteAlgebra(total, tuple(ops))


def power_algebra(a: FiniteAlgebra, k: int) -> FiniteAlgebra:
    if k < 1:
        raise ValueError("exponent must be at least 1")
    return product_algebra([a] * k)


def set_algebra(n: int) -> FiniteAlgebra:
    return FiniteAlgebra(n, ())


def meet_semilattice() -> FiniteAlgebra:
    return FiniteAlgebra(2, (("meet", OperationTable.from_function(2, 2, min)),))


def algebra_a1() -> FiniteAlgebra:
    """({0,1}, x+y+z mod 2)."""
    return FiniteAlgebra(2, (("m", OperationTable.from_function(2, 3, lambda x, y, z: (x + y + z) % 2)),))


def algebra_a2() -> FiniteAlgebra:
    """({0,1,2}, 2x+2y mod 3)."""
    return FiniteAlgebra(3, (("s", OperationTable.from_function(3, 2, lambda x, y: (2 * x + 2 * y) % 3)),))


def polymorphism_algebra(g: Digraph, arity: int) -> FiniteAlgebra:
    """All polymorphisms of ``g`` of the given arity, named p0, p1, ..."""
    maps = list(iter_homomorphisms(HomProblem(power(g, arity), g)))
    return FiniteAlgebra(g.vertex_count, tuple(
        (f"p{i}", OperationTable(arity, g.vertex_count, f.image)) for i, f in enumerate(maps)))


class Compatibility(NamedTuple):
    ok: bool
    operation: str | None = None
    witness: tuple | None = None

    def __bool__(self):
        return self.ok


def is_compatible(g: Digraph, a: FiniteAlgebra) -> Compatibility:
    """Every operation of ``a`` preserves the edges of ``g``."""
    if g.vertex_count != a.universe_size:
        raise ValueError("digraph and algebra universes differ")
    for name, t in a.ops:
        bad = polymorphism_violation(t, g)
        if bad is not None:
            return Compatibility(False, name, bad)
    return Compatibility(True)


# -- congruences -----------------------------------------------------------------

def translations(a: FiniteAlgebra) -> list[tuple]:
    """Distinct basic translations x -> f(c_1, .., x, .., c_k), as value tuples."""
    n = a.universe_size
    seen = set()
    out = []
    for _, t in a.ops:
        k = t.arity
        vals = t.array.reshape((n,) * k) if k else None
        for pos in range(k):
            moved = np.moveaxis(vals, pos, -1).reshape(-1, n)
            for row in moved:
                key = tuple(row.tolist())
                if key not in seen:
                    seen.add(key)
                    out.append(key)
    return out


def is_congruence(p: Partition, a: FiniteAlgebra) -> bool:
    b = p.block_of
    for tr in translations(a):
        first: dict = {}
        for x in range(a.universe_size):
            if first.setdefault(b[x], b[tr[x]]) != b[tr[x]]:
                return False
    return True


def principal_congruence(a: FiniteAlgebra, u: int, v: int, trs: list | None = None) -> Partition:
    n = a.universe_size
    trs = translations(a) if trs is None else trs
    uf = UnionFind(n)
    queue = []
    if uf.union(u, v):
        queue.append((u, v))
    while queue:
        x, y = queue.pop()
        for tr in trs:
            if uf.union(tr[x], tr[y]):
                queue.append((tr[x], tr[y]))
    return Partition(n, tuple(uf.find(x) for x in range(n)))


@dataclass
class CongruenceLattice:
    congruences: list
    leq: list

    def __post_init__(self):
        self._index = {p.block_of: i for i, p in enumerate(self.congruences)}

    def __len__(self):
        return len(self.congruences)

    def index(self, p: Partition) -> int:
        return self._index[p.block_of]

    def meet(self, i: int, j: int) -> int:
        return self.index(self.congruences[i].meet(self.congruences[j]))

    def join(self, i: int, j: int) -> int:
        return self.index(self.congruences[i].join(self.congruences[j]))

    @property
    def bottom(self) -> int:
        return 0

    @property
    def top(self) -> int:
        return len(self.congruences) - 1

    def covers(self) -> list[tuple[int, int]]:
        """Hasse diagram edges (lower, upper)."""
        m = len(self)
        out = []
        for i in range(m):
            for j in range(m):
                if i != j and self.leq[i][j] and not any(
                        k not in (i, j) and self.leq[i][k] and self.leq[k][j] for k in range(m)):
                    out.append((i, j))
        return out


def _sort_key(p: Partition):
    return (-p.block_count, p.block_of)


def congruence_lattice(a: FiniteAlgebra) -> CongruenceLattice:
    """All congruences as joins of principal ones; ordered from finest to coarsest."""
    n = a.universe_size
    if n < 1:
        raise ValueError("universe must be non-empty")
    trs = translations(a)
    principals = {}
    for u in range(n):
        for v in range(u + 1, n):
            p = principal_congruence(a, u, v, trs)
            principals.setdefault(p.block_of, p)
    found = {Partition.discrete(n).block_of: Partition.discrete(n)}
    frontier = list(found.values())
    gens = list(principals.values())
    while frontier:
        new = []
        for p in frontier:
            for q in gens:
                r = p.join(q)
                if r.block_of not in found:
                    found[r.block_of] = r
                    new.append(r)
        frontier = new
    cons = sorted(found.values(), key=_sort_key)
    leq = [[p.refines(q) for q in cons] for p in cons]
    lat = CongruenceLattice(cons, leq)
    for i in range(len(cons)):
        for j in range(len(cons)):
            lat.meet(i, j)  # KeyError would mean the set is not closed
    return lat


class LatticeProperties(NamedTuple):
    meet_sd: bool
    join_sd: bool
    distributive: bool
    m_n: int | None


def lattice_properties(lat: CongruenceLattice) -> LatticeProperties:
    m = len(lat)
    meet = [[lat.meet(i, j) for j in range(m)] for i in range(m)]
    join = [[lat.join(i, j) for j in range(m)] for i in range(m)]
    rng = range(m)
    meet_sd = all(meet[x][y] != meet[x][z] or meet[x][y] == meet[x][join[y][z]]
                  for x in rng for y in rng for z in rng)
    join_sd = all(join[x][y] != join[x][z] or join[x][y] == join[x][meet[y][z]]
                  for x in rng for y in rng for z in rng)
    distributive = all(meet[x][join[y][z]] == join[meet[x][y]][meet[x][z]]
                       for x in rng for y in rng for z in rng)
    return LatticeProperties(meet_sd, join_sd, distributive, _m_n(lat))


def _m_n(lat: CongruenceLattice) -> int | None:
    """j when the lattice is bottom, top and j >= 1 elements that are atoms and coatoms."""
    m = len(lat)
    if m < 3:
        return None
    bottom = [i for i in range(m) if all(lat.leq[i][j] for j in range(m))]
    top = [i for i in range(m) if all(lat.leq[j][i] for j in range(m))]
    if len(bottom) != 1 or len(top) != 1:
        return None
    middle = [i for i in range(m) if i not in (bottom[0], top[0])]
    for i in middle:
        for j in middle:
            if i != j and lat.leq[i][j]:
                return None
    return len(middle)


def majority_composite_check() -> bool:
    """Every minority m and idempotent commutative s on {0,1} give a majority
    term m(s(x,y), s(x,z), s(y,z))."""
    ms = [t for t in (OperationTable(3, 2, v) for v in itertools.product((0, 1), repeat=8))
          if all(t(x, y, y) == x and t(y, x, y) == x and t(y, y, x) == x
                 for x in (0, 1) for y in (0, 1))]
    ss = [t for t in (OperationTable(2, 2, v) for v in itertools.product((0, 1), repeat=4))
          if t.is_idempotent() and all(t(x, y) == t(y, x) for x in (0, 1) for y in (0, 1))]
    if not ms or not ss:
        return False
    for m in ms:
        for s in ss:
            t = lambda x, y, z: m(s(x, y), s(x, z), s(y, z))
            if not all(t(y, x, x) == x and t(x, y, x) == x and t(x, x, y) == x
                       for x in (0, 1) for y in (0, 1)):
                return False
    return True


# -- free algebras ----------------------------------------------------------------

GENERATOR_NAMES = "xyzuvw"


def _generator_name(i: int) -> str:
    return GENERATOR_NAMES[i] if i < len(GENERATOR_NAMES) else f"x{i}"


@dataclass
class FreeAlgebra:
    algebra: FiniteAlgebra
    generators: tuple
    elements: np.ndarray = field(repr=False)  # row i: values of element i on A^k
    terms: list = field(repr=False)

    def index_of(self, values) -> int:
        key = np.asarray(values, dtype=np.int64).tobytes()
        for i, row in enumerate(self.elements):
            if row.tobytes() == key:
                return i
        raise KeyError("not an element of the free algebra")


def free_algebra(a: FiniteAlgebra, k: int,
                 max_elements: int = DEFAULT_MAX_ELEMENTS) -> tuple[FiniteAlgebra, tuple]:
    f = free_algebra_full(a, k, max_elements)
    return f.algebra, f.generators


def free_algebra_full(a: FiniteAlgebra, k: int,
                      max_elements: int = DEFAULT_MAX_ELEMENTS) -> FreeAlgebra:
    """Subalgebra of a^(a^k) generated by the projections, built breadth first.

    Each round applies every operation to argument tuples using at least one
    element from the previous round; new elements keep the order in which
    (operation, argument indices) first produce them.
    """
    if k < 1:
        raise ValueError("need at least one generator")
    n = a.universe_size
    width = n ** k
    if width > max_elements:
        raise CapExceeded(f"a^k has {width} points, over the cap", reached=width)
    pts = np.array([decode_index(i, (n,) * k) for i in range(width)], dtype=np.int64).reshape(width, k)
    rows: list[np.ndarray] = []
    terms: list[str] = []
    index: dict[bytes, int] = {}

    def add(row: np.ndarray, term: str) -> int:
        key = row.tobytes()
        if key in index:
            return index[key]
        if len(rows) >= max_elements:
            raise CapExceeded(f"free algebra exceeds {max_elements} elements", reached=len(rows))
        index[key] = len(rows)
        rows.append(row)
        terms.append(term)
        return len(rows) - 1

    gens = tuple(add(np.ascontiguousarray(pts[:, i]), _generator_name(i)) for i in range(k))
    prev_start, first_round = 0, True
    while True:
        size = len(rows)
        if size == prev_start and not first_round:
            break
        mat = np.stack(rows)
        for name, t in a.ops:
            r = t.arity
            if r == 0:
                if first_round:
                    add(np.full(width, t.values[0], dtype=np.int64), f"{name}()")
                continue
            for args in itertools.product(range(size), repeat=r):
                if max(args) < prev_start:
                    continue
                cell = np.zeros(width, dtype=np.int64)
                for j in args:
                    cell = cell * n + mat[j]
                add(t.array[cell], f"{name}({','.join(terms[j] for j in args)})")
        prev_start, first_round = size, False
    elements = np.stack(rows) if rows else np.zeros((0, width), dtype=np.int64)
    m = len(rows)
    ops = []
    for name, t in a.ops:
        r = t.arity
        if m ** r > 10**7:
            raise CapExceeded(f"operation {name} on the free algebra needs {m ** r} entries",
                              reached=m ** r)
        vals = []
        for args in itertools.product(range(m), repeat=r):
            cell = np.zeros(width, dtype=np.int64)
            for j in args:
                cell = cell * n + elements[j]
            vals.append(index[t.array[cell].tobytes()] if r else index[np.full(width, t.values[0], dtype=np.int64).tobytes()])
        ops.append((name, OperationTable(r, m, tuple(vals))))
    return FreeAlgebra(FiniteAlgebra(m, tuple(ops)), gens, elements, terms)


def generated_subuniverse(a: FiniteAlgebra, gens: Sequence[tuple],
                          max_elements: int = DEFAULT_MAX_ELEMENTS) -> list[tuple]:
    """Closure of tuples under the coordinatewise operations (semi-naive)."""
    found: list[tuple] = []
    seen: set = set()
    for g in gens:
        if g not in seen:
            seen.add(g)
            found.append(g)
    prev_start, first_round = 0, True
    while True:
        size = len(found)
        if size == prev_start and not first_round:
            break
        for _, t in a.ops:
            r = t.arity
            if r == 0:
                if first_round and found:
                    new = tuple(t.values[0] for _ in found[0])
                    if new not in seen:
                        seen.add(new)
                        found.append(new)
                continue
            for args in itertools.product(range(size), repeat=r):
                if max(args) < prev_start:
                    continue
                new = tuple(t(*(found[j][c] for j in args)) for c in range(len(found[0])))
                if new not in seen:
                    if len(found) >= max_elements:
                        raise CapExceeded(f"subuniverse exceeds {max_elements} tuples",
                                          reached=len(found))
                    seen.add(new)
                    found.append(new)
        prev_start, first_round = size, False
    return found


# -- the component pipeline ---------------------------------------------------------

@dataclass
class ComponentInfo:
    label: tuple          # the unary term operation t = u(x,x,x) as a value tuple
    vertices: list
    term: str             # shortest generated term for t(x)
    homs: list            # non-constant homomorphisms F_t -> C (VertexMaps on the component)


@dataclass
class Section4Result:
    free_algebra: FiniteAlgebra
    generators: tuple
    terms: list
    F_digraph: Digraph
    components_T: list
    psi: VertexMap
    K: Digraph
    K_algebra: FiniteAlgebra
    G: Digraph
    K_embedding: VertexMap
    claims: dict

    @property
    def H_t(self) -> list:
        return [c.homs for c in self.components_T]

    @property
    def exponents(self) -> list[int]:
        return [len(c.homs) for c in self.components_T]


def quotient_algebra(a: FiniteAlgebra, p: Partition) -> FiniteAlgebra:
    reps = [blk[0] for blk in p.blocks()]
    m = len(reps)
    ops = []
    for name, t in a.ops:
        vals = tuple(p.block_of[t(*(reps[i] for i in args))]
                     for args in itertools.product(range(m), repeat=t.arity))
        ops.append((name, OperationTable(t.arity, m, vals)))
    return FiniteAlgebra(m, tuple(ops))


def section4_pipeline(a: FiniteAlgebra, max_elements: int = DEFAULT_MAX_ELEMENTS) -> Section4Result:
    free = free_algebra_full(a, 3, max_elements)
    fa, (x, y, z) = free.algebra, free.generators
    m = fa.universe_size
    n = a.universe_size

    pairs = generated_subuniverse(fa, [(x, x), (y, y), (z, z), (x, y), (y, z), (z, x)],
                                  max_elements)
    fdig = Digraph(m, frozenset(pairs))

    # u(x,x,x) as a unary operation, and the element t(x) of F for each label
    diag = [encode_tuple((v, v, v), (n, n, n)) for v in range(n)]
    label_of = [tuple(int(free.elements[u][d]) for d in diag) for u in range(m)]

    def lifted(t: tuple, var: int) -> int:
        row = [t[decode_index(i, (n, n, n))[var]] for i in range(n ** 3)]
        return free.index_of(row)

    comps = []
    psi_vals: list = [None] * m
    for comp in components(fdig):
        labels = {label_of[u] for u in comp}
        if len(labels) != 1:
            raise InvariantViolation("a component of F mixes unary labels")
        t = labels.pop()
        sub, inc = spanned_subdigraph(fdig, comp)
        homs = []
        for h in iter_homomorphisms(HomProblem(sub, make_c())):
            if len(set(h.image)) > 1:
                homs.append(h)
                if 3 ** len(homs) > max_elements:
                    raise CapExceeded(f"component with {len(homs)} homomorphisms to C",
                                      reached=3 ** len(homs))
        comps.append(ComponentInfo(t, list(comp), free.terms[lifted(t, 0)], homs))
        for pos, u in enumerate(comp):
            psi_vals[u] = (len(comps) - 1, tuple(h.image[pos] for h in homs))

    g = disjoint_union([power(make_c(), len(c.homs)) for c in comps])
    offsets, acc = [], 0
    for c in comps:
        offsets.append(acc)
        acc += 3 ** len(c.homs)
    g_index = [offsets[ci] + encode_tuple(vals, (3,) * len(vals)) for ci, vals in psi_vals]
    k_vertices = sorted(set(g_index))
    k_of = {v: i for i, v in enumerate(k_vertices)}
    psi = VertexMap(m, len(k_vertices), tuple(k_of[v] for v in g_index))
    kdig = Digraph(len(k_vertices), frozenset((psi(u), psi(v)) for u, v in pairs))
    emb = VertexMap(len(k_vertices), g.vertex_count, tuple(k_vertices))

    kernel = Partition(m, psi.image)
    claims: dict = {}
    claims["claim1_kernel_is_congruence"] = is_congruence(kernel, fa)
    if not claims["claim1_kernel_is_congruence"]:
        raise InvariantViolation("kernel of psi is not a congruence")
    claims["claim2_generators_distinct"] = len({psi(x), psi(y), psi(z)}) == 3
    claim3 = []
    for c in comps:
        images = {psi(lifted(c.label, var)) for var in range(3)}
        claim3.append(bool(c.homs) == (len(images) == 3))
    claims["claim3_per_component"] = claim3
    claims["claim3"] = all(claim3)
    if not claims["claim3"]:
        raise InvariantViolation("a component has homs to C but its t(x),t(y),t(z) classes are not distinct, or the reverse")

    # K is F / ker psi with the induced algebra
    reps = [0] * len(k_vertices)
    for u in range(m - 1, -1, -1):
        reps[psi(u)] = u
    kalg_ops = []
    for name, t in fa.ops:
        vals = tuple(psi(t(*(reps[i] for i in args)))
                     for args in itertools.product(range(len(reps)), repeat=t.arity))
        kalg_ops.append((name, OperationTable(t.arity, len(reps), vals)))
    kalg = FiniteAlgebra(len(reps), tuple(kalg_ops))
    claims["psi_surjective_homomorphism"] = (
        len(set(psi.image)) == psi.target_count
        and all(kdig.has_edge(psi(u), psi(v)) for u, v in pairs))
    claims["K_compatible"] = is_compatible(kdig, kalg).ok
    claims["K_spanned_in_G"] = all(
        kdig.has_edge(i, j) == g.has_edge(k_vertices[i], k_vertices[j])
        for i in range(len(k_vertices)) for j in range(len(k_vertices)))
    return Section4Result(fa, (x, y, z), free.terms, fdig, comps, psi, kdig, kalg, g, emb, claims)


# -- triple shift and the gadget --------------------------------------------------------

@dataclass
class TripleShift:
    digraph: Digraph
    vertices: list          # triples (d0, d1, d2) of vertices of G1
    components: list        # (exponent, sorted vertex indices)
    base: Digraph

    @property
    def exponent_counts(self) -> dict:
        out: dict = {}
        for e, _ in self.components:
            out[e] = out.get(e, 0) + 1
        return dict(sorted(out.items()))


def _power_union(exponents: Sequence[int]) -> Digraph:
    return disjoint_union([power(make_c(), k) for k in exponents])


def triple_shift(exponents: Sequence[int]) -> TripleShift:
    """Homomorphisms C -> G1 with the coordinatewise equal-or-shift edges.

    G1 is the disjoint union of C^k over ``exponents``.  Per coordinate a
    vertex is a constant (which must stay put along edges) or a rotation
    i -> i + c (which may stay or advance by one).
    """
    if any(k < 0 for k in exponents):
        raise ValueError("exponents must be non-negative")
    base = _power_union(exponents)
    records = []  # (triple, component index, per-coordinate kinds)
    offset = 0
    for j, k in enumerate(exponents):
        sizes = (3,) * k
        kinds = [("c", c) for c in range(3)] + [("r", c) for c in range(3)]
        for choice in itertools.product(kinds, repeat=k):
            triple = tuple(offset + encode_tuple(
                [c if kind == "c" else (i + c) % 3 for kind, c in choice], sizes) for i in range(3))
            records.append((triple, j, choice))
        offset += 3 ** k
    records.sort()
    edges = set()
    for u, (_, ju, cu) in enumerate(records):
        for v, (_, jv, cv) in enumerate(records):
            if ju != jv:
                continue
            if all(ku == kv and (wv == wu or (ku == "r" and wv == (wu + 1) % 3))
                   for (ku, wu), (kv, wv) in zip(cu, cv)):
                edges.add((u, v))
    dig = Digraph(len(records), frozenset(edges))
    comps = []
    for comp in components(dig):
        rot = {sum(1 for kind, _ in records[v][2] if kind == "r") for v in comp}
        if len(rot) != 1:
            raise InvariantViolation("component mixes rotation patterns")
        e = rot.pop()
        sub, _ = spanned_subdigraph(dig, comp)
        if sub.vertex_count <= 729 and is_isomorphic(sub, power(make_c(), e)) is None:
            raise InvariantViolation(f"component is not isomorphic to C^{e}")
        comps.append((e, comp))
    return TripleShift(dig, [r[0] for r in records], comps, base)


A_VERTS = (0, 1, 2)
B_VERTS = (3, 4, 5)


def _triangle_edges() -> set:
    edges = {(v, v) for v in range(6)}
    for tri in (A_VERTS, B_VERTS):
        for i in range(3):
            edges.add((tri[i], tri[(i + 1) % 3]))
    return edges


def cross_pairs() -> list[tuple[int, int]]:
    return sorted([(a, b) for a in A_VERTS for b in B_VERTS] +
                  [(b, a) for a in A_VERTS for b in B_VERTS])


def gadget_search() -> list[Digraph]:
    """Every gadget on a0,a1,a2,b0,b1,b2 (vertices 0..5) that realises the shift rule.

    Both triangles are fixed; a hom to C sending a_i -> d_i and b_i -> e_i
    therefore needs d and e to be homs C -> C, so the condition reduces to
    one 36-bit mask over such pairs per choice of cross edges.
    """
    c = make_c()
    homs = [tuple(h.image) for h in iter_homomorphisms(HomProblem(c, c))]
    shift = triple_shift([1])
    pos = {t: i for i, t in enumerate(shift.vertices)}
    required = 0
    pair_bits = []
    for di, d in enumerate(homs):
        for ei, e in enumerate(homs):
            bit = di * len(homs) + ei
            pair_bits.append((d, e))
            if shift.digraph.has_edge(pos[d], pos[e]):
                required |= 1 << bit
    masks = []
    for u, v in cross_pairs():
        mk = 0
        for bit, (d, e) in enumerate(pair_bits):
            val = lambda w: d[w] if w < 3 else e[w - 3]
            if c.has_edge(val(u), val(v)):
                mk |= 1 << bit
        masks.append(mk)
    full = (1 << len(pair_bits)) - 1
    table = np.array([full], dtype=np.uint64)
    for mk in masks:
        table = np.concatenate([table, table & np.uint64(mk)])
    hits = np.nonzero(table == np.uint64(required))[0]
    base = _triangle_edges()
    pairs = cross_pairs()
    found = []
    for subset in hits.tolist():
        chosen = {pairs[i] for i in range(len(pairs)) if subset >> i & 1}
        found.append(Digraph(6, frozenset(base | chosen)))
    found.sort(key=lambda g: g.sorted_edges())
    if not found:
        raise InvariantViolation("no gadget realises the shift rule")
    for g in found:
        if len(components(g)) != 1:
            raise InvariantViolation("a recovered gadget is disconnected")
    return found


def rebuild_from_gadget(d: Digraph, g1: Digraph) -> tuple[Digraph, list]:
    """Vertices: homs C -> g1 (lexicographic); f -> g iff a_i -> f(i), b_i -> g(i) is a hom d -> g1."""
    if d.vertex_count != 6:
        raise ValueError("gadget must have 6 vertices")
    verts = [tuple(h.image) for h in iter_homomorphisms(HomProblem(make_c(), g1))]
    edges = set()
    dedges = d.sorted_edges()
    for i, f in enumerate(verts):
        for j, h in enumerate(verts):
            img = f + h
            if all(g1.has_edge(img[u], img[v]) for u, v in dedges):
                edges.add((i, j))
    return Digraph(len(verts), frozenset(edges)), verts
