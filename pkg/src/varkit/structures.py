"""Finite digraphs and the constructions performed on them.

Vertices are always ``0..n-1``.  Tuples of vertices (powers, products) are
encoded lexicographically with the first coordinate most significant, and
every module relies on that convention.
"""
from __future__ import annotations

import functools
import itertools
import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import CapExceeded

DEFAULT_MAX_SIZE = 10**7


def encode_tuple(values: Sequence[int], sizes: Sequence[int]) -> int:
    index = 0
    for v, s in zip(values, sizes):
        index = index * s + v
    return index


def decode_index(index: int, sizes: Sequence[int]) -> tuple[int, ...]:
    out = [0] * len(sizes)
    for pos in range(len(sizes) - 1, -1, -1):
        index, out[pos] = divmod(index, sizes[pos])
    return tuple(out)


@dataclass(frozen=True)
class Digraph:
    """A finite digraph on the vertices ``0..vertex_count-1``."""

    vertex_count: int
    edges: frozenset

    def __post_init__(self):
        if self.vertex_count < 0:
            raise ValueError("vertex_count must be non-negative")
        edges = self.edges
        if not isinstance(edges, frozenset):
            edges = list(edges)
            fs = frozenset((int(u), int(v)) for u, v in edges)
            if len(fs) != len(edges):
                raise ValueError("duplicate edge")
            object.__setattr__(self, "edges", fs)
        n = self.vertex_count
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge {(u, v)} out of range for {n} vertices")

    def __repr__(self):
        return f"Digraph({self.vertex_count}, {self.sorted_edges()})"

    @property
    def vertices(self) -> range:
        return range(self.vertex_count)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    @cached_property
    def out_lists(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in range(self.vertex_count)]
        for u, v in self.sorted_edges():
            out[u].append(v)
        return tuple(tuple(x) for x in out)

    @cached_property
    def in_lists(self) -> tuple[tuple[int, ...], ...]:
        inn = [[] for _ in range(self.vertex_count)]
        for u, v in self.sorted_edges():
            inn[v].append(u)
        return tuple(tuple(sorted(x)) for x in inn)

    @cached_property
    def out_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << v for v in vs) for vs in self.out_lists)

    @cached_property
    def in_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << u for u in us) for us in self.in_lists)

    @cached_property
    def loop_mask(self) -> int:
        return sum(1 << u for u in self.vertices if (u, u) in self.edges)

    def is_reflexive(self) -> bool:
        return all((u, u) in self.edges for u in self.vertices)

    def degree_signature(self) -> Counter:
        """Multiset of (out-degree, in-degree, has-loop) over all vertices."""
        return Counter(
            (len(self.out_lists[u]), len(self.in_lists[u]), (u, u) in self.edges)
            for u in self.vertices
        )

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        return {"vertices": self.vertex_count, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_json(cls, data: dict) -> "Digraph":
        if not isinstance(data, dict) or "vertices" not in data or "edges" not in data:
            raise ValueError('digraph JSON needs "vertices" and "edges"')
        n = data["vertices"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise ValueError('"vertices" must be a non-negative integer')
        pairs = []
        for e in data["edges"]:
            if (not isinstance(e, (list, tuple)) or len(e) != 2
                    or not all(isinstance(x, int) and not isinstance(x, bool) for x in e)):
                raise ValueError(f"malformed edge entry {e!r}")
            pairs.append((e[0], e[1]))
        return cls(n, pairs)

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "Digraph":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class VertexMap:
    """Total map from ``range(source_count)`` into ``range(target_count)``."""

    source_count: int
    target_count: int
    image: tuple

    def __post_init__(self):
        image = tuple(int(x) for x in self.image)
        object.__setattr__(self, "image", image)
        if len(image) != self.source_count:
            raise ValueError(f"image has length {len(image)}, expected {self.source_count}")
        for x in image:
            if not 0 <= x < self.target_count:
                raise ValueError(f"image entry {x} out of range {self.target_count}")

    def __call__(self, v: int) -> int:
        return self.image[v]

    def __len__(self):
        return self.source_count

    @classmethod
    def identity(cls, n: int) -> "VertexMap":
        return cls(n, n, tuple(range(n)))

    def compose(self, inner: "VertexMap") -> "VertexMap":
        """``self ∘ inner``."""
        if inner.target_count != self.source_count:
            raise ValueError("maps do not compose")
        return VertexMap(inner.source_count, self.target_count,
                         tuple(self.image[x] for x in inner.image))

    def is_bijection(self) -> bool:
        return self.source_count == self.target_count and len(set(self.image)) == self.source_count

    def inverse(self) -> "VertexMap":
        if not self.is_bijection():
            raise ValueError("map is not a bijection")
        inv = [0] * self.source_count
        for i, x in enumerate(self.image):
            inv[x] = i
        return VertexMap(self.target_count, self.source_count, tuple(inv))


@dataclass(frozen=True)
class Partition:
    """Equivalence relation stored as a block id per element.

    Block ids are normalized so that blocks are numbered in order of their
    least element.
    """

    universe_size: int
    block_of: tuple

    def __post_init__(self):
        labels = tuple(self.block_of)
        if len(labels) != self.universe_size:
            raise ValueError("block_of length does not match universe_size")
        renumber: dict = {}
        norm = tuple(renumber.setdefault(b, len(renumber)) for b in labels)
        object.__setattr__(self, "block_of", norm)

    @classmethod
    def discrete(cls, n: int) -> "Partition":
        return cls(n, tuple(range(n)))

    @classmethod
    def total(cls, n: int) -> "Partition":
        return cls(n, (0,) * n)

    @classmethod
    def from_blocks(cls, n: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        labels = [None] * n
        for b, block in enumerate(blocks):
            for x in block:
                if labels[x] is not None:
                    raise ValueError(f"element {x} in two blocks")
                labels[x] = b
        if None in labels:
            raise ValueError("blocks do not cover the universe")
        return cls(n, tuple(labels))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Partition":
        """Smallest equivalence containing the given pairs."""
        uf = UnionFind(n)
        for a, b in pairs:
            uf.union(a, b)
        return cls(n, tuple(uf.find(x) for x in range(n)))

    @property
    def block_count(self) -> int:
        return max(self.block_of) + 1 if self.universe_size else 0

    def blocks(self) -> list[list[int]]:
        out = [[] for _ in range(self.block_count)]
        for x, b in enumerate(self.block_of):
            out[b].append(x)
        return out

    def relates(self, a: int, b: int) -> bool:
        return self.block_of[a] == self.block_of[b]

    def is_discrete(self) -> bool:
        return self.block_count == self.universe_size

    def is_total(self) -> bool:
        return self.block_count <= 1

    def refines(self, other: "Partition") -> bool:
        """True iff every block of self lies inside a block of other."""
        seen: dict = {}
        for b, c in zip(self.block_of, other.block_of):
            if seen.setdefault(b, c) != c:
                return False
        return True

    def meet(self, other: "Partition") -> "Partition":
        return Partition(self.universe_size, tuple(zip(self.block_of, other.block_of)))

    def join(self, other: "Partition") -> "Partition":
        uf = UnionFind(self.universe_size)
        for part in (self, other):
            first: dict = {}
            for x, b in enumerate(part.block_of):
                uf.union(x, first.setdefault(b, x))
        return Partition(self.universe_size, tuple(uf.find(x) for x in range(self.universe_size)))


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        # smaller index stays the root so roots are class minima
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


# -- basic digraphs ------------------------------------------------------

def make_c() -> Digraph:
    """The reflexive directed triangle."""
    return Digraph(3, [(0, 1), (1, 2), (2, 0), (0, 0), (1, 1), (2, 2)])


def make_loop() -> Digraph:
    return Digraph(1, [(0, 0)])


def make_edge() -> Digraph:
    """Two vertices, both looped, and the edge 0 -> 1."""
    return Digraph(2, [(0, 0), (0, 1), (1, 1)])


def make_c1() -> Digraph:
    """A looped isolated vertex (vertex 0) next to a copy of the triangle."""
    return disjoint_union([make_loop(), make_c()])


# -- constructions -------------------------------------------------------

def _check_size(vertices: int, edges: int, max_size: int) -> None:
    if vertices > max_size or edges > max_size:
        raise CapExceeded(
            f"result would have {vertices} vertices and {edges} edges (cap {max_size})",
            reached=max(vertices, edges))


def product(gs: Sequence[Digraph], max_size: int = DEFAULT_MAX_SIZE) -> Digraph:
    """Categorical product, vertices encoded lexicographically."""
    if not gs:
        raise ValueError("product of an empty list; use power(g, 0) for the unit")
    n_total, e_total = 1, 1
    for g in gs:
        n_total *= g.vertex_count
        e_total *= len(g.edges)
    _check_size(n_total, e_total, max_size)
    n, edges = 1, [(0, 0)]
    for g in gs:
        m = g.vertex_count
        g_edges = g.sorted_edges()
        edges = [(u * m + a, v * m + b) for u, v in edges for a, b in g_edges]
        n *= m
    return Digraph(n, frozenset(edges))


def power(g: Digraph, k: int, max_size: int = DEFAULT_MAX_SIZE) -> Digraph:
    if k < 0:
        raise ValueError("exponent must be non-negative")
    if k == 0:
        return make_loop()
    return product([g] * k, max_size=max_size)


def disjoint_union(gs: Sequence[Digraph]) -> Digraph:
    offset, edges = 0, []
    for g in gs:
        edges.extend((u + offset, v + offset) for u, v in g.edges)
        offset += g.vertex_count
    return Digraph(offset, frozenset(edges))


def spanned_subdigraph(g: Digraph, s: Iterable[int]) -> tuple[Digraph, VertexMap]:
    """Induced subdigraph on ``s`` plus the inclusion map back into ``g``."""
    keep = sorted(set(s))
    for v in keep:
        if not 0 <= v < g.vertex_count:
            raise ValueError(f"vertex {v} out of range")
    index = {v: i for i, v in enumerate(keep)}
    edges = [(index[u], index[v]) for u, v in g.edges if u in index and v in index]
    sub = Digraph(len(keep), frozenset(edges))
    return sub, VertexMap(len(keep), g.vertex_count, tuple(keep))


def components(g: Digraph) -> list[list[int]]:
    """Weakly connected components, each sorted, ordered by least element."""
    uf = UnionFind(g.vertex_count)
    for u, v in g.edges:
        uf.union(u, v)
    groups: dict = {}
    for v in g.vertices:
        groups.setdefault(uf.find(v), []).append(v)
    return sorted(groups.values(), key=lambda c: c[0])


def is_connected(g: Digraph) -> bool:
    return len(components(g)) <= 1


def quotient(g: Digraph, p: Partition) -> Digraph:
    if p.universe_size != g.vertex_count:
        raise ValueError("partition universe does not match vertex count")
    b = p.block_of
    return Digraph(p.block_count, frozenset((b[u], b[v]) for u, v in g.edges))


def reverse(g: Digraph) -> Digraph:
    return Digraph(g.vertex_count, frozenset((v, u) for u, v in g.edges))


def relabel(g: Digraph, perm: Sequence[int]) -> Digraph:
    """Image of ``g`` under the bijection ``v -> perm[v]``."""
    return Digraph(g.vertex_count, frozenset((perm[u], perm[v]) for u, v in g.edges))


class StructurePredicates(NamedTuple):
    reflexive: bool
    antisymmetric: bool
    unique_triangle: bool


def structure_predicates(g: Digraph) -> StructurePredicates:
    edges = g.edges
    antisym = all(u == v or (v, u) not in edges for u, v in edges)
    unique = True
    for u, v in edges:
        if u == v:
            continue
        # third vertices w closing a directed triangle u -> v -> w -> u
        ws = [w for w in g.out_lists[v] if w != u and w != v and (w, u) in edges]
        if len(ws) > 1:
            unique = False
            break
    return StructurePredicates(g.is_reflexive(), antisym, unique)


# -- isomorphism ---------------------------------------------------------

def _refine(g: Digraph, h: Digraph, colors: list[int]) -> list[int]:
    """Joint colour refinement on the disjoint union of g and h."""
    n = g.vertex_count
    outs = list(g.out_lists) + [tuple(v + n for v in vs) for vs in h.out_lists]
    ins = list(g.in_lists) + [tuple(v + n for v in vs) for vs in h.in_lists]
    count = len(set(colors))
    while True:
        sigs = [
            (colors[v], tuple(sorted(colors[w] for w in outs[v])),
             tuple(sorted(colors[w] for w in ins[v])))
            for v in range(len(colors))
        ]
        table = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [table[s] for s in sigs]
        if len(table) == count:
            return new
        colors, count = new, len(table)


def _histograms_match(colors: list[int], n: int) -> bool:
    return Counter(colors[:n]) == Counter(colors[n:])


def is_isomorphic(g: Digraph, h: Digraph) -> VertexMap | None:
    """First isomorphism g -> h in lexicographic search order, or None.

    Source vertices are assigned in ascending order and candidate images are
    tried in ascending order; candidates are pruned with colour refinement
    after individualizing each assigned pair.
    """
    n = g.vertex_count
    if n != h.vertex_count or len(g.edges) != len(h.edges):
        return None
    if g.degree_signature() != h.degree_signature():
        return None
    if n == 0:
        return VertexMap(0, 0, ())
    start = [0] * (2 * n)
    for v in range(n):
        start[v] = (g.has_edge(v, v),)
        start[v + n] = (h.has_edge(v, v),)
    table = {c: i for i, c in enumerate(sorted(set(start)))}
    colors = _refine(g, h, [table[c] for c in start])
    if not _histograms_match(colors, n):
        return None

    mapping = [-1] * n
    used = [False] * n

    def consistent(v: int, w: int) -> bool:
        for u in range(v):
            x = mapping[u]
            if g.has_edge(v, u) != h.has_edge(w, x) or g.has_edge(u, v) != h.has_edge(x, w):
                return False
        return g.has_edge(v, v) == h.has_edge(w, w)

    def search(v: int, colors: list[int]) -> bool:
        if v == n:
            return True
        fresh = max(colors) + 1
        for w in range(n):
            if used[w] or colors[n + w] != colors[v] or not consistent(v, w):
                continue
            trial = list(colors)
            trial[v] = trial[n + w] = fresh
            refined = _refine(g, h, trial)
            if not _histograms_match(refined, n):
                continue
            mapping[v], used[w] = w, True
            if search(v + 1, refined):
                return True
            mapping[v], used[w] = -1, False
        return False

    if not search(0, colors):
        return None
    return VertexMap(n, n, tuple(mapping))


def is_homomorphism_map(f: VertexMap, g: Digraph, h: Digraph) -> bool:
    if f.source_count != g.vertex_count or f.target_count != h.vertex_count:
        raise ValueError("map dimensions do not match the digraphs")
    img = f.image
    return all((img[u], img[v]) in h.edges for u, v in g.edges)


def is_isomorphism_map(f: VertexMap, g: Digraph, h: Digraph) -> bool:
    if not f.is_bijection() or f.target_count != h.vertex_count:
        return False
    return is_homomorphism_map(f, g, h) and len(g.edges) == len(h.edges)


# -- small digraph enumeration ---------------------------------------------

def canonical_form(g: Digraph) -> tuple:
    """Lexicographically least sorted edge list over all relabelings."""
    n = g.vertex_count
    best = None
    for perm in itertools.permutations(range(n)):
        key = tuple(sorted((perm[u], perm[v]) for u, v in g.edges))
        if best is None or key < best:
            best = key
    return (n, best or ())


def digraphs_up_to_iso(n: int, *, edge_count: int | None = None,
                       loop_count: int | None = None,
                       reflexive: bool = False) -> list[Digraph]:
    """All digraphs on ``n`` vertices up to isomorphism, canonically ordered.

    Brute force over labeled digraphs; meant for n <= 4 (n = 5 is slow).
    """
    return list(_digraphs_up_to_iso(n, edge_count, loop_count, reflexive))


@functools.lru_cache(maxsize=256)
def _digraphs_up_to_iso(n, edge_count, loop_count, reflexive) -> tuple:
    if reflexive:
        loop_count = n
    loop_counts = [loop_count] if loop_count is not None else range(n + 1)
    off = [(u, v) for u in range(n) for v in range(n) if u != v]
    seen: dict = {}
    for lc in loop_counts:
        if edge_count is not None:
            rest = [edge_count - lc] if 0 <= edge_count - lc <= len(off) else []
        else:
            rest = range(len(off) + 1)
        # loops are chosen as a prefix: all loop patterns of size lc are
        # isomorphic modulo the off-diagonal choice, which ranges fully
        loops = [(u, u) for u in range(lc)]
        for k in rest:
            for chosen in itertools.combinations(off, k):
                g = Digraph(n, frozenset(loops + list(chosen)))
                key = canonical_form(g)
                if key not in seen:
                    seen[key] = Digraph(n, frozenset(key[1]))
    return tuple(seen[k] for k in sorted(seen))
