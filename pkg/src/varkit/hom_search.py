"""Homomorphism search between finite digraphs.

Includes the classifier for homomorphisms out of powers of the reflexive
triangle: such a map factors as an isomorphism composed with a coordinate
projection whenever the target is antisymmetric and every non-loop edge lies
on at most one triangle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ._engine import Engine
from .errors import NotApplicable
from .structures import (Digraph, VertexMap, decode_index, encode_tuple,
                         is_homomorphism_map, make_c, power,
                         spanned_subdigraph, structure_predicates)


@dataclass(frozen=True)
class HomProblem:
    source: Digraph
    target: Digraph
    pins: dict = field(default_factory=dict)

    def __post_init__(self):
        pins = dict(self.pins)
        for v, w in pins.items():
            if not 0 <= v < self.source.vertex_count:
                raise ValueError(f"pinned vertex {v} not in source")
            if not 0 <= w < self.target.vertex_count:
                raise ValueError(f"pinned image {w} not in target")
        object.__setattr__(self, "pins", pins)


def is_homomorphism(f: VertexMap, g: Digraph, h: Digraph) -> bool:
    return is_homomorphism_map(f, g, h)


def _engine(p: HomProblem, domains: list[int] | None = None,
            max_nodes: int | None = None) -> Engine:
    src, tgt = p.source, p.target
    full = (1 << tgt.vertex_count) - 1
    if domains is None:
        domains = [full] * src.vertex_count
    for v, w in p.pins.items():
        domains[v] &= 1 << w
    return Engine(tgt, domains, src.out_lists.__getitem__, src.in_lists.__getitem__,
                  max_nodes=max_nodes)


def iter_homomorphisms(p: HomProblem, domains: list[int] | None = None,
                       max_nodes: int | None = None):
    src, tgt = p.source, p.target
    if src.vertex_count and not tgt.vertex_count:
        return
    engine = _engine(p, domains, max_nodes)
    for sol in engine.solutions():
        yield VertexMap(src.vertex_count, tgt.vertex_count, tuple(sol))


def enumerate_homomorphisms(p: HomProblem, limit: int | None = None,
                            max_nodes: int | None = None) -> list[VertexMap]:
    """All homomorphisms extending the pins, lexicographic in the image array."""
    out = []
    if limit is not None and limit <= 0:
        return out
    for f in iter_homomorphisms(p, max_nodes=max_nodes):
        out.append(f)
        if limit is not None and len(out) >= limit:
            break
    return out


def find_homomorphism(p: HomProblem) -> VertexMap | None:
    found = enumerate_homomorphisms(p, limit=1)
    return found[0] if found else None


def find_retraction(g: Digraph, sub) -> VertexMap | None:
    """Endomorphism of ``g`` fixing ``sub`` pointwise with image exactly ``sub``."""
    keep = sorted(set(sub))
    spanned_subdigraph(g, keep)  # range check
    mask = sum(1 << v for v in keep)
    domains = [mask] * g.vertex_count
    pins = {v: v for v in keep}
    if g.vertex_count and not keep:
        return None
    for f in iter_homomorphisms(HomProblem(g, g, pins), domains=domains):
        return f
    return None


# -- maps out of powers of the triangle ----------------------------------

@dataclass(frozen=True)
class PowerHomFactorization:
    """``f = iota ∘ π_J``; ``violation`` describes a failed check, if any."""

    coordinates: tuple
    iota: VertexMap
    violation: str | None = None

    @property
    def ok(self) -> bool:
        return self.violation is None


def depends_on(f: VertexMap, k: int, j: int, base: int = 3) -> bool:
    sizes = (base,) * k
    for idx in range(f.source_count):
        t = decode_index(idx, sizes)
        if t[j] != 0:
            continue
        for c in range(1, base):
            u = t[:j] + (c,) + t[j + 1:]
            if f.image[encode_tuple(u, sizes)] != f.image[idx]:
                return True
    return False


def classify_power_hom(f: VertexMap, k: int, h: Digraph) -> PowerHomFactorization:
    """Factor a homomorphism from the k-th power of the triangle into ``h``."""
    if f.source_count != 3**k or f.target_count != h.vertex_count:
        raise ValueError("map dimensions do not match C^k -> h")
    preds = structure_predicates(h)
    if not (preds.antisymmetric and preds.unique_triangle):
        raise NotApplicable("target must be antisymmetric with unique triangles on non-loop edges")
    ck = power(make_c(), k)
    if not is_homomorphism_map(f, ck, h):
        raise ValueError("f is not a homomorphism from C^k")

    J = tuple(j for j in range(k) if depends_on(f, k, j))
    sizes_k, sizes_j = (3,) * k, (3,) * len(J)
    img = []
    for t in itertools.product(range(3), repeat=len(J)):
        full = [0] * k
        for pos, j in enumerate(J):
            full[j] = t[pos]
        img.append(f.image[encode_tuple(full, sizes_k)])
    iota = VertexMap(3 ** len(J), h.vertex_count, tuple(img))

    for idx in range(f.source_count):
        t = decode_index(idx, sizes_k)
        if iota.image[encode_tuple([t[j] for j in J], sizes_j)] != f.image[idx]:
            return PowerHomFactorization(J, iota, f"f differs from iota∘π_J at {t}")
    if len(set(img)) != len(img):
        return PowerHomFactorization(J, iota, "iota is not injective")
    cj = power(make_c(), len(J))
    for a in range(len(img)):
        for b in range(len(img)):
            if h.has_edge(img[a], img[b]) != cj.has_edge(a, b):
                return PowerHomFactorization(
                    J, iota, f"edge mismatch between {decode_index(a, sizes_j)} and "
                             f"{decode_index(b, sizes_j)}")
    return PowerHomFactorization(J, iota)
