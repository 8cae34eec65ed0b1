"""Factor a digraph along a product or power decomposition polymorphism.

An idempotent f with f(f(row_1), ..., f(row_n)) = f(diagonal) splits a digraph
into the quotients by the relations nu_i; adding a cyclic shift g makes the
factors isomorphic, so the digraph is an n-th power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conditions import (OperationTable, check_identities, find_polymorphisms,
                         polymorphism_violation, power_decomposition,
                         product_decomposition)
from .errors import InvariantViolation
from .structures import (Digraph, Partition, VertexMap, decode_index,
                         digraphs_up_to_iso, encode_tuple, is_isomorphic,
                         power, product, quotient)

# largest n**(n*n) for which is_nth_power uses the generic polymorphism search
SEARCH_GROUNDING_LIMIT = 2_000


class DecompositionError(ValueError):
    """The supplied operations are not a decomposition of the digraph."""


@dataclass
class DecompositionWitness:
    n: int
    f: OperationTable
    g: OperationTable | None
    nus: list
    factors: list
    iso: VertexMap
    base: Digraph | None = None

    def __post_init__(self):
        if len(self.nus) != self.n or len(self.factors) != self.n:
            raise InvariantViolation("witness needs one relation and one factor per coordinate")
        if not self.iso.is_bijection():
            raise InvariantViolation("witness map is not a bijection")


def _fast_nus(f: OperationTable) -> list[np.ndarray]:
    """Relation matrices of the membership rule f(x,..,y at i,..,x) = x."""
    n, k = f.universe_size, f.arity
    vals = f.array
    xs = np.arange(n)
    rels = []
    for i in range(k):
        idx = np.zeros((n, n), dtype=np.int64)
        for j in range(k):
            col = xs[None, :] if j == i else xs[:, None]
            idx = idx * n + np.broadcast_to(col, (n, n))
        rels.append(vals[idx] == xs[:, None])
    return rels


def _as_partition(rel: np.ndarray) -> Partition | None:
    n = rel.shape[0]
    if not (rel.diagonal().all() and (rel == rel.T).all()):
        return None
    block_of = [-1] * n
    reps = []
    for x in range(n):
        for b, r in enumerate(reps):
            if rel[x, r]:
                block_of[x] = b
                break
        else:
            block_of[x] = len(reps)
            reps.append(x)
    p = Partition(n, tuple(block_of))
    closed = np.array([[p.relates(x, y) for y in range(n)] for x in range(n)], dtype=bool)
    return p if (closed == rel).all() else None


def existential_nus(f: OperationTable) -> list[np.ndarray]:
    """Relation matrices of the definition: equal values for some shared context."""
    n, k = f.universe_size, f.arity
    vals = f.array.reshape((n,) * k) if k else f.array
    rels = []
    for i in range(k):
        moved = np.moveaxis(vals, i, -1).reshape(-1, n)
        rel = np.zeros((n, n), dtype=bool)
        for row in moved:
            rel |= row[:, None] == row[None, :]
        rels.append(rel)
    return rels


def _direct_violation(a: Digraph, f: OperationTable) -> str:
    """Name a concrete broken requirement, checked directly where feasible."""
    n, k = a.vertex_count, f.arity
    if not f.is_idempotent():
        x = next(x for x in range(n) if f(*([x] * k)) != x)
        return f"idempotence fails at x={x}"
    if len(a.edges) ** k <= 10**7:
        bad = polymorphism_violation(f, a)
        if bad is not None:
            return f"edge tuple {bad} is not preserved"
    if n ** (k * k) <= 10**7:
        chk = check_identities({"f": f}, product_decomposition(k), n)
        if not chk.ok:
            return f"composition identity fails at {chk.assignment}"
    return ""


def check_product_decomposition(a: Digraph, f: OperationTable):
    """Return (nus, factors, phi) or raise DecompositionError naming the failure.

    f is a product decomposition polymorphism exactly when it is idempotent,
    the membership rule gives equivalences, phi: x -> (x/nu_i)_i is a
    bijection onto the product of quotients preserving edges both ways, and
    f agrees with phi^-1 applied to (x_1/nu_1, ..., x_k/nu_k).  This costs
    O(k*N^2 + N^k) instead of enumerating N^(k*k) assignments.
    """
    n, k = a.vertex_count, f.arity
    if f.universe_size != n:
        raise DecompositionError("operation and digraph universes differ")
    if k < 1:
        raise DecompositionError("arity must be at least 1")

    def fail(reason: str):
        detail = _direct_violation(a, f)
        raise DecompositionError(f"{reason}; {detail}" if detail else reason)

    if not f.is_idempotent():
        fail("not idempotent")
    nus = []
    for i, rel in enumerate(_fast_nus(f)):
        p = _as_partition(rel)
        if p is None:
            fail(f"relation nu_{i + 1} is not an equivalence")
        nus.append(p)
    sizes = tuple(p.block_count for p in nus)
    if math.prod(sizes) != n:
        fail("phi is not a bijection onto the product of quotients")
    phi_img = tuple(encode_tuple([p.block_of[x] for p in nus], sizes) for x in range(n))
    phi = VertexMap(n, n, phi_img)
    if not phi.is_bijection():
        fail("phi is not injective")
    inv = phi.inverse().image
    blocks = [np.asarray(p.block_of, dtype=np.int64) for p in nus]
    total = n ** k
    for start in range(0, total, 1 << 20):
        idx = np.arange(start, min(total, start + (1 << 20)), dtype=np.int64)
        rest, code = idx, np.zeros_like(idx)
        digits = []
        for _ in range(k):
            rest, d = np.divmod(rest, n)
            digits.append(d)
        digits.reverse()
        for i, d in enumerate(digits):
            code = code * sizes[i] + blocks[i][d]
        expected = np.asarray(inv, dtype=np.int64)[code]
        bad = np.nonzero(f.array[idx] != expected)[0]
        if len(bad):
            t = tuple(int(d[bad[0]]) for d in digits)
            fail(f"f{t} differs from the value forced by the quotients")
    factors = [quotient(a, p) for p in nus]
    prod = product(factors)
    for u in range(n):
        for v in range(n):
            if a.has_edge(u, v) != prod.has_edge(phi_img[u], phi_img[v]):
                fail(f"phi does not reflect edges at ({u},{v})")
    return nus, factors, phi


def nu_equivalences(a: Digraph, f: OperationTable, verify: bool = False) -> list[Partition]:
    """The relations nu_i via the one-witness membership rule.

    With ``verify`` the rule is compared against the existential definition
    over every context tuple.
    """
    nus, _, _ = check_product_decomposition(a, f)
    if verify:
        for i, rel in enumerate(existential_nus(f)):
            fast = np.array([[nus[i].relates(x, y) for y in range(a.vertex_count)]
                             for x in range(a.vertex_count)], dtype=bool)
            if not (fast == rel).all():
                x, y = map(int, np.argwhere(fast != rel)[0])
                raise InvariantViolation(f"nu_{i + 1}: membership rule and definition differ on ({x},{y})")
    return nus


def product_decompose(a: Digraph, f: OperationTable) -> DecompositionWitness:
    nus, factors, phi = check_product_decomposition(a, f)
    return DecompositionWitness(f.arity, f, None, nus, factors, phi)


def power_decompose(a: Digraph, f: OperationTable, g: OperationTable) -> DecompositionWitness:
    """Decompose with a shift g; the result carries base = a/nu_1 and a -> base^n."""
    n, k = a.vertex_count, f.arity
    if g.arity != 1 or g.universe_size != n:
        raise DecompositionError("g must be a unary operation on the same universe")
    nus, _, _ = check_product_decomposition(a, f)
    gv = g.values
    x = list(range(n))
    for _ in range(k):
        x = [gv[v] for v in x]
    if x != list(range(n)):
        raise DecompositionError(f"g^{k}(x) = x fails at x={next(v for v in range(n) if x[v] != v)}")
    gmap = VertexMap(n, n, gv)
    if not gmap.is_bijection() or polymorphism_violation(g, a) is not None or any(
            a.has_edge(gv[u], gv[v]) != a.has_edge(u, v) for u in range(n) for v in range(n)):
        raise DecompositionError("g is not an automorphism")
    garr = np.asarray(gv, dtype=np.int64)
    total = n ** k
    for start in range(0, total, 1 << 20):
        idx = np.arange(start, min(total, start + (1 << 20)), dtype=np.int64)
        digits, rest = [], idx
        for _ in range(k):
            rest, d = np.divmod(rest, n)
            digits.append(d)
        digits.reverse()
        rot = np.zeros_like(idx)
        for i in range(k):
            rot = rot * n + garr[digits[(i + 1) % k]]
        bad = np.nonzero(garr[f.array[idx]] != f.array[rot])[0]
        if len(bad):
            t = tuple(int(d[bad[0]]) for d in digits)
            raise DecompositionError(f"rotation identity fails at {t}")
    for i in range(k):
        prev = nus[(i - 1) % k]
        for u in range(n):
            for v in range(u + 1, n):
                if nus[i].relates(u, v) != prev.relates(gv[u], gv[v]):
                    raise InvariantViolation(f"g does not carry nu_{i + 1} onto nu_{(i - 1) % k + 1}")
    base = quotient(a, nus[0])
    m = base.vertex_count
    images = []
    for v in range(n):
        coords, w = [], v
        for _ in range(k):
            coords.append(nus[0].block_of[w])
            w = gv[w]
        images.append(encode_tuple(coords, (m,) * k))
    iso = VertexMap(n, m ** k, tuple(images))
    target = power(base, k)
    if not iso.is_bijection() or any(
            a.has_edge(u, v) != target.has_edge(images[u], images[v])
            for u in range(n) for v in range(n)):
        raise InvariantViolation("reconstructed map is not an isomorphism onto base^n")
    factors = [quotient(a, p) for p in nus]
    for fac in factors[1:]:
        if is_isomorphic(fac, factors[0]) is None:
            raise InvariantViolation("power factors are not pairwise isomorphic")
    return DecompositionWitness(k, f, g, nus, factors, iso, base)


def _int_root(value: int, n: int) -> int | None:
    r = round(value ** (1.0 / n)) if value else 0
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** n == value:
            return c
    return None


def _tables_from_iso(lam: VertexMap, m: int, n: int) -> tuple[OperationTable, OperationTable]:
    """Canonical f and shift g transported along lam: a -> base^n."""
    size = lam.source_count
    inv = np.asarray(lam.inverse().image, dtype=np.int64)
    sizes = (m,) * n
    coords = np.array([decode_index(lam.image[v], sizes) for v in range(size)],
                      dtype=np.int64).reshape(size, n)
    code = np.zeros(1, dtype=np.int64)
    for i in range(n):
        # lexicographic over argument tuples: earlier arguments vary slowest
        code = (code[:, None] * m + coords[:, i][None, :]).reshape(-1)
    fvals = inv[code]
    shifted = np.roll(coords, -1, axis=1)
    gcode = np.zeros(size, dtype=np.int64)
    for i in range(n):
        gcode = gcode * m + shifted[:, i]
    return (OperationTable(n, size, tuple(fvals.tolist())),
            OperationTable(1, size, tuple(inv[gcode].tolist())))


def _structural_power(a: Digraph, n: int) -> DecompositionWitness | None:
    m = _int_root(a.vertex_count, n)
    e = _int_root(len(a.edges), n)
    loops = _int_root(bin(a.loop_mask).count("1"), n)
    if m is None or e is None or loops is None:
        return None
    sig = a.degree_signature()
    for b in digraphs_up_to_iso(m, edge_count=e, loop_count=loops):
        bn = power(b, n)
        if bn.degree_signature() != sig:
            continue
        lam = is_isomorphic(a, bn)
        if lam is not None:
            f, g = _tables_from_iso(lam, m, n)
            return power_decompose(a, f, g)
    return None


def is_nth_power(a: Digraph, n: int, method: str = "auto",
                 max_nodes: int | None = None) -> DecompositionWitness | None:
    """Decide whether ``a`` is an n-th power; None certifies it is not.

    ``search`` runs the polymorphism search for the power decomposition
    condition.  ``structural`` enumerates candidate bases up to isomorphism
    and tests a against base^n; ``auto`` picks search only when the grounded
    condition is small.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if method not in ("auto", "search", "structural"):
        raise ValueError(f"unknown method {method!r}")
    size = a.vertex_count
    if size == 0:
        return None
    if method == "auto":
        method = "search" if size ** (n * n) <= SEARCH_GROUNDING_LIMIT else "structural"
    if method == "structural":
        return _structural_power(a, n)
    res = find_polymorphisms(a, power_decomposition(n), max_nodes=max_nodes)
    if not res.found:
        return None
    return power_decompose(a, res.tables["f"], res.tables["g"])


def direct_factorization(a: Digraph) -> tuple[Digraph, Digraph, VertexMap] | None:
    """A splitting a = b x c with both factors nontrivial, or None.

    Exhaustive over factor shapes up to isomorphism; desk scale only
    (factor sizes of at most 4 vertices).
    """
    size = a.vertex_count
    edges = len(a.edges)
    loops = bin(a.loop_mask).count("1")
    sig = a.degree_signature()
    for p in range(2, math.isqrt(size) + 1):
        if size % p:
            continue
        q = size // p
        if q > 4:
            raise ValueError("factor search limited to factors with at most 4 vertices")
        small = digraphs_up_to_iso(p)
        large = small if q == p else digraphs_up_to_iso(q)
        for b in small:
            eb, lb = len(b.edges), bin(b.loop_mask).count("1")
            if eb == 0 or edges % eb or (lb == 0 and loops) or (lb and loops % lb):
                continue
            for c in large:
                if eb * len(c.edges) != edges or lb * bin(c.loop_mask).count("1") != loops:
                    continue
                bc = product([b, c])
                if bc.degree_signature() != sig:
                    continue
                iso = is_isomorphic(a, bc)
                if iso is not None:
                    return b, c, iso
    return None


def is_directly_indecomposable(a: Digraph) -> bool:
    return a.vertex_count >= 2 and direct_factorization(a) is None
