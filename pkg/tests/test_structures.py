from __future__ import annotations

import itertools
import json

import pytest
from hypothesis import given, settings, strategies as st

from varkit.errors import CapExceeded
from varkit.structures import (Digraph, Partition, VertexMap, canonical_form, components,
                               digraphs_up_to_iso, disjoint_union, is_connected,
                               is_isomorphic, is_isomorphism_map, make_c, make_c1,
                               make_edge, make_loop, power, product, quotient,
                               relabel, reverse, spanned_subdigraph,
                               structure_predicates)

C = make_c()


@st.composite
def digraphs(draw, max_n=4):
    n = draw(st.integers(0, max_n))
    pairs = [(u, v) for u in range(n) for v in range(n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Digraph(n, frozenset(chosen))


def test_make_c():
    assert C.vertex_count == 3
    assert C.edges == {(0, 1), (1, 2), (2, 0), (0, 0), (1, 1), (2, 2)}
    p = structure_predicates(C)
    assert p.reflexive and p.antisymmetric and p.unique_triangle


def test_digraph_validation():
    with pytest.raises(ValueError):
        Digraph(2, frozenset({(0, 2)}))
    with pytest.raises(ValueError):
        Digraph.from_json({"vertices": 2, "edges": [[0, 1], [0, 1]]})
    with pytest.raises(ValueError):
        Digraph.from_json({"vertices": 2, "edges": [[0, -1]]})


def test_json_round_trip(tmp_path):
    g = Digraph.from_json({"vertices": 3, "edges": [[2, 0], [0, 1]]})
    assert json.loads(g.dumps())["edges"] == [[0, 1], [2, 0]]
    path = tmp_path / "g.json"
    g.save(path)
    assert Digraph.load(path) == g


@pytest.mark.parametrize("k,vertices,edges", [(2, 9, 36), (0, 1, 1), (3, 27, 216)])
def test_power_counts(k, vertices, edges):
    g = power(C, k)
    assert (g.vertex_count, len(g.edges)) == (vertices, edges)


@settings(max_examples=40, deadline=None)
@given(digraphs(), st.integers(0, 3))
def test_power_edge_count(g, k):
    assert len(power(g, k).edges) == len(g.edges) ** k


def test_product_examples():
    assert product([C, C]) == power(C, 2)
    assert is_isomorphic(product([C, make_loop()]), C) is not None
    g = product([C, make_edge()])
    assert (g.vertex_count, len(g.edges)) == (6, 18)
    with pytest.raises(ValueError):
        product([])
    with pytest.raises(CapExceeded):
        power(C, 30, max_size=10**6)


def test_disjoint_union_examples():
    g = disjoint_union([C, C])
    assert (g.vertex_count, len(g.edges), len(components(g))) == (6, 12, 2)
    assert disjoint_union([make_loop(), C]) == make_c1()
    assert disjoint_union([]).vertex_count == 0


@settings(max_examples=30, deadline=None)
@given(st.lists(digraphs(3), max_size=3))
def test_union_components_add(gs):
    assert len(components(disjoint_union(gs))) == sum(len(components(g)) for g in gs)


def test_spanned_subdigraph():
    c1 = make_c1()
    sub, inc = spanned_subdigraph(c1, {0})
    assert sub == make_loop() and inc.image == (0,)
    sub, _ = spanned_subdigraph(c1, {1, 2, 3})
    assert is_isomorphic(sub, C) is not None
    diag, _ = spanned_subdigraph(power(C, 2), {0, 4, 8})
    assert is_isomorphic(diag, C) is not None
    with pytest.raises(ValueError):
        spanned_subdigraph(C, {5})


def test_components():
    assert len(components(power(C, 2))) == 1
    assert components(make_c1()) == [[0], [1, 2, 3]]
    assert len(components(disjoint_union([C, C, C]))) == 3


@pytest.mark.parametrize("gs", [[C, C], [C, make_edge()], [make_edge(), C, make_loop()]])
def test_connected_products(gs):
    assert is_connected(product(gs))


def test_quotient():
    kernel = Partition(9, tuple(v // 3 for v in range(9)))
    assert is_isomorphic(quotient(power(C, 2), kernel), C) is not None
    assert quotient(C, Partition.total(3)) == make_loop()
    assert quotient(C, Partition.discrete(3)) == C
    with pytest.raises(ValueError):
        quotient(C, Partition.discrete(2))


@settings(max_examples=40, deadline=None)
@given(digraphs())
def test_quotient_trivial_partitions(g):
    assert quotient(g, Partition.discrete(g.vertex_count)) == g
    if g.vertex_count and g.is_reflexive():
        assert quotient(g, Partition.total(g.vertex_count)) == make_loop()


def test_partition_normalisation():
    p = Partition(4, (3, 3, 1, 0))
    assert p.block_of == (0, 0, 1, 2)
    assert Partition.from_pairs(4, [(0, 3)]).blocks() == [[0, 3], [1], [2]]
    a, b = Partition.from_pairs(3, [(0, 1)]), Partition.from_pairs(3, [(1, 2)])
    assert a.join(b).is_total() and a.meet(b).is_discrete()


def test_isomorphism_examples():
    assert is_isomorphic(C, C).image == (0, 1, 2)
    assert is_isomorphic(C, reverse(C)).image == (0, 2, 1)
    assert is_isomorphic(C, make_c1()) is None


def test_isomorphism_is_an_equivalence_on_small_digraphs():
    corpus = [g for n in range(4) for g in digraphs_up_to_iso(n)]
    rng = [relabel(g, perm) for g in corpus[:40] for perm in itertools.permutations(range(g.vertex_count))][:200]
    for g in corpus:
        f = is_isomorphic(g, g)
        assert f is not None and is_isomorphism_map(f, g, g)
    for h in rng:
        for g in corpus:
            f = is_isomorphic(g, h)
            assert (f is not None) == (canonical_form(g) == canonical_form(h))
            if f is not None:
                assert is_isomorphism_map(f, g, h)
                back = is_isomorphic(h, g)
                assert back is not None and is_isomorphism_map(back, h, g)


@pytest.mark.parametrize("n,count", [(1, 2), (2, 10), (3, 104)])
def test_digraph_census(n, count):
    # counts of digraphs with loops allowed, up to isomorphism
    assert len(digraphs_up_to_iso(n)) == count


def test_structure_predicates():
    assert tuple(structure_predicates(power(C, 2))) == (True, True, True)
    two = Digraph(4, frozenset({(v, v) for v in range(4)} |
                               {(0, 1), (1, 2), (2, 0), (1, 3), (3, 0)}))
    assert not structure_predicates(two).unique_triangle


def test_vertex_map_algebra():
    f = VertexMap(3, 3, (1, 2, 0))
    assert f.compose(f.inverse()) == VertexMap.identity(3)
    with pytest.raises(ValueError):
        VertexMap(2, 2, (0, 2))
