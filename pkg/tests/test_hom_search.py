from __future__ import annotations

import itertools

import pytest

from varkit.errors import NotApplicable
from varkit.hom_search import (HomProblem, classify_power_hom, enumerate_homomorphisms,
                               find_homomorphism, find_retraction, is_homomorphism)
from varkit.structures import (Digraph, VertexMap, decode_index, digraphs_up_to_iso,
                               make_c, make_c1, make_edge, power)

C = make_c()


def brute_force_homs(g: Digraph, h: Digraph) -> list[tuple]:
    return [img for img in itertools.product(range(h.vertex_count), repeat=g.vertex_count)
            if all(h.has_edge(img[u], img[v]) for u, v in g.edges)]


def test_is_homomorphism_examples():
    assert is_homomorphism(VertexMap.identity(3), C, C)
    assert is_homomorphism(VertexMap(9, 3, (0,) * 9), power(C, 2), C)
    assert not is_homomorphism(VertexMap(3, 3, (1, 0, 2)), C, C)


@pytest.mark.parametrize("k,count", [(1, 6), (2, 9), (3, 12)])
def test_power_homs_to_c(k, count):
    maps = enumerate_homomorphisms(HomProblem(power(C, k), C))
    assert len(maps) == count == 3 + 3 * k
    images = [f.image for f in maps]
    assert images == sorted(images)
    for f in maps:
        values = {decode_index(i, (3,) * k): f.image[i] for i in range(3 ** k)}
        if len(set(f.image)) > 1:
            # rotation after a projection
            assert any(all(v == (t[j] + c) % 3 for t, v in values.items())
                       for j in range(k) for c in range(3))


def test_enumeration_matches_brute_force_small():
    corpus = [g for n in range(1, 4) for g in digraphs_up_to_iso(n)][:60]
    for g in corpus[:25]:
        for h in corpus[::7]:
            got = [f.image for f in enumerate_homomorphisms(HomProblem(g, h))]
            assert got == brute_force_homs(g, h)


def test_limit_and_pins():
    assert len(enumerate_homomorphisms(HomProblem(C, C), limit=2)) == 2
    pinned = enumerate_homomorphisms(HomProblem(C, C, {0: 1, 1: 2}))
    assert [f.image for f in pinned] == [(1, 2, 0)]
    with pytest.raises(ValueError):
        HomProblem(C, C, {5: 0})


def test_find_homomorphism_none():
    # a reflexive target is never empty of homs; an edge without loops into an antichain is
    g = Digraph(2, frozenset({(0, 1)}))
    h = Digraph(2, frozenset())
    assert find_homomorphism(HomProblem(g, h)) is None


def test_retractions():
    r = find_retraction(make_c1(), {1, 2, 3})
    assert r is not None and set(r.image) == {1, 2, 3} and r.image[1:] == (1, 2, 3)
    assert find_retraction(C, {0}).image == (0, 0, 0)
    assert find_retraction(C, {0, 1}) is None


def test_classify_examples():
    first = VertexMap(9, 3, tuple(v // 3 for v in range(9)))
    res = classify_power_hom(first, 2, C)
    assert res.ok and res.coordinates == (0,) and res.iota.image == (0, 1, 2)
    const = VertexMap(9, 3, (1,) * 9)
    res = classify_power_hom(const, 2, C)
    assert res.ok and res.coordinates == () and res.iota.image == (1,)
    shifted = VertexMap(9, 3, tuple((v % 3 + 1) % 3 for v in range(9)))
    res = classify_power_hom(shifted, 2, C)
    assert res.ok and res.coordinates == (1,) and res.iota.image == (1, 2, 0)


def test_classify_rejects_bad_targets():
    sym = Digraph(2, frozenset({(0, 0), (1, 1), (0, 1), (1, 0)}))
    with pytest.raises(NotApplicable):
        classify_power_hom(VertexMap(3, 2, (0, 0, 0)), 1, sym)
    with pytest.raises(ValueError):
        classify_power_hom(VertexMap(3, 3, (1, 0, 2)), 1, C)


@pytest.mark.parametrize("k,m", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_power_homs_factor(k, m):
    target = power(C, m)
    for f in enumerate_homomorphisms(HomProblem(power(C, k), target)):
        assert classify_power_hom(f, k, target).ok


def test_edge_digraph_homs():
    assert len(enumerate_homomorphisms(HomProblem(make_edge(), make_edge()))) == 3
