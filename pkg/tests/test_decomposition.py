from __future__ import annotations

import numpy as np
import pytest

from varkit.conditions import OperationTable, check_identities, product_decomposition
from varkit.decomposition import (DecompositionError, check_product_decomposition,
                                  direct_factorization, existential_nus,
                                  is_directly_indecomposable, is_nth_power,
                                  nu_equivalences, power_decompose, product_decompose)
from varkit.structures import (Digraph, Partition, digraphs_up_to_iso, disjoint_union,
                               is_isomorphic, is_isomorphism_map, make_c, make_c1,
                               make_edge, make_loop, power, product)

C = make_c()
C2 = power(C, 2)


def canonical_f(m: int, n: int) -> OperationTable:
    """(b^1, .., b^n) -> (b^1_1, .., b^n_n) on the n-th power of an m-element set."""
    size = m ** n

    def f(*args):
        out = 0
        for i, a in enumerate(args):
            digit = (a // m ** (n - 1 - i)) % m
            out = out * m + digit
        return out

    return OperationTable.from_function(size, n, f)


def shift_g(m: int, n: int) -> OperationTable:
    size = m ** n

    def g(a):
        digits = [(a // m ** (n - 1 - i)) % m for i in range(n)]
        digits = digits[1:] + digits[:1]
        out = 0
        for d in digits:
            out = out * m + d
        return out

    return OperationTable.from_function(size, 1, g)


def test_canonical_f_satisfies_identities():
    assert check_identities({"f": canonical_f(3, 2)}, product_decomposition(2), 9).ok


def test_nu_examples():
    nus = nu_equivalences(C2, canonical_f(3, 2), verify=True)
    assert nus[0] == Partition(9, tuple(v // 3 for v in range(9)))
    assert nus[1] == Partition(9, tuple(v % 3 for v in range(9)))
    assert all(p.is_total() for p in nu_equivalences(make_loop(), OperationTable(3, 1, (0,))))
    proj = OperationTable.projection(9, 2, 0)
    nus = nu_equivalences(C2, proj, verify=True)
    assert nus[0].is_discrete() and nus[1].is_total()


def test_product_decompose_examples():
    w = product_decompose(C2, canonical_f(3, 2))
    assert all(is_isomorphic(f, C) for f in w.factors)
    assert w.iso.image == tuple(range(9))
    mixed = product([C, make_edge()])
    w = product_decompose(mixed, OperationTable.from_function(6, 2, lambda a, b: (a // 2) * 2 + b % 2))
    assert is_isomorphic(w.factors[0], C) and is_isomorphic(w.factors[1], make_edge())
    w = product_decompose(C2, OperationTable.projection(9, 2, 0))
    assert w.factors[0] == C2 and w.factors[1] == make_loop()


def test_bad_operations_are_rejected():
    second = OperationTable.projection(9, 2, 1)
    product_decompose(C2, second)
    constant = OperationTable(2, 9, (0,) * 81)
    with pytest.raises(DecompositionError, match="idempotence"):
        product_decompose(C2, constant)
    # idempotent but breaks the composition identity
    bad = OperationTable.from_function(3, 3, lambda x, y, z: x if x == y or x == z else y)
    with pytest.raises(DecompositionError):
        product_decompose(C, bad)


def test_factored_check_agrees_with_direct_check():
    rng = np.random.default_rng(7)
    corpus = [C, make_edge(), Digraph(2, frozenset({(0, 0), (1, 1)}))]
    for g in corpus:
        n = g.vertex_count
        for _ in range(200):
            vals = rng.integers(0, n, size=n * n)
            for x in range(n):
                vals[x * n + x] = x
            f = OperationTable(2, n, tuple(vals))
            direct = (check_identities({"f": f}, product_decomposition(2), n).ok
                      and f.is_idempotent())
            from varkit.conditions import is_polymorphism
            direct = direct and is_polymorphism(f, g)
            try:
                check_product_decomposition(g, f)
                factored = True
            except DecompositionError:
                factored = False
            assert factored == direct


def test_existential_rule_on_corpus():
    for m, n in [(2, 2), (3, 2), (2, 3)]:
        f = canonical_f(m, n)
        fast = nu_equivalences(power(make_edge() if m == 2 else C, n), f)
        for i, rel in enumerate(existential_nus(f)):
            assert (rel == np.array([[fast[i].relates(x, y) for y in range(m ** n)]
                                     for x in range(m ** n)])).all()


def test_power_decompose_examples():
    w = power_decompose(C2, canonical_f(3, 2), shift_g(3, 2))
    assert is_isomorphic(w.base, C)
    assert is_isomorphism_map(w.iso, C2, power(w.base, 2))
    point = power_decompose(make_loop(), OperationTable(2, 1, (0,)), OperationTable(1, 1, (0,)))
    assert point.base == make_loop()
    c1sq = power(make_c1(), 2)
    w = power_decompose(c1sq, canonical_f(4, 2), shift_g(4, 2))
    assert is_isomorphic(w.base, make_c1())


def test_power_decompose_rejects_bad_shift():
    with pytest.raises(DecompositionError):
        power_decompose(C2, canonical_f(3, 2), OperationTable(1, 9, tuple(range(9))))


@pytest.mark.parametrize("method", ["search", "structural"])
def test_is_nth_power_examples(method):
    w = is_nth_power(C2, 2, method=method)
    assert w is not None and is_isomorphic(w.base, C)
    assert is_nth_power(make_loop(), 5, method=method).base == make_loop()


@pytest.mark.parametrize("g", [disjoint_union([C, C]), disjoint_union([C, make_loop()]),
                               disjoint_union([C, C, C])])
def test_non_powers(g):
    assert is_nth_power(g, 2, method="search") is None
    assert is_nth_power(g, 2, method="structural") is None


@pytest.mark.parametrize("b", [g for n in range(1, 3) for g in digraphs_up_to_iso(n, reflexive=True)]
                         + [C, make_c1()])
def test_search_and_structural_agree(b):
    a = power(b, 2)
    s = is_nth_power(a, 2, method="search")
    t = is_nth_power(a, 2, method="structural")
    assert s is not None and t is not None
    assert is_isomorphic(power(s.base, 2), power(t.base, 2))


def test_direct_indecomposability():
    assert is_directly_indecomposable(C)
    assert not is_directly_indecomposable(C2)
    b, c, iso = direct_factorization(product([C, make_edge()]))
    assert {b.vertex_count, c.vertex_count} == {2, 3}
    assert not is_directly_indecomposable(make_loop())
