from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PRUEFER_2, PRUEFER_Q, Z, Z2, Z9_Z2, elements, group
from inertlab.errors import AmbientMismatchError, NotContainedError
from inertlab.groups import CYCLIC, CYCLIC_OMEGA, FREE_Z, INFINITY
from inertlab.lattice import (commensurable, index, intersection, is_pure, is_subgroup, lattice_ops,
                              quotient_order, span, subgroup_from_json, subgroup_sum)


def z(n):
    return Z.element({(0, 0): n})


def z2(a, b):
    return Z2.element({(0, 0): a, (1, 0): b})


def pr(q):
    return PRUEFER_2.element({(0, 0): q})


def test_span_diagonal_lattice_has_index_6():
    H = span(Z2, [z2(2, 0), z2(0, 3)])
    assert index(H, span(Z2, [z2(1, 0), z2(0, 1)])) == 6


def test_span_in_pruefer_is_a_layer():
    H = span(PRUEFER_2, [pr(Fraction(1, 8))])
    assert H.order() == 8
    assert H.contains(pr(Fraction(3, 4)))
    assert not H.contains(pr(Fraction(1, 16)))


def test_empty_span_is_zero():
    H = span(Z2, [])
    assert H.order() == 1
    assert H.rank == 0


def test_lattice_ops_in_z():
    ops = lattice_ops(span(Z, [z(2)]), span(Z, [z(3)]))
    assert ops['sum'].same_as(span(Z, [z(1)]))
    assert ops['intersection'].same_as(span(Z, [z(6)]))


def test_lattice_ops_in_z_squared():
    ops = lattice_ops(span(Z2, [z2(1, 0)]), span(Z2, [z2(1, 1)]))
    assert ops['sum'].same_as(span(Z2, [z2(1, 0), z2(0, 1)]))
    assert ops['intersection'].order() == 1


def test_lattice_ops_in_pruefer():
    H, K = span(PRUEFER_2, [pr(Fraction(1, 4))]), span(PRUEFER_2, [pr(Fraction(1, 8))])
    assert subgroup_sum(H, K).same_as(K)
    assert intersection(H, K).same_as(H)


def test_index_examples():
    assert index(span(Z, [z(6)]), span(Z, [z(2)])) == 3
    assert index(span(Z, []), span(Z, [z(1)])) == INFINITY
    assert index(span(Z2, [z2(2, 0), z2(0, 2)]), span(Z2, [z2(1, 0), z2(0, 1)])) == 4


def test_index_requires_containment():
    with pytest.raises(NotContainedError):
        index(span(Z, [z(2)]), span(Z, [z(3)]))


def test_commensurable_examples():
    assert commensurable(span(Z, [z(2)]), span(Z, [z(3)]))
    assert not commensurable(span(Z2, [z2(1, 0)]), span(Z2, [z2(0, 1)]))
    assert not commensurable(span(Z2, [z2(1, 0), z2(0, 2)]), span(Z2, [z2(1, 1)]))


def test_quotient_order_for_pruefer():
    H = span(PRUEFER_2, [pr(Fraction(1, 2))])
    K = span(PRUEFER_2, [pr(Fraction(1, 16))])
    assert quotient_order(H, K) == 8


def test_subgroups_of_different_groups_do_not_mix():
    with pytest.raises(AmbientMismatchError):
        subgroup_sum(span(Z, []), span(Z2, []))


def test_subgroup_from_json():
    H = subgroup_from_json(Z2, {'generators': [{'coords': [{'atom': 0, 'value': 2}]},
                                               {'coords': [{'atom': 1, 'value': '3'}]}]})
    assert H.same_as(span(Z2, [z2(2, 0), z2(0, 3)]))


def test_purity_in_finite_groups():
    B = group((CYCLIC, 2, 2), (CYCLIC, 2, 1))
    W = span(B, [B.element({(0, 0): 1}), B.element({(1, 0): 1})])
    assert is_pure(span(B, [B.element({(0, 0): 1})], W.window), W)
    assert not is_pure(span(B, [B.element({(0, 0): 2})], W.window), W)


def test_omega_copies_outside_the_window():
    B = group((CYCLIC_OMEGA, 2, 1))
    H = span(B, [B.element({(0, 0): 1, (0, 1): 1})])
    assert H.contains(B.element({(0, 0): 1, (0, 1): 1}))
    assert not H.contains(B.element({(0, 5): 1}))


@settings(max_examples=40, derandomize=True)
@given(st.lists(elements(Z9_Z2), max_size=3), st.lists(elements(Z9_Z2), max_size=3))
def test_intersection_and_sum_bound_both_subgroups(gens_h, gens_k):
    H, K = span(Z9_Z2, gens_h), span(Z9_Z2, gens_k)
    meet, total = intersection(H, K), subgroup_sum(H, K)
    assert is_subgroup(meet, H) and is_subgroup(meet, K)
    assert is_subgroup(H, total) and is_subgroup(K, total)
    for g in gens_h:
        assert total.contains(g)


@settings(max_examples=40, derandomize=True)
@given(st.lists(elements(Z9_Z2), min_size=1, max_size=3))
def test_index_is_multiplicative_along_a_chain(gens):
    H = span(Z9_Z2, gens)
    H3 = H.multiple(3)
    H9 = H.multiple(9)
    a, b = index(H9, H3), index(H3, H)
    if a != INFINITY and b != INFINITY:
        assert index(H9, H) == a * b


Z4_Z = group((CYCLIC, 2, 2), (FREE_Z,))


@settings(max_examples=40, derandomize=True)
@given(st.lists(elements(PRUEFER_Q[2]), max_size=3), st.lists(elements(PRUEFER_Q[2]), max_size=2),
       st.integers(1, 3))
def test_deeper_window_keeps_index_and_identity(gens_h, gens_k, extra):
    H = span(PRUEFER_Q[2], gens_h)
    K = span(PRUEFER_Q[2], gens_h + gens_k)
    deeper = H.in_window(H.window.enlarged(extra))
    assert deeper.window == H.window.enlarged(extra)
    assert deeper.same_as(H)
    assert index(deeper, K) == index(H, K)


@settings(max_examples=40, derandomize=True)
@given(st.lists(elements(Z4_Z), max_size=2), st.lists(elements(Z4_Z), max_size=2),
       st.lists(elements(Z4_Z), max_size=2))
def test_commensurability_is_an_equivalence(gens_h, gens_k, gens_l):
    H, K, L = span(Z4_Z, gens_h), span(Z4_Z, gens_k), span(Z4_Z, gens_l)
    assert commensurable(H, H)
    assert commensurable(H, K) == commensurable(K, H)
    if commensurable(H, K) and commensurable(K, L):
        assert commensurable(H, L)


@settings(max_examples=40, derandomize=True)
@given(st.lists(elements(Z9_Z2), max_size=3), st.lists(st.integers(0, 8), max_size=2))
def test_adding_a_finite_subgroup_stays_commensurable(gens, torsion):
    H = span(Z9_Z2, gens)
    F = span(Z9_Z2, [Z9_Z2.element({(0, 0): t}) for t in torsion])
    assert F.is_finite
    assert commensurable(H, subgroup_sum(H, F))
