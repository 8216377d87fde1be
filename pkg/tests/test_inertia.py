import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CRITICAL_2, OMEGA_Z, PRUEFER_Q, Q2, Z3_Q3, group
from inertlab.autos import BlockSum, Identity, Negation, PAdicRat, RatMult, compile_expr, validate
from inertlab.decomp import gamma_p
from inertlab.groups import (CYCLIC, CYCLIC_OMEGA, FREE_Z, FREE_Z_OMEGA, LOCALIZED_Q, PRUEFER, Atom,
                             GroupDescriptor)
from inertlab.inertia import (FINITE_GROUP, INERTIAL, MULTIPLICATION, NOT_INERTIAL, RECALLS_2, RECALLS_4, check,
                              corpus, inertia_falsify, is_almost_power, is_inertial, quotient_is_infinite)
from inertlab.lattice import span


def test_unit_on_pruefer_and_two_on_localized_is_not_inertial():
    gamma = BlockSum.of({1: RatMult(2, 1)})
    verdict = is_inertial(gamma, PRUEFER_Q[2])
    assert verdict.status == NOT_INERTIAL
    assert verdict.case == RECALLS_2
    assert 'unbounded' in verdict.violated


def test_gamma_3_is_inertial():
    verdict = is_inertial(gamma_p(Z3_Q3, 3), Z3_Q3)
    assert verdict.status == INERTIAL
    assert verdict.case == RECALLS_2
    assert verdict.certificate['pi'] == [3]


def test_every_automorphism_of_a_finite_group_is_inertial():
    A = group((CYCLIC, 2, 3), (CYCLIC, 2, 1))
    verdict = is_inertial(Negation(), A)
    assert verdict.inertial
    assert verdict.case == FINITE_GROUP


def test_rational_multiplication_is_inertial():
    verdict = is_inertial(RatMult(1, 2), Q2)
    assert verdict.inertial
    assert verdict.case == MULTIPLICATION
    assert verdict.certificate['multiplier']['rational'] == '1/2'


def test_critical_group_with_separate_units():
    gamma = BlockSum.of({0: PAdicRat(2, 3, 1), 1: PAdicRat(2, 5, 1)})
    verdict = is_inertial(gamma, CRITICAL_2)
    assert verdict.inertial
    assert verdict.case == RECALLS_4
    assert verdict.certificate['critical']


def test_falsifier_finds_nothing_for_inertial_maps():
    assert inertia_falsify(Identity(), PRUEFER_Q[2], trials=50, seed=0).witness is None
    A = group((PRUEFER, 2), (CYCLIC, 2, 2))
    found = inertia_falsify(RatMult(3, 1), A, trials=50, seed=0)
    assert found.witness is None
    assert found.trials == 50


def test_falsifier_skips_finite_groups():
    found = inertia_falsify(Negation(), group((CYCLIC, 3, 1)), trials=10, seed=3)
    assert found.witness is None
    assert found.trials == 0


def test_check_attaches_a_counterwitness():
    A = group((LOCALIZED_Q, 2), (LOCALIZED_Q, 3))
    gamma = BlockSum.of({0: RatMult(2, 1)})
    verdict = check(gamma, A, trials=200, seed=0)
    assert verdict.status == NOT_INERTIAL
    assert verdict.counterwitness is not None
    assert verdict.counterwitness.rank == 1


def test_almost_power_examples():
    assert is_almost_power(Negation(), OMEGA_Z) is True
    assert is_almost_power(gamma_p(Z3_Q3, 3), Z3_Q3) is True
    A = group((FREE_Z_OMEGA,), (LOCALIZED_Q, 2))
    assert is_almost_power(BlockSum.of({1: RatMult(2, 1)}), A) is False


def test_corpus_is_deterministic_and_valid():
    first = list(corpus(CRITICAL_2, seed=4, size=15))
    assert first == list(corpus(CRITICAL_2, seed=4, size=15))
    assert len(first) == 15
    assert all(validate(expr, CRITICAL_2).valid for expr in first)




def unit_blocks(atom):
    if atom.is_torsion:
        return st.sampled_from([PAdicRat(atom.p, u, 1) for u in range(1, 8) if u % atom.p])
    if atom.kind == LOCALIZED_Q:
        return st.sampled_from([Identity(), Negation(), RatMult(atom.p, 1), RatMult(1, atom.p)])
    return st.sampled_from([Identity(), Negation()])


@settings(max_examples=60, derandomize=True, deadline=None)
@given(st.sampled_from([
    Q2,
    PRUEFER_Q[2],
    PRUEFER_Q[3],
    CRITICAL_2,
    Z3_Q3,
    group((PRUEFER, 3), (CYCLIC_OMEGA, 3, 1)),
    group((FREE_Z_OMEGA,), (LOCALIZED_Q, 2)),
]), st.data())
def test_a_finite_summand_keeps_the_verdict(A, data):
    expr = BlockSum.of({i: data.draw(unit_blocks(atom)) for i, atom in enumerate(A.atoms)})
    wider = GroupDescriptor(A.atoms + (Atom(CYCLIC, 7, 1),))
    assert is_inertial(expr, wider).inertial == is_inertial(expr, A).inertial


@settings(max_examples=10, derandomize=True, deadline=None)
@given(st.integers(0, 1000))
def test_no_subgroup_of_a_finite_group_is_a_witness(seed):
    A = group((CYCLIC, 2, 2), (CYCLIC, 2, 1))
    everything = span(A, [A.generator((0, 0)), A.generator((1, 0))]).elements()
    for expr in corpus(A, seed=seed, size=6):
        nf = compile_expr(expr, A)
        assert is_inertial(expr, A).case == FINITE_GROUP
        for g in everything:
            for h in everything:
                assert not quotient_is_infinite(nf, span(A, [g, h]))


def sweep_descriptors(seed, count):
    """Distinct descriptors drawn from the families the dispatcher separates."""
    rng = random.Random(seed)
    families = [
        lambda p: ((PRUEFER, p), (LOCALIZED_Q, p)),
        lambda p: ((PRUEFER, p), (CYCLIC_OMEGA, p, rng.randint(1, 2))),
        lambda p: ((CYCLIC_OMEGA, p, rng.randint(1, 2)), (CYCLIC, p, rng.randint(1, 3))),
        lambda p: ((FREE_Z,),),
        lambda p: ((LOCALIZED_Q, p),),
        lambda p: ((CYCLIC, p, rng.randint(1, 2)), (LOCALIZED_Q, p)),
        lambda p: ((PRUEFER, p), (FREE_Z,)),
        lambda p: ((PRUEFER, p), (CYCLIC, 7, 1)),
        lambda p: ((FREE_Z_OMEGA,), (CYCLIC, p, 1)),
    ]
    found = []
    while len(found) < count:
        A = group(*rng.choice(families)(rng.choice((2, 3, 5))))
        if A not in found:
            found.append(A)
    return found


def falsifier_sweep(descriptors, size, trials):
    checked = 0
    for A in descriptors:
        for expr in corpus(A, seed=0, size=size):
            checked += 1
            if is_inertial(expr, A).inertial:
                assert inertia_falsify(expr, A, trials=trials, seed=1).witness is None, (A.label(), expr.label())
    return checked


def test_certified_automorphisms_survive_the_falsifier():
    assert falsifier_sweep(sweep_descriptors(seed=0, count=6), size=8, trials=30) == 48


@pytest.mark.slow
def test_certified_automorphisms_survive_the_full_falsifier_sweep():
    descriptors = sweep_descriptors(seed=0, count=24)
    assert len(set(descriptors)) == 24
    assert falsifier_sweep(descriptors, size=25, trials=200) >= 500
