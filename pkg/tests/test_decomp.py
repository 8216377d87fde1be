from fractions import Fraction

import pytest

from conftest import CRITICAL_2, PRUEFER3_Z, PRUEFER_Q, Z, Z3_Q3, Z8_OMEGA4, group
from inertlab.autos import (DIVISIBLE, TORSION, BlockSum, Composite, HomData, Identity, Negation, OnePlusHom,
                            PAdicRat, Part, RatMult, conjugate, equal, is_finitary, power)
from inertlab.decomp import (COUNTEREXAMPLE, FAUT_CRITICAL, FC_CENTER, PROP51_CRIT, PROP51_NONCRIT,
                             THEOREM_C_BOUNDED_T, THEOREM_C_FG_QUOTIENT, centralizer_check,
                             counterexample_witness, delta, factor_periodic, fc_center_witness, gamma_p, ki_check,
                             non_finitary_conjugation_witness, non_nilpotency_witness, periodic_decompose,
                             pgroup_decompose, q_generators, q_is_free, split_bounded, theoremB_factor,
                             stability_choices, theoremC_split, unit_generators)
from inertlab.errors import HypothesisError
from inertlab.groups import CYCLIC, CYCLIC_OMEGA, FREE_Z, FREE_Z_OMEGA, LOCALIZED_Q, PRUEFER
from inertlab.lattice import span


def test_split_with_a_diagonal_kernel():
    B = group((CYCLIC_OMEGA, 2, 1))
    e = [B.generator((0, c)) for c in range(4)]
    split = split_bounded(B, span(B, [e[0] + e[1]] + e[2:]), 4)
    assert split.passed
    assert split.order_B2 == 2


def test_split_of_the_whole_window():
    B = group((CYCLIC_OMEGA, 2, 1))
    split = split_bounded(B, span(B, [B.generator((0, c)) for c in range(3)]), 3)
    assert split.order_B2 == 1


def test_split_when_b0_is_not_pure():
    F = group((CYCLIC, 2, 2), (CYCLIC, 2, 1))
    split = split_bounded(F, span(F, [F.element({(0, 0): 2})]), 2)
    assert split.passed
    assert split.B1.order() * split.order_B2 == 8


def test_split_needs_a_bounded_group():
    with pytest.raises(HypothesisError):
        split_bounded(PRUEFER_Q[2], span(PRUEFER_Q[2], []))


def test_gamma_p_on_localized_summand():
    assert gamma_p(Z3_Q3, 3) == BlockSum.of({1: RatMult(3, 1)})
    assert q_generators(Z3_Q3) == [gamma_p(Z3_Q3, 3), Negation()]
    assert q_is_free(Z3_Q3).passed


def test_gamma_p_hypotheses():
    with pytest.raises(HypothesisError):
        gamma_p(PRUEFER_Q[2], 2)
    with pytest.raises(HypothesisError):
        gamma_p(group((CYCLIC, 3, 1)), 3)
    assert [g.label() for g in q_generators(Z)] == ['-1']


def test_theorem_b_factors_a_mixed_automorphism():
    gamma = BlockSum.of({0: PAdicRat(3, 2, 1), 1: RatMult(3, 1)})
    factors = theoremB_factor(gamma, Z3_Q3)
    assert factors.passed
    assert factors.exponents == {3: 1}
    assert equal(factors.gamma0, gamma_p(Z3_Q3, 3), Z3_Q3)
    assert equal(factors.gamma1, BlockSum.of({0: PAdicRat(3, 2, 1)}), Z3_Q3)


def test_theorem_b_square_and_negation():
    square = theoremB_factor(power(gamma_p(Z3_Q3, 3), 2), Z3_Q3)
    assert square.exponents == {3: 2}
    assert equal(square.gamma1, Identity(), Z3_Q3)
    negated = theoremB_factor(Negation(), Z)
    assert negated.multiplier == -1
    assert equal(negated.gamma0, Negation(), Z)


def test_theorem_b_rejects_non_inertial_maps():
    with pytest.raises(HypothesisError):
        theoremB_factor(BlockSum.of({1: RatMult(2, 1)}), PRUEFER_Q[2])


@pytest.mark.parametrize('p, m, expected', [
    (2, 1, []),
    (2, 2, [3]),
    (2, 3, [7, 5]),
    (3, 2, [2]),
])
def test_unit_generators(p, m, expected):
    assert unit_generators(p, m) == expected


def test_noncritical_pgroup_counts():
    cert = pgroup_decompose(Z8_OMEGA4, 3)
    assert cert.tag == PROP51_NONCRIT
    assert cert.numbers['PAut_n_FAut'] == 2
    assert cert.numbers['finitary_units'] == [1, 5]
    assert cert.passed


def test_pgroup_counts_for_finite_and_divisible_groups():
    assert pgroup_decompose(group((CYCLIC, 3, 2)), 2).numbers['PAut_n_FAut'] == 6
    cert = pgroup_decompose(group((PRUEFER, 3)), 2)
    assert cert.numbers['PAut_n_FAut'] == 1
    assert cert.families['FAut'] == []


def test_pgroup_decompose_needs_one_prime():
    with pytest.raises(HypothesisError):
        pgroup_decompose(group((CYCLIC, 2, 1), (CYCLIC, 3, 1)))


def test_critical_pgroup_certificate():
    cert = pgroup_decompose(CRITICAL_2, 2)
    assert cert.tag == PROP51_CRIT
    assert cert.numbers["m'"] == 2
    assert cert.numbers["e'"] == 2
    assert cert.numbers['FAut_n_Delta'] == 1
    assert cert.passed


@pytest.mark.parametrize('n', [3, 5, 7])
def test_delta_acts_on_sigma_by_powers(n):
    cert = pgroup_decompose(CRITICAL_2, 2)
    for sigma in cert.families['Sigma']:
        result = conjugate(sigma, delta(CRITICAL_2, 2, n), CRITICAL_2, Part(DIVISIBLE))
        # n^-1 = n mod 4
        assert equal(result.expr, power(sigma, n), CRITICAL_2)
        assert result.module_agrees


def test_factor_periodic_on_a_critical_group():
    gamma = BlockSum.of({0: PAdicRat(2, 3, 1), 1: PAdicRat(2, 5, 1)})
    cert = factor_periodic(gamma, CRITICAL_2)
    assert cert.passed
    assert cert.families['alpha'] == [PAdicRat(2, 3, 1)]
    assert cert.families['delta'] == [BlockSum.of({1: PAdicRat(2, 3, 1)})]
    assert is_finitary(cert.families['phi'][0], CRITICAL_2).value


def test_periodic_decompose_finite_group():
    cert = periodic_decompose(group((CYCLIC, 2, 1), (CYCLIC, 3, 2)), 2, samples=3, seed=0)
    assert cert.numbers['pi'] == [2, 3]
    assert cert.families['Delta'] == []
    assert cert.passed


def test_periodic_decompose_with_a_critical_prime():
    A = group((PRUEFER, 2), (CYCLIC_OMEGA, 2, 2), (CYCLIC, 3, 1))
    cert = periodic_decompose(A, 2, samples=3, seed=0)
    assert cert.numbers['critical'] == [2]
    assert cert.families['Delta']
    assert cert.passed


def test_centralizer_check():
    cert = centralizer_check(CRITICAL_2, 2, samples=6, seed=0)
    assert cert.tag == FAUT_CRITICAL
    assert cert.passed
    with pytest.raises(HypothesisError):
        centralizer_check(Z8_OMEGA4)


def test_theorem_c_finitely_generated_quotient():
    A = group((CYCLIC, 2, 2), (CYCLIC, 3, 1), (FREE_Z,))
    cert = theoremC_split(A, 2, n_max=2)
    assert cert.tag == THEOREM_C_FG_QUOTIENT
    assert cert.numbers['faithful']


def test_theorem_c_kernel_on_localized_quotient():
    A = group((CYCLIC, 2, 2), (CYCLIC, 3, 1), (LOCALIZED_Q, 2))
    cert = theoremC_split(A, 2, n_max=2)
    assert cert.tag == THEOREM_C_BOUNDED_T
    assert cert.numbers['Sigma'] == 'Z(3)'
    assert cert.numbers['faithful'] is False
    assert cert.passed


def test_theorem_c_with_pruefer_torsion():
    cert = theoremC_split(PRUEFER3_Z, 2, n_max=3)
    assert cert.tag == THEOREM_C_FG_QUOTIENT
    assert cert.numbers['faithful']
    assert cert.passed


def test_theorem_c_smallest_case():
    A = group((CYCLIC, 2, 1), (FREE_Z,))
    cert = theoremC_split(A, 2, n_max=1)
    assert cert.numbers['Sigma'] == 'Z(2)'
    assert len(cert.families['Sigma']) == 1
    assert cert.families['Gamma1'] == []


def test_theorem_c_hypotheses():
    with pytest.raises(HypothesisError):
        theoremC_split(CRITICAL_2)
    with pytest.raises(HypothesisError):
        theoremC_split(PRUEFER_Q[2])


def test_ki_check():
    A = group((PRUEFER, 5), (FREE_Z,))
    sigma = OnePlusHom(HomData.of(A, Part(TORSION), {(1, 0): A.element({(0, 0): Fraction(1, 5)})}))
    cert = ki_check([PAdicRat(5, 2, 1), sigma], A, 3)
    assert cert.passed
    assert len(cert.families['commutators']) == 1
    assert ki_check([Identity()], A).families['commutators'] == []
    with pytest.raises(HypothesisError):
        ki_check([Negation()], A)


@pytest.mark.parametrize('cutoff', [2, 5, 13])
def test_counterexample_coordinates(cutoff):
    cert = counterexample_witness(cutoff)
    assert cert.tag == COUNTEREXAMPLE
    assert cert.passed
    assert cert.out_of_scope


@pytest.mark.parametrize('p', [2, 3, 5])
def test_stability_choices_count_homomorphisms_into_the_p_part(p):
    primes = [2, 3, 5, 7]
    assert stability_choices(p, primes) == p
    assert stability_choices(p * p, primes) == p * p
    cert = counterexample_witness(7)
    sigma = next(item for item in cert.checklist if item.name == f"Sigma_{p} = Z({p})")
    assert sigma.passed
    assert sigma.detail.startswith(f"{p} homomorphisms")


def test_counterexample_control_fails():
    cert = counterexample_witness(2, zero_b=True)
    assert cert.checklist[0].passed is False
    with pytest.raises(HypothesisError):
        counterexample_witness(1)


@pytest.mark.parametrize('s', [1, 2])
@pytest.mark.parametrize('n', [1, 2, 3, 4])
def test_non_nilpotency_witness(s, n):
    witness = non_nilpotency_witness(PRUEFER3_Z, s, n)
    assert witness['nonzero']


def test_non_nilpotency_needs_unbounded_torsion():
    with pytest.raises(HypothesisError):
        non_nilpotency_witness(group((CYCLIC, 3, 1), (FREE_Z,)), 1, 1)


def test_fc_center_witness():
    cert = fc_center_witness(group((PRUEFER, 2), (CYCLIC_OMEGA, 2, 1)), 5)
    assert cert.tag == FC_CENTER
    assert cert.numbers['distinct_conjugates'] == 5
    assert cert.passed


def test_non_finitary_conjugation_witness():
    A = group((CYCLIC, 3, 1), (FREE_Z_OMEGA,))
    cert = non_finitary_conjugation_witness(A, 4)
    assert len(cert.families['commutators']) == 4
    assert cert.passed


def test_critical_delta_is_not_finitary():
    assert not is_finitary(delta(CRITICAL_2, 2, 3), CRITICAL_2).value
    assert is_finitary(Composite([delta(CRITICAL_2, 2, 3), delta(CRITICAL_2, 2, 3)]), CRITICAL_2).value
