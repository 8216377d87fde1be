from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PRUEFER5_Z, PRUEFER_2, Q2, Z, Z2, Z9_Z2, elements, group
from inertlab.autos import (DIVISIBLE, FINITE, MOD_D, MOD_T, ON_D, TORSION, WHOLE, WINDOW, BlockSum, Composite,
                            HomData, Identity, Inverse, Negation, OnePlusHom, PAdicRat, Part, RatMult, apply,
                            compile_expr, conjugate, conjugate_hom, equal, hom_to_stab, is_finitary,
                            multiplication_certificate, order, parse_auto, power, stab_to_hom, validate)
from inertlab.errors import GroupSpecError, StabilityError
from inertlab.groups import CYCLIC, CYCLIC_OMEGA, FREE_Z, LOCALIZED_Q, PRUEFER


def test_apply_examples():
    assert apply(RatMult(1, 2), Q2.element({(0, 0): 3})) == Q2.element({(0, 0): Fraction(3, 2)})
    Z9 = group((CYCLIC, 3, 2))
    assert apply(PAdicRat(3, 2, 1), Z9.element({(0, 0): 4})) == Z9.element({(0, 0): 8})
    P5 = group((PRUEFER, 5))
    assert apply(PAdicRat(5, 1, 2), P5.element({(0, 0): Fraction(1, 25)})) == \
        P5.element({(0, 0): Fraction(13, 25)})


def test_padic_rational_fixes_other_primes():
    A = group((CYCLIC, 3, 2), (PRUEFER, 2))
    a = A.element({(0, 0): 1, (1, 0): Fraction(1, 4)})
    assert apply(PAdicRat(3, 2, 1), a) == A.element({(0, 0): 2, (1, 0): Fraction(1, 4)})


def test_validate_examples():
    assert not validate(RatMult(1, 2), Z).valid
    assert validate(RatMult(3, 1), group((PRUEFER, 2), (CYCLIC, 2, 2))).valid
    Z4 = group((CYCLIC, 2, 2))
    good = OnePlusHom(HomData.of(Z4, Part(FINITE), {(0, 0): Z4.element({(0, 0): 2})}))
    bad = OnePlusHom(HomData.of(Z4, Part(FINITE), {(0, 0): Z4.element({(0, 0): 3})}))
    assert validate(good, Z4).valid
    report = validate(bad, Z4)
    assert not report.valid
    assert any(f.startswith('bijective') for f in report.failures)


def test_ratmult_on_localized_needs_p_power_numerator():
    assert validate(RatMult(1, 2), Q2).valid
    report = validate(RatMult(3, 1), group((PRUEFER, 2), (LOCALIZED_Q, 2)))
    assert not report.valid
    assert any('mnA=A' in f for f in report.failures)


def test_ratmult_rejects_torsion_at_its_primes():
    report = validate(RatMult(2, 1), PRUEFER_2)
    assert not report.valid
    assert report.failures[0].startswith('A_pi(mn)=0')


def test_padic_rational_must_be_a_unit():
    assert not validate(PAdicRat(3, 3, 1), Z9_Z2).valid
    assert not validate(PAdicRat(4, 1, 1), Z9_Z2).valid


def test_homomorphism_into_the_wrong_part_is_rejected():
    A = group((CYCLIC, 5, 1), (FREE_Z,))
    phi = HomData.of(A, Part(TORSION), {(1, 0): A.element({(1, 0): 2})})
    report = validate(OnePlusHom(phi), A)
    assert not report.valid
    assert any(f.startswith('image-in-X') for f in report.failures)


def window_map(A, images):
    return OnePlusHom(HomData.of(A, Part(WINDOW), images))


def test_unimodular_map_on_z2_is_valid():
    gamma = window_map(Z2, {(0, 0): Z2.element({(0, 0): 1, (1, 0): 1}), (1, 0): Z2.element({(0, 0): 1})})
    assert validate(gamma, Z2).valid
    a = Z2.element({(0, 0): 3, (1, 0): -7})
    assert apply(gamma, Z2.generator((0, 0))) == Z2.element({(0, 0): 2, (1, 0): 1})
    assert apply(Inverse(gamma), apply(gamma, a)) == a
    assert apply(Inverse(gamma), Z2.generator((0, 0))) == Z2.element({(0, 0): 1, (1, 0): -1})
    assert order(gamma, Z2, cap=50) is None


def test_map_on_z2_with_determinant_3_is_invalid():
    gamma = window_map(Z2, {(0, 0): Z2.element({(0, 0): 1, (1, 0): 1}), (1, 0): Z2.element({(0, 0): 1, (1, 0): 1})})
    report = validate(gamma, Z2)
    assert not report.valid
    assert report.failures[0].startswith('bijective: det 3')


@pytest.mark.parametrize('p, valid', [(2, True), (3, False)])
def test_doubling_through_a_perturbation_on_localized_q(p, valid):
    A = group((LOCALIZED_Q, p))
    gamma = window_map(A, {(0, 0): A.element({(0, 0): 1})})
    assert validate(gamma, A).valid is valid
    if valid:
        assert apply(Inverse(gamma), A.generator((0, 0))) == A.element({(0, 0): Fraction(1, 2)})


def test_mixed_torsion_and_free_blocks_invert():
    A = group((CYCLIC, 3, 1), (CYCLIC, 3, 1), (FREE_Z,))
    gamma = window_map(A, {
        (0, 0): A.element({(1, 0): 1}),
        (1, 0): A.element({(0, 0): 1, (1, 0): 1}),
        (2, 0): A.element({(0, 0): 1, (2, 0): -2}),
    })
    assert validate(gamma, A).valid
    assert equal(Composite([gamma, Inverse(gamma)]), Identity(), A)
    assert apply(Inverse(gamma), A.generator((2, 0))) == A.element({(0, 0): 2, (1, 0): 2, (2, 0): -1})


def test_singular_torsion_block_is_invalid():
    A = group((CYCLIC, 3, 1), (CYCLIC, 3, 1))
    gamma = window_map(A, {(0, 0): A.element({(1, 0): 1}), (1, 0): A.element({(0, 0): 1})})
    report = validate(gamma, A)
    assert not report.valid
    assert report.failures[0].startswith('bijective')


def test_parse_auto_block_sum():
    A = group((CYCLIC, 3, 2), (FREE_Z,))
    expr = parse_auto('{"tag":"BlockSum","blocks":[{"atom":0,"expr":{"tag":"PAdicRat","p":3,"m":2}},'
                      '{"atom":1,"expr":{"tag":"Negation"}}]}', A)
    assert expr == BlockSum.of({0: PAdicRat(3, 2, 1), 1: Negation()})
    assert equal(expr, Composite([PAdicRat(3, 2, 1), BlockSum.of({1: Negation()})]), A)


def test_parse_auto_unknown_tag():
    with pytest.raises(GroupSpecError) as info:
        parse_auto('{"tag":"Frobenius"}', Z)
    assert info.value.token == 'Frobenius'


def test_stab_to_hom_reads_off_the_perturbation():
    A = group((CYCLIC, 5, 1), (FREE_Z,))
    sigma = OnePlusHom(HomData.of(A, Part(TORSION), {(1, 0): A.element({(0, 0): 2})}))
    phi = stab_to_hom(sigma, Part(TORSION), A)
    assert phi.as_dict() == {(1, 0): A.element({(0, 0): 2})}
    assert equal(hom_to_stab(phi), sigma, A)


def test_zero_hom_is_the_identity():
    A = group((CYCLIC, 5, 1), (FREE_Z,))
    assert hom_to_stab(HomData.of(A, Part(TORSION), {})) == Identity()


def test_stab_to_hom_refuses_non_stability_elements():
    A = group((CYCLIC, 5, 1), (FREE_Z,))
    with pytest.raises(StabilityError):
        stab_to_hom(Negation(), Part(TORSION), A)


def test_conjugate_by_padic_rational_is_a_power():
    A = PRUEFER5_Z
    sigma = OnePlusHom(HomData.of(A, Part(TORSION), {(1, 0): A.element({(0, 0): Fraction(1, 5)})}))
    result = conjugate(sigma, PAdicRat(5, 2, 1), A, Part(TORSION))
    assert equal(result.expr, power(sigma, 2), A)
    assert result.module_agrees
    assert result.power_exponent == 2
    assert result.power_agrees


def test_conjugate_by_identity():
    A = PRUEFER5_Z
    sigma = OnePlusHom(HomData.of(A, Part(TORSION), {(1, 0): A.element({(0, 0): Fraction(1, 5)})}))
    assert equal(conjugate(sigma, Identity(), A).expr, sigma, A)


def test_finitary_examples():
    omega = group((CYCLIC_OMEGA, 2, 1))
    assert is_finitary(PAdicRat(2, 3, 1), omega).value is True
    verdict = is_finitary(RatMult(3, 1), PRUEFER_2)
    assert verdict.value is False
    assert verdict.direction


def test_finitary_perturbation_reports_its_image():
    A = group((CYCLIC, 2, 1), (FREE_Z,))
    sigma = OnePlusHom(HomData.of(A, Part(TORSION), {(1, 0): A.element({(0, 0): 1})}))
    verdict = is_finitary(sigma, A)
    assert verdict.value is True
    assert verdict.witness.order() == 2


def test_multiplication_certificates():
    A = group((CYCLIC, 2, 1), (LOCALIZED_Q, 3))
    found = multiplication_certificate(BlockSum.of({1: RatMult(3, 1)}), A, MOD_T)
    assert found.rational == 3
    # 3 is 1 on Z(2), so the whole group is multiplied by 3
    assert multiplication_certificate(BlockSum.of({1: RatMult(3, 1)}), A, WHOLE).rational == 3

    assert multiplication_certificate(RatMult(5, 3), PRUEFER_2, WHOLE).at(2) == Fraction(5, 3)

    B = group((PRUEFER, 5), (CYCLIC_OMEGA, 5, 2))
    gamma = BlockSum.of({0: RatMult(7, 1), 1: RatMult(3, 1)})
    assert multiplication_certificate(gamma, B, ON_D).rational == 7
    assert multiplication_certificate(gamma, B, MOD_D).rational == 3


def test_order_of_finite_order_automorphisms():
    Z9 = group((CYCLIC, 3, 2))
    assert order(PAdicRat(3, 2, 1), Z9) == 6
    assert order(Negation(), Z) == 2
    assert order(RatMult(1, 2), Q2, cap=50) is None


def test_part_labels():
    assert Part(TORSION).label() == 'T'
    assert Part(DIVISIBLE).label() == 'D'
    with pytest.raises(GroupSpecError):
        Part('radical')


SIGMA = Composite([
    BlockSum.of({0: PAdicRat(3, 2, 1)}),
    OnePlusHom(HomData.of(Z9_Z2, Part(TORSION), {(1, 0): Z9_Z2.element({(0, 0): 3})})),
])


@settings(max_examples=50, derandomize=True)
@given(elements(Z9_Z2), elements(Z9_Z2))
def test_automorphisms_are_additive(a, b):
    assert apply(SIGMA, a + b) == apply(SIGMA, a) + apply(SIGMA, b)


@settings(max_examples=50, derandomize=True)
@given(elements(Z9_Z2))
def test_inverse_undoes_the_automorphism(a):
    assert apply(Inverse(SIGMA), apply(SIGMA, a)) == a
    assert compile_expr(Composite([SIGMA, Inverse(SIGMA)]), Z9_Z2).apply(a) == a


GAMMA = Composite([
    BlockSum.of({0: PAdicRat(3, 2, 1)}),
    OnePlusHom(HomData.of(Z9_Z2, Part(WINDOW), {
        (1, 0): Z9_Z2.element({(0, 0): 4, (1, 0): 1, (2, 0): 1}),
        (2, 0): Z9_Z2.element({(1, 0): 1}),
    })),
])


@st.composite
def torsion_homs(draw):
    images = {slot: Z9_Z2.element({(0, 0): draw(st.integers(0, 8))}) for slot in ((1, 0), (2, 0))}
    return HomData.of(Z9_Z2, Part(TORSION), images)


@settings(max_examples=100, derandomize=True, deadline=None)
@given(torsion_homs(), torsion_homs())
def test_stability_elements_correspond_to_homomorphisms(phi, psi):
    T = Part(TORSION)
    sigma, tau = hom_to_stab(phi), hom_to_stab(psi)
    assert stab_to_hom(sigma, T, Z9_Z2).as_dict() == phi.as_dict()
    assert stab_to_hom(Composite([sigma, tau]), T, Z9_Z2).as_dict() == (phi + psi).as_dict()
    result = conjugate(sigma, GAMMA, Z9_Z2, T)
    assert result.module_agrees
    assert stab_to_hom(result.expr, T, Z9_Z2).as_dict() == conjugate_hom(phi, GAMMA).as_dict()
