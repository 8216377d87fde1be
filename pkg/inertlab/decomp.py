"""Decomposition certificates for groups of inertial automorphisms.

Each construction returns generator families as expressions together with
a checklist of identities re-verified on the window.  Generator families
use the first few copies of every omega atom; identities are decided by the
equality contract of ``autos``.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from sympy import factorint, mod_inverse, primerange

from .autos import (DIVISIBLE, FINITE, FINITE_INDEX, MOD_D, MOD_T, TORSION, WINDOW, AutoExpr, BlockSum, Composite,
                    HomData, Identity, Inverse, Negation, NormalForm, OnePlusHom, PAdicRat, Part, RatMult,
                    apply, commutator, compile_expr, conjugate, conjugate_hom, embed, equal,
                    finitary_normal_form, fixes_atoms, hom_to_stab, invert, is_finitary, is_stability_element,
                    multiplier_of, multiplier_over, order, power, restrict_normal_form, stab_to_hom,
                    trivial_modulo, validate)
from .config import Config
from .errors import HypothesisError, StabilityError
from .groups import (CYCLIC, FREE_Z, FREE_Z_OMEGA, INFINITY, LOCALIZED_Q, PRUEFER, Atom, GroupDescriptor,
                     Slot, essential_exponent, exponent, is_critical, is_p_divisible_atom, p_valuation, pi_star,
                     unit_root)
from .inertia import INERTIAL, corpus, inertial_normal_form, is_inertial
from .lattice import Subgroup, index, intersection, is_pure, is_subgroup, span, subgroup_sum

logger = logging.getLogger('InertLab.Decomp')

PROP51_NONCRIT = 'PROP51_NONCRIT'
PROP51_CRIT = 'PROP51_CRIT'
THEOREM_A = 'THEOREM_A'
THEOREM_B = 'THEOREM_B'
THEOREM_C_BOUNDED_T = 'THEOREM_C_BOUNDED_T'
THEOREM_C_FG_QUOTIENT = 'THEOREM_C_FG_QUOTIENT'
FAUT_CRITICAL = 'FAUT_CRITICAL'

# witness reports
KI_CHECK = 'KI_CHECK'
FC_CENTER = 'FC_CENTER'
NON_FINITARY_CONJUGATION = 'NON_FINITARY_CONJUGATION'
COUNTEREXAMPLE = 'COUNTEREXAMPLE'
FEW_AUTOMORPHISMS = 'FEW_AUTOMORPHISMS'

SPLIT_CAP = 4096


@dataclass
class CheckItem:
    """One re-verified identity; passed is None for a skipped item."""

    name: str
    passed: Optional[bool]
    detail: str = ''
    witness: Any = None

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'name': self.name, 'passed': self.passed, 'detail': self.detail}
        if self.witness is not None:
            data['witness'] = self.witness
        return data


@dataclass
class DecompositionCertificate:
    tag: str
    group: GroupDescriptor
    families: Dict[str, List[AutoExpr]] = field(default_factory=dict)
    numbers: Dict[str, Any] = field(default_factory=dict)
    checklist: List[CheckItem] = field(default_factory=list)
    out_of_scope: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(item.passed is not False for item in self.checklist)

    def check(self, name: str, passed: Optional[bool], detail: str = '', witness: Any = None) -> CheckItem:
        item = CheckItem(name, passed, detail, witness)
        self.checklist.append(item)
        if passed is False:
            logger.warning("%s: check %s failed: %s", self.tag, name, detail)
        return item

    def to_json(self) -> Dict[str, Any]:
        data = {
            'tag': self.tag,
            'group': self.group.to_json(),
            'families': {k: [e.to_json() for e in v] for k, v in sorted(self.families.items())},
            'numbers': self.numbers,
            'checklist': [item.to_json() for item in self.checklist],
            'passed': self.passed,
        }
        if self.out_of_scope:
            data['out_of_scope'] = list(self.out_of_scope)
        return data


def _window_slots(A: GroupDescriptor, atoms: Iterable[int], copies: int) -> List[Slot]:
    slots = []
    for i in atoms:
        slots.extend((i, c) for c in range(copies if A[i].is_omega else 1))
    return slots


def _family_copies(budget: Optional[int]) -> int:
    return max(1, min(Config.BUDGET if budget is None else budget, 3))


# Splitting bounded groups

@dataclass
class SplitResult:
    B1: Subgroup
    B2: Subgroup
    window: Subgroup
    order_B2: int
    checks: List[CheckItem]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> Dict[str, Any]:
        return {
            'B1': self.B1.to_json(),
            'B2': self.B2.to_json(),
            'order_B2': self.order_B2,
            'checks': [c.to_json() for c in self.checks],
        }


def window_subgroup(B: GroupDescriptor, copies: int, extra: Iterable[Slot] = ()) -> Subgroup:
    slots = set(_window_slots(B, range(len(B)), copies)) | set(extra)
    return span(B, [B.generator(s) for s in sorted(slots)])


def split_bounded(B: GroupDescriptor, B0: Subgroup, budget: Optional[int] = None) -> SplitResult:
    """B = B1 (+) B2 with B2 finite and B1 <= B0.

    B0 is given by generators inside the window W (cyclic atoms and the first
    ``budget`` omega copies) and stands for B0 (+) (omega copies outside W),
    so B1 carries the copies outside W as well.
    """
    if any(not a.is_cyclic for a in B.atoms):
        raise HypothesisError(f"{B.label()} is not bounded")
    if B0.ambient != B:
        raise HypothesisError("B0 is not a subgroup of B")
    copies = Config.BUDGET if budget is None else budget
    extra = {s for g in B0.generators for s in g.support}
    W = window_subgroup(B, copies, extra)
    size = W.order()
    if size > SPLIT_CAP:
        raise HypothesisError(f"window of order {size} is too large to split")
    S = span(B, [], W.window)
    for x in sorted(B0.in_window(W.window).elements(), key=lambda e: (-e.order(), e.coords)):
        if not x or S.contains(x):
            continue
        candidate = span(B, S.generators + (x,), W.window)
        if is_pure(candidate, W):
            S = candidate
    complement = _complement(S, W)
    checks = [
        CheckItem('B1 <= B0', is_subgroup(S, B0.in_window(W.window))),
        CheckItem('B1 n B2 = 0', intersection(S, complement).order() == 1),
        CheckItem('B1 + B2 = W', index(subgroup_sum(S, complement), W) == 1),
    ]
    logger.debug("split of %s: |B1 n W| = %s, |B2| = %s", B.label(), S.order(), complement.order())
    return SplitResult(S, complement, W, int(complement.order()), checks)


def _complement(S: Subgroup, W: Subgroup) -> Subgroup:
    """A complement of a pure subgroup S of the finite group W, by backtracking."""
    target = W.order() // S.order()
    elements = sorted((x for x in W.elements() if x), key=lambda e: (-e.order(), e.coords))
    zero = span(W.ambient, [], W.window)

    def extend(C: Subgroup, start: int) -> Optional[Subgroup]:
        if C.order() == target:
            return C
        for position in range(start, len(elements)):
            x = elements[position]
            if C.contains(x):
                continue
            candidate = span(W.ambient, C.generators + (x,), W.window)
            if candidate.order() > target or intersection(candidate, S).order() != 1:
                continue
            found = extend(candidate, position + 1)
            if found is not None:
                return found
        return None

    found = extend(zero, 0)
    if found is None:
        raise HypothesisError(f"no complement of {S.label()} in the window")
    return found


# Q(A) and the splitting off of IAut_1

def gamma_p(A: GroupDescriptor, p: int) -> AutoExpr:
    """1 (+) p with respect to A = A_p (+) C^(p)."""
    if A.is_periodic:
        raise HypothesisError(f"{A.label()} is periodic")
    if p not in pi_star(A):
        raise HypothesisError(f"{p} is not in pi_*({A.label()})")
    primary = set(A.primary_indices([p]))
    return BlockSum.of({i: RatMult(p, 1) for i in range(len(A)) if i not in primary})


def q_generators(A: GroupDescriptor) -> List[AutoExpr]:
    """gamma_(p) for p in pi_*(A), then -1."""
    if A.is_periodic:
        raise HypothesisError(f"{A.label()} is periodic")
    return [gamma_p(A, p) for p in sorted(pi_star(A).primes)] + [Negation()]


def q_word(A: GroupDescriptor, exponents: Dict[int, int], negative: bool = False) -> AutoExpr:
    parts: List[AutoExpr] = [power(gamma_p(A, p), s) for p, s in sorted(exponents.items()) if s]
    if negative:
        parts.append(Negation())
    if not parts:
        return Identity()
    return parts[0] if len(parts) == 1 else Composite(parts)


def q_is_free(A: GroupDescriptor, bound: int = 2) -> CheckItem:
    """No nontrivial word with exponents in [-bound, bound] is the identity."""
    primes = sorted(pi_star(A).primes)
    tried = 0
    for exps in product(range(-bound, bound + 1), repeat=len(primes)):
        for negative in (False, True):
            if not any(exps) and not negative:
                continue
            tried += 1
            word = q_word(A, dict(zip(primes, exps)), negative)
            if equal(word, Identity(), A):
                return CheckItem('Q(A) free times {+-1}', False, f"{word.label()} is the identity")
    return CheckItem('Q(A) free times {+-1}', True, f"{tried} nontrivial words checked")


@dataclass
class TheoremBFactor:
    gamma1: AutoExpr
    gamma0: AutoExpr
    multiplier: Fraction
    exponents: Dict[int, int]
    checks: List[CheckItem]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> Dict[str, Any]:
        return {
            'tag': THEOREM_B,
            'gamma1': self.gamma1.to_json(),
            'gamma0': self.gamma0.to_json(),
            'm/n': str(self.multiplier),
            'exponents': {str(p): s for p, s in sorted(self.exponents.items())},
            'checks': [c.to_json() for c in self.checks],
        }


def theoremB_factor(gamma: AutoExpr, A: GroupDescriptor) -> TheoremBFactor:
    """gamma = gamma1 gamma0 with gamma1 in IAut_1(A) and gamma0 in Q(A)."""
    if A.is_periodic:
        raise HypothesisError(f"{A.label()} is periodic")
    verdict = is_inertial(gamma, A)
    if verdict.status != INERTIAL:
        raise HypothesisError(f"{gamma.label()} is not inertial ({verdict.status})")
    nf = compile_expr(gamma, A)
    found = multiplier_of(nf, MOD_T)
    if found is None or found.rational is None:
        raise HypothesisError(f"{gamma.label()} is not a multiplication on A/T")
    r = found.rational
    exponents = {int(p): s for p, s in factorint(abs(r.numerator)).items()}
    for p, s in factorint(r.denominator).items():
        exponents[int(p)] = exponents.get(int(p), 0) - s
    allowed = pi_star(A)
    outside = [p for p in exponents if p not in allowed]
    if outside:
        raise HypothesisError(f"multiplier {r} uses primes {outside} outside pi_*(A)")
    gamma0 = q_word(A, exponents, r < 0)
    gamma1_nf = nf.then(invert(compile_expr(gamma0, A)))
    gamma1 = gamma1_nf.to_expr()
    checks = [
        CheckItem('gamma1 = 1 on A/T', trivial_modulo(gamma1_nf, A.torsion_indices())),
        CheckItem('gamma1 gamma0 = gamma', equal(Composite([gamma1, gamma0]), gamma, A)),
        CheckItem('gamma1 inertial', is_inertial(gamma1, A).status == INERTIAL),
    ]
    return TheoremBFactor(gamma1, gamma0, r, exponents, checks)


# p-groups

def _single_prime(A: GroupDescriptor) -> int:
    primes = {a.p for a in A.atoms if a.is_torsion}
    if not A.atoms or not A.is_periodic or len(primes) != 1:
        raise HypothesisError(f"{A.label()} is not a nonzero p-group")
    return primes.pop()


def unit_generators(p: int, m: int) -> List[int]:
    """Generators of the units mod p^m: a primitive root, or -1 and 5 for p = 2."""
    if m < 1 or p ** m == 2:
        return []
    if p == 2:
        return [p ** m - 1] if m == 2 else [p ** m - 1, 5]
    return [unit_root(p)]


def _scaling(A: GroupDescriptor, slot: Slot, u: int) -> AutoExpr:
    """Multiply one slot by the unit u, identity elsewhere."""
    e = A.generator(slot)
    return OnePlusHom(HomData.of(A, Part(WINDOW), {slot: e.scale(u - 1)}))


def _transvection(A: GroupDescriptor, source: Slot, target: Slot) -> AutoExpr:
    """e_source -> e_source + (largest element of e_target's layer allowed by orders)."""
    k_s, t = A[source[0]].k, A[target[0]]
    if t.kind == PRUEFER:
        image = A.element({target: Fraction(1, t.p ** k_s)})
    else:
        image = A.element({target: t.p ** max(0, t.k - k_s)})
    return OnePlusHom(HomData.of(A, Part(FINITE), {source: image}))


def faut_family(A: GroupDescriptor, atoms: Sequence[int], copies: int) -> List[AutoExpr]:
    """Unit scalings of the cyclic slots and transvections between window slots of the listed atoms."""
    targets = _window_slots(A, atoms, copies)
    slots = [s for s in targets if A[s[0]].is_cyclic]
    family: List[AutoExpr] = []
    for slot in slots:
        atom = A[slot[0]]
        for u in unit_generators(atom.p, atom.k):
            family.append(_scaling(A, slot, u))
    for source in slots:
        for target in targets:
            if source != target:
                family.append(_transvection(A, source, target))
    return family


def paut_intersection_order(A: GroupDescriptor, p: int) -> Tuple[int, List[int]]:
    """|PAut(A) n FAut(A)| counted over rational units mod p^m."""
    m = exponent(A, p)
    if m == INFINITY:
        return 1, [1]
    units = [u for u in range(1, p ** m) if u % p]
    finitary = [u for u in units if is_finitary(PAdicRat(p, u, 1), A).value]
    return len(finitary), finitary


def paut_family(p: int, m: Any) -> List[AutoExpr]:
    """Rational generators of the p-adic units acting on a p-group of exponent m."""
    if m == INFINITY:
        m = 3 if p == 2 else 2
    return [PAdicRat(p, u, 1) for u in unit_generators(p, m)]


def pgroup_decompose(A: GroupDescriptor, budget: Optional[int] = None) -> DecompositionCertificate:
    p = _single_prime(A)
    if is_critical(A, p):
        return _critical_certificate(A, p, budget)
    return _noncritical_certificate(A, p, budget)


def _noncritical_certificate(A: GroupDescriptor, p: int, budget: Optional[int]) -> DecompositionCertificate:
    cert = DecompositionCertificate(PROP51_NONCRIT, A)
    m, e = exponent(A, p), essential_exponent(A, p)
    copies = _family_copies(budget)
    cert.families['PAut'] = paut_family(p, m)
    cert.families['FAut'] = faut_family(A, A.indices(lambda a: a.is_cyclic), copies)
    count, units = paut_intersection_order(A, p)
    cert.numbers.update({'p': p, 'm': _num(m), 'e': _num(e), 'family_copies': copies,
                         'PAut_n_FAut': count, 'finitary_units': units})
    _check_family(cert, 'PAut', A, finitary=None)
    _check_family(cert, 'FAut', A, finitary=True)
    if m == INFINITY:
        expected = 1
    elif e == 0:
        expected = (p - 1) * p ** (m - 1)
    else:
        expected = p ** (m - e)
    cert.check('PAut n FAut order', count == expected, f"{count} (expected {expected})")
    return cert


def _num(value: Any) -> Any:
    return 'infinite' if value == INFINITY else value


def _check_family(cert: DecompositionCertificate, name: str, A: GroupDescriptor,
                  finitary: Optional[bool] = None):
    failures = [g.label() for g in cert.families[name] if not validate(g, A).valid]
    cert.check(f"{name} generators valid", not failures, '; '.join(failures))
    if finitary is not None:
        wrong = [g.label() for g in cert.families[name] if is_finitary(g, A).value is not finitary]
        cert.check(f"{name} generators {'finitary' if finitary else 'not finitary'}", not wrong, '; '.join(wrong))


def sigma_family(A: GroupDescriptor, sources: Sequence[int], targets: Sequence[int], part: Part,
                 copies: int, depth: int = 0) -> List[AutoExpr]:
    """Stability elements e_s -> generator of the image layer, one per (source slot, target atom).

    Cyclic sources of order p^k map to 1/p^k in Pruefer targets; free sources map
    to 1/p^depth (depth defaults to 1).
    """
    family = []
    for source in _window_slots(A, sources, copies):
        s_atom = A[source[0]]
        for j in targets:
            t = A[j]
            if s_atom.is_cyclic and s_atom.p != t.p:
                continue
            if s_atom.kind == LOCALIZED_Q and s_atom.p == t.p:
                continue
            if t.kind == PRUEFER:
                k = s_atom.k if s_atom.is_cyclic else max(depth, 1)
                image = A.element({(j, 0): Fraction(1, t.p ** k)})
            elif s_atom.is_cyclic:
                image = A.element({(j, 0): t.p ** max(0, t.k - s_atom.k)})
            else:
                image = A.element({(j, 0): 1})
            family.append(OnePlusHom(HomData.of(A, part, {source: image})))
    return family


def delta(A: GroupDescriptor, p: int, n: int) -> AutoExpr:
    """delta_n = 1 (+) n with respect to A_p = D (+) B."""
    divisible = set(A.divisible_indices())
    return BlockSum.of({i: PAdicRat(p, n, 1) for i in A.primary_indices([p]) if i not in divisible})


def _critical_certificate(A: GroupDescriptor, p: int, budget: Optional[int]) -> DecompositionCertificate:
    cert = DecompositionCertificate(PROP51_CRIT, A)
    copies = _family_copies(budget)
    D = A.divisible_indices()
    B = tuple(i for i in range(len(A)) if i not in D)
    m_prime = max(A[i].k for i in B)
    e_prime = max(A[i].k for i in B if A[i].is_omega)
    modulus = p ** m_prime
    sigma = sigma_family(A, B, D, Part(DIVISIBLE), copies)
    phi = faut_family(A, B, copies)
    deltas = [delta(A, p, n) for n in unit_generators(p, m_prime)]
    cert.families.update({'Sigma': sigma, 'Phi': phi, 'Delta': deltas, 'Psi': phi + deltas,
                          'PAut': paut_family(p, INFINITY)})
    cert.numbers.update({'p': p, "m'": m_prime, "e'": e_prime, 'family_copies': copies,
                         'delta_units': unit_generators(p, m_prime)})
    for name in ('Sigma', 'Phi', 'Delta'):
        _check_family(cert, name, A)

    stable = all(is_stability_element(s, Part(DIVISIBLE), A) for s in sigma)
    cert.check('Sigma <= St(A,D)', stable)
    orders = [order(s, A) for s in sigma]
    exp_sigma = max(orders)
    cert.check('exp(Sigma) = exp(B)', exp_sigma == modulus, f"{exp_sigma} vs {modulus}")
    omega_orders = [o for s, o in zip(sigma, orders) if A[_source_slot(s)[0]].is_omega]
    cert.check('eexp(Sigma) = eexp(B)', max(omega_orders) == p ** e_prime,
               f"{max(omega_orders)} vs {p ** e_prime}")

    units = [n for n in range(2, min(modulus * 2, 16)) if n % p]
    bad = []
    for s in sigma:
        for n in units:
            inverse_power = int(mod_inverse(n, modulus))
            if not equal(conjugate(s, delta(A, p, n), A).expr, power(s, inverse_power), A):
                bad.append(f"{s.label()}^delta_{n}")
            if not equal(conjugate(s, Inverse(delta(A, p, n)), A).expr, power(s, n), A):
                bad.append(f"{s.label()}^delta_{n}^-1")
    cert.check('Delta acts on Sigma by multiplications', not bad, '; '.join(bad),
               witness={'units': units, 'conjugate_by_delta_n': 'sigma^(n^-1)',
                        'conjugate_by_delta_n_inverse': 'sigma^n'})

    noncommuting = [f"[{f.label()}, {d.label()}]" for f in phi for d in deltas
                    if not equal(commutator(f, d), Identity(), A)]
    cert.check('[Phi, Delta] = 1', not noncommuting, '; '.join(noncommuting))

    cert.check(*_faithfulness(cert.families['Psi'], sigma, A))

    finitary_units = [n for n in range(1, modulus) if n % p and is_finitary(delta(A, p, n), A).value]
    cert.numbers['FAut_n_Delta'] = len(finitary_units)
    cert.check('FAut n Delta order', len(finitary_units) == p ** (m_prime - e_prime),
               f"{len(finitary_units)} (expected {p ** (m_prime - e_prime)})")
    _sigma_generated_by_commutators(cert, sigma, A, p, m_prime)
    return cert


def _source_slot(sigma: AutoExpr) -> Slot:
    return sigma.phi.support[0]


def _faithfulness(psi: Sequence[AutoExpr], sigma: Sequence[AutoExpr], A: GroupDescriptor):
    """For every nontrivial psi, a sigma with sigma^psi != sigma."""
    witnesses = {}
    unfaithful = []
    for g in psi:
        if equal(g, Identity(), A):
            continue
        moved = next((s for s in sigma if not equal(conjugate(s, g, A).expr, s, A)), None)
        if moved is None:
            unfaithful.append(g.label())
        else:
            witnesses[g.label()] = moved.label()
    return ('faithful action on Sigma', not unfaithful,
            'unmoved by ' + '; '.join(unfaithful) if unfaithful else f"{len(witnesses)} witnesses", witnesses)


def _sigma_generated_by_commutators(cert: DecompositionCertificate, sigma: Sequence[AutoExpr],
                                    A: GroupDescriptor, p: int, m_prime: int):
    """Sigma = [Sigma, Delta] and Delta fixes no nonzero sigma, for odd p."""
    if p == 2:
        cert.check('Sigma = [Sigma, Delta]', None, 'skipped: n^-1 - 1 is even for every unit n mod 2^m')
        return
    modulus = p ** m_prime
    n = unit_root(p)
    d = delta(A, p, n)
    failures = []
    for s in sigma:
        c = commutator(s, d)
        o = order(s, A)
        k = int(mod_inverse((mod_inverse(n, modulus) - 1) % o, o))
        if not equal(power(c, k), s, A):
            failures.append(f"{s.label()} not a power of [{s.label()}, delta_{n}]")
        if equal(conjugate(s, d, A).expr, s, A):
            failures.append(f"delta_{n} fixes {s.label()}")
    cert.check('Sigma = [Sigma, Delta]', not failures, '; '.join(failures), witness={'n': n})


# Periodic groups

def _residue(q: Fraction, modulus: int) -> int:
    return q.numerator * int(mod_inverse(q.denominator, modulus)) % modulus


def factor_periodic(gamma: AutoExpr, A: GroupDescriptor) -> DecompositionCertificate:
    """gamma = alpha phi delta with alpha a power automorphism, phi finitary and delta in Delta."""
    if not A.is_periodic or A.is_zero:
        raise HypothesisError(f"{A.label()} is not a nonzero periodic group")
    verdict = is_inertial(gamma, A)
    if verdict.status != INERTIAL:
        raise HypothesisError(f"{gamma.label()} is not inertial on {A.label()}: {verdict.violated}")
    nf = compile_expr(gamma, A)
    alphas: List[AutoExpr] = []
    blocks: Dict[int, AutoExpr] = {}
    for p in A.torsion_primes:
        atoms = A.primary_indices([p])
        local = restrict_normal_form(nf, atoms)
        found = multiplier_of(local, FINITE_INDEX)
        if found is not None:
            q = found.at(p)
            if q != 1:
                alphas.append(PAdicRat(p, q.numerator, q.denominator))
            continue
        divisible = local.group.divisible_indices()
        rest = tuple(i for i in range(len(local.group)) if i not in divisible)
        on_d = multiplier_over(local, divisible, ())
        on_quotient = multiplier_over(local, rest, divisible, MOD_D, finite_index=True)
        if on_d is None or on_quotient is None:
            raise HypothesisError(f"no power automorphism matches {gamma.label()} at p = {p}")
        u, v = on_d.at(p), on_quotient.at(p)
        modulus = p ** max(local.group[i].k for i in rest)
        n = _residue(v, modulus) * int(mod_inverse(_residue(u, modulus), modulus)) % modulus
        if u != 1:
            alphas.append(PAdicRat(p, u.numerator, u.denominator))
        if n != 1:
            blocks.update({atoms[i]: PAdicRat(p, n, 1) for i in rest})
    alpha = alphas[0] if len(alphas) == 1 else (Composite(alphas) if alphas else Identity())
    delta_part = BlockSum.of(blocks)
    phi = compile_expr(Composite([Inverse(alpha), gamma, Inverse(delta_part)]), A).to_expr()
    cert = DecompositionCertificate(THEOREM_A, A, {'alpha': [alpha], 'phi': [phi], 'delta': [delta_part]})
    cert.check('phi finitary', is_finitary(phi, A).value)
    cert.check('alpha phi delta = gamma', equal(Composite([alpha, phi, delta_part]), gamma, A))
    cert.check('alpha power automorphism', all(isinstance(a, PAdicRat) for a in alphas))
    critical = [p for p in A.torsion_primes if is_critical(A, p)]
    outside = [i for i, _ in delta_part.blocks if A[i].p not in critical]
    cert.check('delta supported on critical primes', not outside, f"atoms {outside}")
    return cert


def periodic_decompose(A: GroupDescriptor, budget: Optional[int] = None,
                       samples: int = 6, seed: Optional[int] = None) -> DecompositionCertificate:
    if not A.is_periodic or A.is_zero:
        raise HypothesisError(f"{A.label()} is not a nonzero periodic group")
    cert = DecompositionCertificate(THEOREM_A, A)
    critical = [p for p in A.torsion_primes if is_critical(A, p)]
    pi = [p for p in A.torsion_primes if p not in critical]
    cert.numbers.update({'pi': pi, 'critical': critical, 'per_prime': {}})
    for name in ('PAut', 'FAut', 'Sigma', 'Phi', 'Delta', 'Psi'):
        cert.families[name] = []
    for p in A.torsion_primes:
        atoms = A.primary_indices([p])
        sub = pgroup_decompose(A.restrict(atoms), budget)
        cert.numbers['per_prime'][str(p)] = sub.numbers
        for name, family in sub.families.items():
            cert.families[name].extend(g if isinstance(g, PAdicRat) else embed(g, atoms, A) for g in family)
        for item in sub.checklist:
            cert.check(f"p={p}: {item.name}", item.passed, item.detail, item.witness)
    reduced = not A.divisible_indices()
    cert.check('reduced => Delta trivial', not (reduced and cert.families['Delta']))

    divisible = A.divisible_indices()
    seed = Config.SEED if seed is None else seed
    checked = 0
    for gamma in corpus(A, seed, samples):
        if is_inertial(gamma, A).status != INERTIAL:
            continue
        factors = factor_periodic(gamma, A)
        phi, delta_part = factors.families['phi'][0], factors.families['delta'][0]
        centralizes = fixes_atoms(compile_expr(Composite([phi, delta_part]), A), divisible)
        cert.check(f"factor {gamma.label()}", factors.passed and centralizes,
                   '; '.join(i.name for i in factors.checklist if i.passed is False)
                   or ('' if centralizes else 'phi delta moves D'))
        checked += 1
    cert.numbers['factored_samples'] = checked
    return cert


def centralizer_check(A: GroupDescriptor, budget: Optional[int] = None, samples: int = 12,
                      seed: Optional[int] = None) -> DecompositionCertificate:
    """On a critical p-group: FAut(A) Delta is the centralizer of D in IAut(A)."""
    p = _single_prime(A)
    if not is_critical(A, p):
        raise HypothesisError(f"{A.label()} is not a critical p-group")
    base = _critical_certificate(A, p, budget)
    cert = DecompositionCertificate(FAUT_CRITICAL, A, {k: base.families[k] for k in ('Phi', 'Delta')},
                                    dict(base.numbers))
    D = A.divisible_indices()
    moving = [g.label() for g in base.families['Phi'] + base.families['Delta']
              if not fixes_atoms(compile_expr(g, A), D)]
    cert.check('Phi Delta centralizes D', not moving, '; '.join(moving))
    seed = Config.SEED if seed is None else seed
    for gamma in corpus(A, seed, samples):
        nf = compile_expr(gamma, A)
        if not fixes_atoms(nf, D) or is_inertial(gamma, A).status != INERTIAL:
            continue
        factors = factor_periodic(gamma, A)
        trivial_alpha = equal(factors.families['alpha'][0], Identity(), A)
        cert.check(f"{gamma.label()} in FAut Delta", factors.passed and trivial_alpha)
    return cert


# St(A, T) and the splitting off of Gamma_1

def sigma_layout(A: GroupDescriptor) -> List[Tuple[int, Tuple[int, ...]]]:
    """Hom(A/T, T) as a direct sum: for each torsion-free atom, the torsion atoms it maps into."""
    torsion = A.torsion_indices()
    layout = []
    for i in A.torsion_free_indices():
        source = A[i]
        allowed = tuple(j for j in torsion if not (source.kind == LOCALIZED_Q and A[j].p == source.p))
        if allowed:
            layout.append((i, allowed))
    return layout


def direct_sum_normal_form(parts: Sequence[NormalForm]) -> NormalForm:
    group = GroupDescriptor(tuple(a for nf in parts for a in nf.group.atoms))
    scalars: List[Fraction] = []
    images = {}
    offset = 0
    for nf in parts:
        scalars.extend(nf.scalars)
        for (i, c), image in nf.images:
            images[(i + offset, c)] = group.element({(j + offset, d): v for (j, d), v in image.coords})
        offset += len(nf.group)
    return NormalForm(group, tuple(scalars), tuple(images.items()))


def induced_on_sigma(gamma: AutoExpr, A: GroupDescriptor) -> NormalForm:
    """The action phi -> phi gamma of a gamma trivial on A/T, on the descriptor of Hom(A/T, T)."""
    nf = compile_expr(gamma, A)
    if not trivial_modulo(nf, A.torsion_indices()):
        raise StabilityError(f"{gamma.label()} is not the identity on A/T")
    return direct_sum_normal_form([restrict_normal_form(nf, allowed) for _, allowed in sigma_layout(A)])


def _lift(family: Iterable[AutoExpr], atoms: Sequence[int], A: GroupDescriptor) -> List[AutoExpr]:
    return [g if isinstance(g, PAdicRat) else embed(g, atoms, A) for g in family]


def torsion_families(A: GroupDescriptor, budget: Optional[int] = None) -> Tuple[List[AutoExpr], List[AutoExpr]]:
    """(IAut(T) generators, FAut(T) generators), each lifted to gamma (+) 1 on A."""
    torsion = A.torsion_indices()
    if not torsion:
        return [], []
    cert = periodic_decompose(A.restrict(torsion), budget, samples=0)
    finitary = cert.families['FAut'] + cert.families['Phi'] + cert.families['Sigma']
    everything = cert.families['PAut'] + finitary + cert.families['Delta']
    return _lift(everything, torsion, A), _lift(finitary, torsion, A)


def finitary_conjugation_check(A: GroupDescriptor, budget: Optional[int] = None,
                               family: Optional[Sequence[AutoExpr]] = None) -> CheckItem:
    """Finitary automorphisms of T, extended by 1, induce finitary automorphisms of St(A, T)."""
    if A.r0 == INFINITY:
        raise HypothesisError(f"{A.label()} has infinite torsion-free rank")
    if family is None:
        _, family = torsion_families(A, budget)
    wrong = [g.label() for g in family if not finitary_normal_form(induced_on_sigma(g, A)).value]
    return CheckItem('FAut(T) induces finitary automorphisms of Sigma', not wrong, '; '.join(wrong))


def non_nilpotency_witness(A: GroupDescriptor, s: int, n: int, p: Optional[int] = None) -> Dict[str, Any]:
    """A nonzero element of Sigma (mu^s - 1)^n, mu = a (+) 1 with a a unit multiplication on Z(p^oo)."""
    pruefer = [j for j in A.divisible_indices() if p is None or A[j].p == p]
    if not pruefer:
        raise HypothesisError(f"{A.label()} has no unbounded torsion")
    j = pruefer[0]
    p = A[j].p
    sources = [i for i in A.torsion_free_indices() if A[i].kind != FREE_Z_OMEGA
               and not (A[i].kind == LOCALIZED_Q and A[i].p == p)]
    if not sources:
        raise HypothesisError(f"no torsion-free atom of {A.label()} maps onto Z({p}^oo)")
    i = sources[0]
    a = 3 if p == 2 else 2
    mu = PAdicRat(p, a, 1)
    mu_s = power(mu, s)
    depth = n * p_valuation(a ** s - 1, p) + 1
    start = HomData.of(A, Part(TORSION), {(i, 0): A.element({(j, 0): Fraction(1, p ** depth)})})
    phi = start
    for _ in range(n):
        phi = conjugate_hom(phi, mu_s) + phi.scaled(-1)
    value = phi.evaluate(A.generator((i, 0)))
    return {'mu': mu.label(), 's': s, 'n': n, 'sigma': hom_to_stab(start).label(),
            'element': value.label(), 'nonzero': bool(value)}


def theoremC_split(A: GroupDescriptor, budget: Optional[int] = None, s_values: Sequence[int] = (1, 2),
                   n_max: Optional[int] = None) -> DecompositionCertificate:
    """IAut_1(A) = Sigma x| Gamma_1, with the induced action of Gamma_1 on Sigma."""
    if A.is_periodic:
        raise HypothesisError(f"{A.label()} is periodic")
    if A.r0 == INFINITY:
        raise HypothesisError(f"{A.label()} has infinite torsion-free rank")
    torsion_free = A.torsion_free_indices()
    if all(A[i].kind == FREE_Z for i in torsion_free):
        tag = THEOREM_C_FG_QUOTIENT
    elif not A.divisible_indices():
        tag = THEOREM_C_BOUNDED_T
    else:
        raise HypothesisError(f"{A.label()}: T is unbounded and A/T is not finitely generated")
    copies = _family_copies(budget)
    torsion = A.torsion_indices()
    sigma = sigma_family(A, torsion_free, torsion, Part(TORSION), copies, depth=1)
    if A.divisible_indices():
        sigma += sigma_family(A, torsion_free, A.divisible_indices(), Part(TORSION), copies, depth=2)
    gamma1, phi1 = torsion_families(A, budget)
    cert = DecompositionCertificate(tag, A, {'Sigma': sigma, 'Gamma1': gamma1, 'Phi1': phi1})
    layout = sigma_layout(A)
    sigma_group = GroupDescriptor(tuple(A[j] for _, allowed in layout for j in allowed))
    cert.numbers.update({'r0': A.r0, 'family_copies': copies, 'Sigma': sigma_group.label(),
                         'layout': [{'source': i, 'targets': list(allowed)} for i, allowed in layout]})
    _check_family(cert, 'Sigma', A)
    _check_family(cert, 'Gamma1', A)
    cert.check('Sigma <= St(A,T)', all(is_stability_element(s, Part(TORSION), A) for s in sigma))

    induced = {g.label(): induced_on_sigma(g, A) for g in gamma1}
    not_inertial = [name for name, nf in induced.items() if inertial_normal_form(nf).status != INERTIAL]
    cert.check('Gamma1 acts on Sigma by inertial automorphisms', not not_inertial, '; '.join(not_inertial))
    cert.checklist.append(finitary_conjugation_check(A, budget, phi1))

    disagree = [f"{s.label()}^{g.label()}" for s in sigma[:3] for g in gamma1[:3]
                if not conjugate(s, g, A, Part(TORSION)).module_agrees]
    cert.check('module action matches conjugation', not disagree, '; '.join(disagree))

    unfaithful = [g.label() for g in gamma1
                  if induced[g.label()].is_identity() and not equal(g, Identity(), A)]
    cert.numbers['faithful'] = not unfaithful
    if unfaithful:
        cert.numbers['kernel_witnesses'] = unfaithful
    if tag == THEOREM_C_FG_QUOTIENT:
        cert.check('faithful action on Sigma', not unfaithful, '; '.join(unfaithful))

    if A.divisible_indices():
        n_max = n_max or Config.BUDGET
        witnesses = [non_nilpotency_witness(A, s, n) for s in s_values for n in range(1, n_max + 1)]
        zero = [f"s={w['s']} n={w['n']}" for w in witnesses if not w['nonzero']]
        cert.check('Sigma (mu^s - 1)^n != 0', not zero, '; '.join(zero), witness=witnesses)
    return cert


# KI property of Gamma

def ki_check(generators: Sequence[AutoExpr], A: GroupDescriptor,
             budget: Optional[int] = None) -> DecompositionCertificate:
    """Every commutator [g, h] lies in St(A, T) and spans a subgroup normalized by the generators."""
    torsion = A.torsion_indices()
    for g in generators:
        nf = compile_expr(g, A)
        if not trivial_modulo(nf, torsion) or multiplier_over(nf, torsion, ()) is None:
            raise HypothesisError(f"{g.label()} is not trivial on A/T with a power action on T")
    cap = Config.BUDGET if budget is None else budget
    sample = list(generators)[:cap]
    cert = DecompositionCertificate(KI_CHECK, A, {'Gamma': list(generators)})
    commutators = []
    for x, g in enumerate(sample):
        for h in sample[x + 1:]:
            c = commutator(g, h)
            if not equal(c, Identity(), A):
                commutators.append(c)
    cert.families['commutators'] = commutators
    unstable = [c.label() for c in commutators if not is_stability_element(c, Part(TORSION), A)]
    cert.check('[Gamma, Gamma] <= St(A,T)', not unstable, '; '.join(unstable))
    if unstable:
        return cert
    exponents = {}
    violations = []
    for c in commutators:
        H = stab_to_hom(c, Part(TORSION), A)
        c_order = order(c, A) or Config.INVERSE_ORDER_CAP
        for gamma in sample:
            moved = hom_to_stab(conjugate_hom(H, gamma))
            k = next((k for k in range(c_order) if equal(moved, power(c, k), A)), None)
            if k is None:
                violations.append(f"<{c.label()}>^{gamma.label()}")
            else:
                exponents[f"{c.label()}^{gamma.label()}"] = k
    cert.numbers['exponents'] = exponents
    cert.check('<c>^gamma = <c>', not violations, '; '.join(violations))
    return cert


# Witnesses

def stability_choices(modulus: int, primes: Sequence[int]) -> int:
    """|Hom(A/T, Z(modulus))| for A/T generated by v and the d_(q) with q d_(q) = v modulo T."""
    total = 0
    for image_v in range(modulus):
        choices = 1
        for q in primes:
            choices *= sum(1 for t in range(modulus) if (q * t - image_v) % modulus == 0)
        total += choices
    return total


def counterexample_witness(prime_cutoff: int, zero_b: bool = False) -> DecompositionCertificate:
    """Coordinates of v = (b_p + p c_p)_p and d_(p) with p d_(p) = v - b_p, truncated at the cutoff.

    With ``zero_b`` the identity is checked against v - 0, which must fail.
    """
    if prime_cutoff < 2:
        raise HypothesisError("the prime cutoff must be at least 2")
    primes = [int(p) for p in primerange(2, prime_cutoff + 1)]
    G = GroupDescriptor(tuple(atom for p in primes for atom in (Atom(CYCLIC, p, 1), Atom(CYCLIC, p, 2))))
    b = {p: (2 * t, 0) for t, p in enumerate(primes)}
    c = {p: (2 * t + 1, 0) for t, p in enumerate(primes)}
    v = G.element({slot: 1 for slot in b.values()})
    v = v + G.element({c[p]: p for p in primes})
    cert = DecompositionCertificate(COUNTEREXAMPLE, G)
    cert.numbers.update({'primes': primes, 'v': v.label(), 'd': {}})
    for p in primes:
        coords = {c[p]: 1}
        for q in primes:
            if q != p:
                inverse = int(mod_inverse(p, q * q))
                coords[b[q]] = inverse % q
                coords[c[q]] = inverse * q % (q * q)
        d = G.element(coords)
        cert.numbers['d'][str(p)] = d.label()
        b_p = G.zero() if zero_b else G.generator(b[p])
        cert.check(f"{p} d_({p}) = v - b_{p}", d.scale(p) == v - b_p,
                   f"{d.scale(p).label()} vs {(v - b_p).label()}")
        count = stability_choices(G[b[p][0]].modulus, primes)
        cert.check(f"Sigma_{p} = Z({p})", count == p, f"{count} homomorphisms A/T -> <b_{p}>")
        sigma = OnePlusHom(HomData.of(G, Part(FINITE), {c[p]: G.generator(b[p])}))
        fixes_v = apply(sigma, v) == v
        moves_d = apply(sigma, d) - d == G.generator(b[p])
        cert.families.setdefault('Sigma', []).append(sigma)
        cert.check(f"truncated sigma_{p} finitary", bool(is_finitary(sigma, G).value) and fixes_v and moves_d)
    cert.out_of_scope = [
        'A/T is isomorphic to <1/p : p prime> (untruncated)',
        'Sigma is isomorphic to the product of Z(p) over all primes (untruncated)',
        'the all-prime product of the sigma_p is not finitary',
    ]
    return cert


def _divisible_target(A: GroupDescriptor, source: int) -> Tuple[int, Fraction]:
    atom = A[source]
    for j in A.divisible_indices():
        if atom.kind == FREE_Z_OMEGA or A[j].p == atom.p:
            return j, Fraction(1, A[j].p ** (atom.k or 1))
    raise HypothesisError(f"no Pruefer atom of {A.label()} receives {atom.label()}")


def fc_center_witness(A: GroupDescriptor, budget: Optional[int] = None) -> DecompositionCertificate:
    """sigma: b_0 -> b_0 + d and its conjugates under the swaps b_0 <-> b_i are pairwise distinct."""
    budget = Config.BUDGET if budget is None else budget
    source = next((i for i in range(len(A)) if A[i].is_omega and any(
        A[i].kind == FREE_Z_OMEGA or A[j].p == A[i].p for j in A.divisible_indices())), None)
    if source is None:
        raise HypothesisError(f"{A.label()} has no omega summand mapping into a Pruefer atom")
    j, value = _divisible_target(A, source)
    d = A.element({(j, 0): value})
    sigma = OnePlusHom(HomData.of(A, Part(DIVISIBLE), {(source, 0): d}))
    cert = DecompositionCertificate(FC_CENTER, A, {'sigma': [sigma], 'gamma': [], 'conjugates': []})
    b = [A.generator((source, n)) for n in range(budget + 1)]
    for n in range(1, budget + 1):
        swap = OnePlusHom(HomData.of(A, Part(WINDOW), {(source, 0): b[n] - b[0], (source, n): b[0] - b[n]}))
        conj = conjugate(sigma, swap, A, Part(DIVISIBLE))
        cert.families['gamma'].append(swap)
        cert.families['conjugates'].append(conj.normal_form.to_expr())
        moved = [x for x in range(budget + 1) if conj.normal_form.apply(b[x]) != b[x]]
        exact = moved == [n] and conj.normal_form.apply(b[n]) == b[n] + d
        cert.check(f"sigma^gamma_{n} moves exactly b_{n} by d", exact and bool(conj.module_agrees),
                   f"moved {moved}")
    conjugates = cert.families['conjugates']
    clashes = [f"{x + 1}={y + 1}" for x in range(len(conjugates)) for y in range(x + 1, len(conjugates))
               if equal(conjugates[x], conjugates[y], A)]
    cert.check('conjugates pairwise distinct', not clashes, '; '.join(clashes))
    cert.numbers['distinct_conjugates'] = len(conjugates) if not clashes else None
    return cert


def non_finitary_conjugation_witness(A: GroupDescriptor, budget: Optional[int] = None) -> DecompositionCertificate:
    """A finitary gamma = gamma_0 (+) 1 whose commutators with sigma_i: a_i -> a_i + t are pairwise distinct."""
    budget = Config.BUDGET if budget is None else budget
    free = [i for i in range(len(A)) if A[i].kind == FREE_Z_OMEGA]
    cyclic = [i for i in A.torsion_indices() if A[i].is_cyclic]
    if not free or not cyclic:
        raise HypothesisError(f"{A.label()} is not T (+) (+)w Z with cyclic torsion")
    i = free[0]
    big = [j for j in cyclic if A[j].modulus > 2]
    if big:
        target = (big[0], 0)
        gamma = _scaling(A, target, A[big[0]].modulus - 1)
    else:
        slots = _window_slots(A, cyclic, 2)
        if len(slots) < 2:
            raise HypothesisError(f"FAut of the torsion of {A.label()} is trivial")
        target = slots[1]
        gamma = _transvection(A, slots[1], slots[0])
    t = A.generator(target)
    cert = DecompositionCertificate(NON_FINITARY_CONJUGATION, A, {'gamma': [gamma], 'sigma': [], 'commutators': []})
    cert.check('gamma finitary', is_finitary(gamma, A).value)
    for n in range(budget):
        sigma = OnePlusHom(HomData.of(A, Part(TORSION), {(i, n): t}))
        cert.families['sigma'].append(sigma)
        cert.families['commutators'].append(compile_expr(commutator(sigma, gamma), A).to_expr())
    commutators = cert.families['commutators']
    trivial = [n for n, c in enumerate(commutators) if equal(c, Identity(), A)]
    cert.check('commutators nontrivial', not trivial, f"trivial at {trivial}")
    clashes = [f"{x}={y}" for x in range(len(commutators)) for y in range(x + 1, len(commutators))
               if equal(commutators[x], commutators[y], A)]
    cert.check('commutators pairwise distinct', not clashes, '; '.join(clashes))
    return cert


def few_automorphisms_check(A: GroupDescriptor, corpus_size: int = 20,
                            seed: Optional[int] = None) -> DecompositionCertificate:
    """On a pi-divisible A with T a pi-group, inertial automorphisms trivial on A/T are trivial."""
    if A.is_periodic:
        raise HypothesisError(f"{A.label()} is periodic")
    pi = A.torsion_primes
    if not pi:
        raise HypothesisError(f"{A.label()} is torsion-free")
    rough = [f"{a.label()} at {p}" for p in pi for a in A.atoms if not is_p_divisible_atom(a, p)]
    if rough:
        raise HypothesisError(f"{A.label()} is not pi-divisible: {', '.join(rough)}")
    seed = Config.SEED if seed is None else seed
    cert = DecompositionCertificate(FEW_AUTOMORPHISMS, A, {'corpus': []})
    verdicts = {}
    torsion = A.torsion_indices()
    for gamma in corpus(A, seed, corpus_size):
        cert.families['corpus'].append(gamma)
        verdict = is_inertial(gamma, A)
        verdicts[gamma.label()] = verdict.status
        if verdict.status != INERTIAL:
            continue
        nf = compile_expr(gamma, A)
        if trivial_modulo(nf, torsion):
            cert.check(f"{gamma.label()} trivial on A/T and inertial => 1", nf.is_identity())
        try:
            factors = theoremB_factor(gamma, A)
        except HypothesisError as e:
            cert.check(f"{gamma.label()} in Q(A)", False, str(e))
            continue
        cert.check(f"{gamma.label()} in Q(A)", equal(factors.gamma1, Identity(), A))
    cert.numbers.update({'pi': list(pi), 'seed': seed, 'verdicts': verdicts})
    return cert
