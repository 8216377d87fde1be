"""Inertial automorphisms: certificates, a brute-force falsifier and almost-power classification.

gamma is inertial when (H + H gamma)/H is finite for every subgroup H.
The certificate engine dispatches on the torsion-free rank and periodicity
of the ambient group; the falsifier samples finitely generated subgroups.
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional

from sympy import factorint

from .autos import (FINITE, FINITE_INDEX, MOD_D, MOD_T, WHOLE, AutoExpr, BlockSum, Composite, HomData,
                    Identity, Negation, NormalForm, OnePlusHom, PAdicRat, Part, RatMult, compile_expr,
                    finitary_normal_form, multiplier_of, multiplier_over, restrict_normal_form, validate)
from .config import Config
from .groups import INFINITY, LOCALIZED_Q, PRUEFER, Atom, Element, GroupDescriptor, is_critical, unit_root
from .lattice import Subgroup, index, span, subgroup_sum

logger = logging.getLogger('InertLab.Inertia')

INERTIAL = 'INERTIAL'
NOT_INERTIAL = 'NOT_INERTIAL'

FINITE_GROUP = 'finite'
FINITARY = 'finitary'
MULTIPLICATION = 'multiplication'
RECALLS_1 = 'Recalls-1'
RECALLS_2 = 'Recalls-2'
RECALLS_3 = 'Recalls-3'
RECALLS_4 = 'Recalls-4'


@dataclass
class Verdict:
    status: str
    case: str = ''
    certificate: Dict[str, Any] = field(default_factory=dict)
    counterwitness: Optional[Subgroup] = None
    violated: str = ''

    @property
    def inertial(self) -> bool:
        return self.status == INERTIAL

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'status': self.status, 'case': self.case, 'certificate': self.certificate}
        if self.counterwitness is not None:
            data['counterwitness'] = self.counterwitness.to_json()
        if self.violated:
            data['violated'] = self.violated
        return data


def is_inertial(expr: AutoExpr, A: GroupDescriptor) -> Verdict:
    return inertial_normal_form(compile_expr(expr, A))


def inertial_normal_form(nf: NormalForm) -> Verdict:
    A = nf.group
    if A.is_finite:
        return Verdict(INERTIAL, FINITE_GROUP, {'group': A.to_json()})
    finitary = finitary_normal_form(nf)
    if finitary.value:
        return Verdict(INERTIAL, FINITARY, {'image': finitary.witness.to_json(),
                                            'image_order': finitary.witness.order()})
    whole = multiplier_of(nf, WHOLE)
    if whole is not None:
        return Verdict(INERTIAL, MULTIPLICATION, {'multiplier': whole.to_json()})
    if A.r0 == INFINITY:
        logger.debug("dispatch %s: infinite torsion-free rank", A.label())
        return _infinite_rank(nf)
    if A.r0 > 0:
        logger.debug("dispatch %s: finite positive torsion-free rank", A.label())
        return _finite_rank(nf)
    logger.debug("dispatch %s: periodic", A.label())
    return _periodic(nf)


def _infinite_rank(nf: NormalForm) -> Verdict:
    found = multiplier_of(nf, FINITE_INDEX)
    if found is None or found.rational is None or found.rational.denominator != 1:
        return Verdict(NOT_INERTIAL, RECALLS_1,
                       violated="no integer m and finite-index A0 with gamma = m on A0")
    return Verdict(INERTIAL, RECALLS_1, {'m': int(found.rational), 'A0': found.to_json()})


def _finite_rank(nf: NormalForm) -> Verdict:
    A = nf.group
    on_quotient = multiplier_of(nf, MOD_T)
    if on_quotient is None or on_quotient.rational is None:
        return Verdict(NOT_INERTIAL, RECALLS_2, violated="gamma is not a rational multiplication on A/T")
    r = on_quotient.rational
    pi = sorted(int(p) for p in factorint(abs(r.numerator * r.denominator)))
    unbounded = [p for p in pi if any(a.kind == PRUEFER and a.p == p for a in A.atoms)]
    if unbounded:
        return Verdict(NOT_INERTIAL, RECALLS_2,
                       certificate={'m/n': str(r), 'pi': pi},
                       violated=f"A_pi is unbounded at p = {unbounded[0]}")
    V = []
    for i in A.torsion_free_indices():
        e = A.generator((i, 0))
        torsion = (nf.apply(e) - e.scale_rational(r)).project(A.torsion_indices())
        V.append({'atom': i, 'k': int(torsion.order())})
    # A/V is T extended by finite groups and one Z(q^oo) per Q_(q) with q outside pi
    extra: Dict[int, int] = {}
    for i in A.torsion_free_indices():
        atom = A[i]
        if atom.kind == LOCALIZED_Q and atom.p not in pi:
            extra[atom.p] = extra.get(atom.p, 0) + 1
    per_prime = {}
    for p in sorted(set(A.torsion_primes) | set(extra)):
        atoms = A.primary_indices([p])
        local = restrict_normal_form(nf, atoms, [(Atom(PRUEFER, p), r)] * extra.get(p, 0))
        verdict = p_group_verdict(local)
        per_prime[str(p)] = verdict.to_json()
        if not verdict.inertial:
            return Verdict(NOT_INERTIAL, RECALLS_2,
                           certificate={'m/n': str(r), 'pi': pi, 'V': V, 'quotient': per_prime},
                           violated=f"induced action on the {p}-component of A/V is not inertial: "
                                    f"{verdict.violated}")
    return Verdict(INERTIAL, RECALLS_2, {'m/n': str(r), 'pi': pi, 'V': V, 'quotient': per_prime})


def _periodic(nf: NormalForm) -> Verdict:
    A = nf.group
    if len(A.torsion_primes) == 1:
        return p_group_verdict(nf)
    per_prime = {}
    for p in A.torsion_primes:
        verdict = p_group_verdict(restrict_normal_form(nf, A.primary_indices([p])))
        per_prime[str(p)] = verdict.to_json()
        if not verdict.inertial:
            return Verdict(NOT_INERTIAL, RECALLS_3, {'per_prime': per_prime},
                           violated=f"not inertial on the {p}-component: {verdict.violated}")
    return Verdict(INERTIAL, RECALLS_3, {'per_prime': per_prime})


def p_group_verdict(nf: NormalForm) -> Verdict:
    """Inertia on a p-group: multiplication on a finite-index subgroup, or the critical case."""
    A = nf.group
    if A.is_finite:
        return Verdict(INERTIAL, FINITE_GROUP, {'group': A.to_json()})
    found = multiplier_of(nf, FINITE_INDEX)
    if found is not None:
        return Verdict(INERTIAL, RECALLS_4, {'alpha': found.to_json()})
    p = A[0].p
    if not is_critical(A, p):
        return Verdict(NOT_INERTIAL, RECALLS_4,
                       violated="no multiplication on a finite-index subgroup and the group is not critical")
    divisible = A.divisible_indices()
    rest = tuple(i for i in range(len(A)) if i not in divisible)
    on_d = multiplier_over(nf, divisible, ())
    on_quotient = multiplier_over(nf, rest, divisible, MOD_D, finite_index=True)
    if on_d is None or on_quotient is None:
        side = 'D' if on_d is None else 'A1/D'
        return Verdict(NOT_INERTIAL, RECALLS_4, violated=f"critical case: no multiplication on {side}")
    return Verdict(INERTIAL, RECALLS_4, {'critical': True, 'on_D': on_d.to_json(), 'on_A1/D': on_quotient.to_json()})


# Falsifier

@dataclass
class FalsifyResult:
    witness: Optional[Subgroup]
    trials: int
    seed: int

    def to_json(self) -> Dict[str, Any]:
        return {
            'witness': self.witness.to_json() if self.witness is not None else None,
            'trials': self.trials,
            'seed': self.seed,
        }


def _random_coordinate(rng: random.Random, atom: Atom, bound: int) -> Fraction:
    if atom.is_cyclic:
        return Fraction(rng.randrange(atom.modulus))
    if atom.kind == PRUEFER:
        depth = rng.randint(0, bound)
        return Fraction(rng.randrange(atom.p ** depth), atom.p ** depth)
    if atom.kind == LOCALIZED_Q:
        depth = rng.randint(0, bound)
        limit = atom.p ** bound
        return Fraction(rng.randint(-limit, limit), atom.p ** depth)
    limit = 2 ** bound
    return Fraction(rng.randint(-limit, limit))


def random_element(rng: random.Random, A: GroupDescriptor, copies: int = 3, bound: int = 4) -> Element:
    coords = {}
    for i, atom in enumerate(A.atoms):
        for c in range(copies if atom.is_omega else 1):
            if rng.random() < 0.6:
                coords[(i, c)] = _random_coordinate(rng, atom, bound)
    return A.element(coords)


def quotient_is_infinite(nf: NormalForm, H: Subgroup) -> bool:
    """|(H + H gamma)/H| = oo, decided exactly."""
    moved = span(nf.group, [nf.apply(g) for g in H.generators])
    return index(H, subgroup_sum(H, moved)) == INFINITY


def inertia_falsify(expr: AutoExpr, A: GroupDescriptor, trials: Optional[int] = None,
                    seed: Optional[int] = None, bound: Optional[int] = None) -> FalsifyResult:
    """Search finitely generated H with (H + H gamma)/H infinite; the first hit wins."""
    trials = Config.FALSIFY_TRIALS if trials is None else trials
    seed = Config.SEED if seed is None else seed
    bound = Config.COEFF_BOUND if bound is None else bound
    if A.is_finite:
        return FalsifyResult(None, 0, seed)
    nf = compile_expr(expr, A)
    rng = random.Random(seed)
    for trial in range(trials):
        gens = [random_element(rng, A, bound=bound) for _ in range(rng.randint(1, 3))]
        H = span(A, [g for g in gens if g])
        if quotient_is_infinite(nf, H):
            logger.info("falsifier hit on trial %d: %s", trial, H.label())
            return FalsifyResult(H, trial + 1, seed)
    return FalsifyResult(None, trials, seed)


def check(expr: AutoExpr, A: GroupDescriptor, trials: Optional[int] = None,
          seed: Optional[int] = None) -> Verdict:
    """Certificate verdict, upgraded by a falsifier witness when the certificate is silent."""
    verdict = is_inertial(expr, A)
    if verdict.status == INERTIAL:
        return verdict
    found = inertia_falsify(expr, A, trials, seed)
    if found.witness is not None:
        verdict.status = NOT_INERTIAL
        verdict.counterwitness = found.witness
    return verdict


def is_almost_power(expr: AutoExpr, A: GroupDescriptor) -> bool:
    """gamma or -gamma finitary when r0 = oo; inertial otherwise."""
    nf = compile_expr(expr, A)
    if A.r0 == INFINITY:
        negated = nf.then(compile_expr(Negation(), A))
        return bool(finitary_normal_form(nf).value or finitary_normal_form(negated).value)
    return inertial_normal_form(nf).inertial


# Corpus of structured automorphisms

def _unit_choices(atom: Atom) -> List[Fraction]:
    if atom.is_cyclic:
        n = atom.modulus
        return [Fraction(u) for u in range(1, min(n, 12)) if u % atom.p]
    if atom.kind == PRUEFER:
        small = [Fraction(u) for u in range(1, 8) if u % atom.p]
        return small + [Fraction(1, u) for u in range(2, 5) if u % atom.p]
    if atom.kind == LOCALIZED_Q:
        return [Fraction(1), Fraction(-1), Fraction(atom.p), Fraction(1, atom.p)]
    return [Fraction(1), Fraction(-1)]


def _scalar_block(atom: Atom, q: Fraction) -> AutoExpr:
    if atom.is_torsion:
        return PAdicRat(atom.p, q.numerator, q.denominator)
    if q == -1:
        return Negation()
    return RatMult(q.numerator, q.denominator) if q != 1 else Identity()


def _random_perturbation(rng: random.Random, A: GroupDescriptor) -> Optional[AutoExpr]:
    """1 + phi with phi from a finite source into the torsion, image finite."""
    sources = [i for i, a in enumerate(A.atoms) if a.kind != PRUEFER]
    targets = A.torsion_indices()
    if not sources or not targets:
        return None
    i = rng.choice(sources)
    j = rng.choice(targets)
    if i == j and A[i].is_cyclic and not A[i].is_omega:
        return None
    source, target = A[i], A[j]
    if source.is_cyclic and source.p != target.p:
        return None
    if source.kind == LOCALIZED_Q and target.p == source.p:
        return None
    copy = 1 if source.is_omega and i == j else 0
    if target.kind == PRUEFER:
        k = source.k if source.is_cyclic else rng.randint(1, 3)
        value = Fraction(rng.randrange(1, target.p ** k), target.p ** k)
    else:
        value = Fraction(rng.randrange(1, target.modulus))
        if source.is_cyclic:
            value = Fraction(int(value) * target.p ** max(0, target.k - source.k) % target.modulus)
    image = A.element({(j, 0): value})
    if not image:
        return None
    return OnePlusHom(HomData.of(A, Part(FINITE), {(i, copy): image}))


def corpus(A: GroupDescriptor, seed: int = 0, size: int = 20) -> Iterator[AutoExpr]:
    """Deterministic stream of valid structured automorphisms of A."""
    rng = random.Random(seed)
    base: List[AutoExpr] = [Identity(), Negation()]
    for p in A.torsion_primes:
        base.append(PAdicRat(p, unit_root(p) if p != 2 else 5, 1))
    for m, n in ((2, 1), (1, 2), (3, 1), (3, 2), (5, 1)):
        expr = RatMult(m, n)
        if validate(expr, A).valid:
            base.append(expr)
    produced = 0
    for expr in base:
        if produced == size:
            return
        produced += 1
        yield expr
    attempts = 0
    while produced < size and attempts < 50 * size:
        attempts += 1
        kind = rng.random()
        if kind < 0.4:
            blocks = {i: _scalar_block(a, rng.choice(_unit_choices(a))) for i, a in enumerate(A.atoms)}
            expr = BlockSum.of({i: b for i, b in blocks.items() if not isinstance(b, Identity)})
        elif kind < 0.7:
            expr = _random_perturbation(rng, A)
        else:
            expr = Composite([rng.choice(base), _random_perturbation(rng, A) or Identity()])
        if expr is None:
            continue
        report = validate(expr, A)
        if report.valid:
            produced += 1
            yield expr
