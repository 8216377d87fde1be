"""Named scenarios: reproducible bundles of constructions and their expected outcomes.

Every assertion records where its expectation comes from:
``[PAPER]`` for a published statement, ``[TRIVIAL]`` for a direct check and
``[DERIVED]`` for a value computed independently of the tested operation.
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional

from .autos import (DIVISIBLE, TORSION, BlockSum, HomData, Identity, Negation, OnePlusHom, PAdicRat, Part,
                    RatMult, conjugate, equal, power)
from .config import Config
from .decomp import (PROP51_CRIT, THEOREM_C_BOUNDED_T, THEOREM_C_FG_QUOTIENT, counterexample_witness, delta,
                     fc_center_witness, few_automorphisms_check, gamma_p, ki_check, non_nilpotency_witness,
                     periodic_decompose, pgroup_decompose, q_generators, q_is_free, split_bounded,
                     theoremB_factor, theoremC_split)
from .errors import HypothesisError, UsageError
from .groups import (CYCLIC, CYCLIC_OMEGA, FREE_Z, LOCALIZED_Q, PRUEFER, Atom, GroupDescriptor,
                     group_from_json)
from .inertia import INERTIAL, corpus, is_inertial
from .lattice import span
from .report import Report

logger = logging.getLogger('InertLab.Scenarios')

PAPER = 'PAPER'
TRIVIAL = 'TRIVIAL'
DERIVED = 'DERIVED'


def group_doc(*atoms: Atom) -> Dict[str, Any]:
    return GroupDescriptor(atoms).to_json()


@dataclass
class Assertion:
    id: str
    operation: str
    expected: Any
    actual: Any
    provenance: str
    detail: str = ''

    @property
    def passed(self) -> bool:
        return self.expected == self.actual

    def to_json(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'operation': self.operation,
            'expected': self.expected,
            'actual': self.actual,
            'provenance': self.provenance,
            'passed': self.passed,
            'detail': self.detail,
        }


@dataclass
class ScenarioContext:
    """Run options and the assertions collected so far."""

    budget: int
    seed: int
    options: Dict[str, Any] = field(default_factory=dict)
    assertions: List[Assertion] = field(default_factory=list)

    def option(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        return default if value is None else value

    def expect(self, id: str, operation: str, expected: Any, actual: Any, provenance: str,
               detail: str = '') -> Assertion:
        assertion = Assertion(id, operation, expected, actual, provenance, detail)
        self.assertions.append(assertion)
        if not assertion.passed:
            logger.warning("assertion %s failed: expected %r, got %r", id, expected, actual)
        return assertion


@dataclass
class ScenarioResult:
    name: str
    seed: int
    budget: int
    assertions: List[Assertion]

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def to_json(self) -> Dict[str, Any]:
        return {
            'scenario': self.name,
            'seed': self.seed,
            'budget': self.budget,
            'passed': self.passed,
            'assertions': [a.to_json() for a in self.assertions],
        }

    def report(self) -> Report:
        report = Report(f"scenario {self.name}", f"seed {self.seed}, budget {self.budget}")
        for a in self.assertions:
            detail = a.detail or (f"expected {a.expected!r}, got {a.actual!r}" if not a.passed else '')
            report.add_check(a.id, a.passed, detail, provenance=a.provenance)
        report.data = self.to_json()
        return report


@dataclass
class Scenario:
    name: str
    description: str
    setup: Dict[str, Any]
    body: Callable[['Scenario', ScenarioContext], None]

    def group(self, key: str) -> GroupDescriptor:
        return group_from_json(self.setup[key])

    def run(self, budget: Optional[int] = None, seed: Optional[int] = None, **options) -> ScenarioResult:
        ctx = ScenarioContext(Config.BUDGET if budget is None else budget,
                              Config.SEED if seed is None else seed, options)
        logger.info("running scenario %s (seed %d, budget %d)", self.name, ctx.seed, ctx.budget)
        self.body(self, ctx)
        return ScenarioResult(self.name, ctx.seed, ctx.budget, sorted(ctx.assertions, key=lambda a: a.id))


SCENARIOS: Dict[str, Scenario] = {}


def scenario(name: str, description: str, **setup: Dict[str, Any]):
    """Register a scenario body under a name."""
    def decorator(body: Callable[[Scenario, ScenarioContext], None]):
        SCENARIOS[name] = Scenario(name, description, setup, body)
        return body
    return decorator


def scenario_suite() -> List[Scenario]:
    return [SCENARIOS[name] for name in sorted(SCENARIOS)]


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise UsageError(f"unknown scenario '{name}', see 'scenario list'") from None


def _failed(items: Iterable[Any]) -> str:
    return '; '.join(i.name for i in items if i.passed is False)


# Scenarios

@scenario('few-automorphisms', 'inertial automorphisms of Z(p^oo) (+) Q_(p) are +-1',
          p2=group_doc(Atom(PRUEFER, 2), Atom(LOCALIZED_Q, 2)),
          p3=group_doc(Atom(PRUEFER, 3), Atom(LOCALIZED_Q, 3)),
          p5=group_doc(Atom(PRUEFER, 5), Atom(LOCALIZED_Q, 5)))
def _few_automorphisms(sc: Scenario, ctx: ScenarioContext):
    size = ctx.option('corpus', 100)
    for p in (2, 3, 5):
        A = sc.group(f'p{p}')
        cert = few_automorphisms_check(A, size, ctx.seed)
        ctx.expect(f"p{p}.certificate", 'few_automorphisms_check', True, cert.passed, PAPER,
                   _failed(cert.checklist))
        ctx.expect(f"p{p}.identity", 'is_inertial', INERTIAL, is_inertial(Identity(), A).status, PAPER)
        ctx.expect(f"p{p}.negation", 'is_inertial', INERTIAL, is_inertial(Negation(), A).status, PAPER)
        others = [g for g in corpus(A, ctx.seed, size)
                  if not equal(g, Identity(), A) and not equal(g, Negation(), A)]
        inertial = [g.label() for g in others if is_inertial(g, A).status == INERTIAL]
        ctx.expect(f"p{p}.others", 'is_inertial', [], inertial, PAPER, f"{len(others)} corpus members")


@scenario('critical-pgroup', 'Sigma, Phi and Delta for a critical 2-group',
          A=group_doc(Atom(PRUEFER, 2), Atom(CYCLIC_OMEGA, 2, 2)))
def _critical_pgroup(sc: Scenario, ctx: ScenarioContext):
    A = sc.group('A')
    cert = pgroup_decompose(A, ctx.budget)
    ctx.expect('tag', 'pgroup_decompose', PROP51_CRIT, cert.tag, PAPER)
    ctx.expect("m'", 'pgroup_decompose', 2, cert.numbers["m'"], PAPER)
    ctx.expect("e'", 'pgroup_decompose', 2, cert.numbers["e'"], PAPER)
    for item in cert.checklist:
        ctx.expect(f"check.{item.name}", 'pgroup_decompose', item.passed is not False, True, DERIVED, item.detail)
    for n in (3, 5, 7):
        wrong, disagree = [], []
        for sigma in cert.families['Sigma']:
            result = conjugate(sigma, delta(A, 2, n), A, Part(DIVISIBLE))
            if not equal(result.expr, power(sigma, n), A):
                wrong.append(sigma.label())
            if not (result.module_agrees and result.power_agrees):
                disagree.append(sigma.label())
        ctx.expect(f"delta_{n}.power", 'conjugate', [], wrong, PAPER)
        ctx.expect(f"delta_{n}.closed-forms", 'conjugate', [], disagree, DERIVED)


@scenario('paut-faut', 'order of PAut n FAut for non-critical p-groups',
          a232=group_doc(Atom(CYCLIC, 2, 3), Atom(CYCLIC_OMEGA, 2, 2)),
          a321=group_doc(Atom(CYCLIC, 3, 2), Atom(CYCLIC_OMEGA, 3, 1)),
          pruefer=group_doc(Atom(PRUEFER, 3)))
def _paut_faut(sc: Scenario, ctx: ScenarioContext):
    for key, expected in (('a232', 2), ('a321', 3)):
        cert = pgroup_decompose(sc.group(key), ctx.budget)
        ctx.expect(f"{key}.order", 'pgroup_decompose', expected, cert.numbers['PAut_n_FAut'], PAPER)
        ctx.expect(f"{key}.checks", 'pgroup_decompose', True, cert.passed, DERIVED, _failed(cert.checklist))
    cert = pgroup_decompose(sc.group('pruefer'), ctx.budget)
    ctx.expect('pruefer.order', 'pgroup_decompose', 1, cert.numbers['PAut_n_FAut'], TRIVIAL)
    ctx.expect('pruefer.faut', 'pgroup_decompose', 0, len(cert.families['FAut']), TRIVIAL)


@scenario('fc-center', 'conjugates of one stability element by copy swaps are pairwise distinct',
          A=group_doc(Atom(PRUEFER, 2), Atom(CYCLIC_OMEGA, 2, 1)))
def _fc_center(sc: Scenario, ctx: ScenarioContext):
    cert = fc_center_witness(sc.group('A'), ctx.budget)
    ctx.expect('distinct', 'fc_center_witness', ctx.budget, cert.numbers['distinct_conjugates'], PAPER)
    ctx.expect('checks', 'fc_center_witness', True, cert.passed, DERIVED, _failed(cert.checklist))


@scenario('theorem-b-factor', 'gamma = gamma1 gamma0 with gamma0 in Q(A)',
          A=group_doc(Atom(CYCLIC, 3, 1), Atom(LOCALIZED_Q, 3)),
          Z=group_doc(Atom(FREE_Z)),
          unbounded=group_doc(Atom(PRUEFER, 2), Atom(LOCALIZED_Q, 2)),
          ki=group_doc(Atom(PRUEFER, 5), Atom(FREE_Z)))
def _theorem_b(sc: Scenario, ctx: ScenarioContext):
    A = sc.group('A')
    g3 = gamma_p(A, 3)
    ctx.expect('gamma_3.inertial', 'is_inertial', INERTIAL, is_inertial(g3, A).status, PAPER)
    ctx.expect('Q(A).free', 'q_is_free', True, q_is_free(A).passed, PAPER)

    square = theoremB_factor(power(g3, 2), A)
    ctx.expect('square.gamma1', 'theoremB_factor', True, equal(square.gamma1, Identity(), A), TRIVIAL)
    ctx.expect('square.gamma0', 'theoremB_factor', True, equal(square.gamma0, power(g3, 2), A), TRIVIAL)

    mixed = BlockSum.of({0: PAdicRat(3, 2, 1), 1: RatMult(3, 1)})
    factors = theoremB_factor(mixed, A)
    ctx.expect('mixed.gamma1', 'theoremB_factor', True,
               equal(factors.gamma1, BlockSum.of({0: PAdicRat(3, 2, 1)}), A), DERIVED)
    ctx.expect('mixed.gamma0', 'theoremB_factor', True, equal(factors.gamma0, g3, A), DERIVED)

    Z = sc.group('Z')
    negated = theoremB_factor(Negation(), Z)
    ctx.expect('Z.gamma1', 'theoremB_factor', True, equal(negated.gamma1, Identity(), Z), TRIVIAL)
    ctx.expect('Z.gamma0', 'theoremB_factor', True, equal(negated.gamma0, Negation(), Z), TRIVIAL)
    ctx.expect('Z.Q', 'q_generators', ['-1'], [g.label() for g in q_generators(Z)], TRIVIAL)

    try:
        gamma_p(sc.group('unbounded'), 2)
        outcome = 'ok'
    except HypothesisError:
        outcome = 'HypothesisError'
    ctx.expect('unbounded.gamma_2', 'gamma_p', 'HypothesisError', outcome, PAPER)

    round_trips, failures = 0, []
    for gamma in corpus(A, ctx.seed, ctx.option('corpus', 100)):
        if is_inertial(gamma, A).status != INERTIAL:
            continue
        round_trips += 1
        if not theoremB_factor(gamma, A).passed:
            failures.append(gamma.label())
    ctx.expect('round-trip', 'theoremB_factor', [], failures, DERIVED, f"{round_trips} inertial members")

    B = sc.group('ki')
    sigma = OnePlusHom(HomData.of(B, Part(TORSION), {(1, 0): B.element({(0, 0): Fraction(1, 5)})}))
    ki = ki_check([PAdicRat(5, 2, 1), sigma], B, ctx.budget)
    ctx.expect('ki.normal', 'ki_check', True, ki.passed, DERIVED, _failed(ki.checklist))
    trivial = ki_check([Identity()], B, ctx.budget)
    ctx.expect('ki.identity', 'ki_check', 0, len(trivial.families['commutators']), TRIVIAL)


@scenario('counterexample', 'coordinates of v and d_(p) in (+) Z(p) (+) Z(p^2)')
def _counterexample(sc: Scenario, ctx: ScenarioContext):
    cert = counterexample_witness(ctx.option('primes', 13))
    for item in cert.checklist:
        provenance = PAPER if ' d_(' in item.name else DERIVED
        ctx.expect(item.name, 'counterexample_witness', True, item.passed, provenance, item.detail)
    control = counterexample_witness(2, zero_b=True)
    ctx.expect('control.zero-b', 'counterexample_witness', False, control.checklist[0].passed, TRIVIAL,
               control.checklist[0].detail)


@scenario('non-nilpotent', 'Sigma (mu^s - 1)^n is never zero for mu = 2 (+) 1',
          A=group_doc(Atom(PRUEFER, 3), Atom(FREE_Z)))
def _non_nilpotent(sc: Scenario, ctx: ScenarioContext):
    A = sc.group('A')
    s_values = [ctx.option('s')] if ctx.option('s') else [1, 2]
    n_values = [ctx.option('n')] if ctx.option('n') else list(range(1, ctx.budget + 1))
    for s in s_values:
        for n in n_values:
            witness = non_nilpotency_witness(A, s, n)
            ctx.expect(f"s={s}.n={n}", 'non_nilpotency_witness', True, witness['nonzero'], PAPER,
                       f"{witness['sigma']} gives {witness['element']}")


@scenario('split-bounded', 'B = B1 (+) B2 with B2 finite and B1 <= B0',
          omega=group_doc(Atom(CYCLIC_OMEGA, 2, 1)),
          finite=group_doc(Atom(CYCLIC, 2, 2), Atom(CYCLIC, 2, 1)),
          mixed=group_doc(Atom(CYCLIC, 2, 2), Atom(CYCLIC_OMEGA, 2, 1)),
          odd=group_doc(Atom(CYCLIC, 3, 1), Atom(CYCLIC, 3, 2)))
def _split_bounded(sc: Scenario, ctx: ScenarioContext):
    B = sc.group('omega')
    copies = ctx.budget
    e = [B.generator((0, c)) for c in range(copies)]
    kernel = span(B, [e[0] + e[1]] + e[2:])
    split = split_bounded(B, kernel, copies)
    ctx.expect('kernel.checks', 'split_bounded', True, split.passed, DERIVED)
    ctx.expect('kernel.|B2|', 'split_bounded', 2, split.order_B2, DERIVED)
    whole = split_bounded(B, span(B, e), copies)
    ctx.expect('whole.|B2|', 'split_bounded', 1, whole.order_B2, TRIVIAL)

    F = sc.group('finite')
    small = split_bounded(F, span(F, [F.element({(0, 0): 2})]), copies)
    ctx.expect('finite.checks', 'split_bounded', True, small.passed, DERIVED)
    ctx.expect('finite.|B1|*|B2|', 'split_bounded', 8, small.B1.order() * small.order_B2, DERIVED)

    rng = random.Random(ctx.seed)
    failures = []
    for trial in range(ctx.option('trials', 50)):
        key = rng.choice(('omega', 'finite', 'mixed', 'odd'))
        G = sc.group(key)
        window = min(copies, 4)
        slots = [(i, c) for i, a in enumerate(G.atoms) for c in range(window if a.is_omega else 1)]
        gens = [G.element({s: rng.randrange(G[s[0]].modulus) for s in slots}) for _ in range(rng.randint(1, 3))]
        result = split_bounded(G, span(G, gens), window)
        if not result.passed:
            failures.append(f"{trial}:{key}")
    ctx.expect('random.checks', 'split_bounded', [], failures, DERIVED)


@scenario('theorem-a', 'IAut(A) = PAut(A) FAut(A) Delta for periodic A',
          finite=group_doc(Atom(CYCLIC, 2, 1), Atom(CYCLIC, 3, 2)),
          reduced=group_doc(Atom(CYCLIC_OMEGA, 2, 1), Atom(PRUEFER, 3)),
          critical=group_doc(Atom(PRUEFER, 2), Atom(CYCLIC_OMEGA, 2, 2), Atom(CYCLIC, 3, 1)))
def _theorem_a(sc: Scenario, ctx: ScenarioContext):
    samples = ctx.option('samples', 4)
    for key, pi, has_delta, provenance in (('finite', [2, 3], False, TRIVIAL),
                                           ('reduced', [2, 3], False, PAPER),
                                           ('critical', [3], True, DERIVED)):
        cert = periodic_decompose(sc.group(key), ctx.budget, samples, ctx.seed)
        ctx.expect(f"{key}.pi", 'periodic_decompose', pi, cert.numbers['pi'], provenance)
        ctx.expect(f"{key}.delta", 'periodic_decompose', has_delta, bool(cert.families['Delta']), provenance)
        ctx.expect(f"{key}.checks", 'periodic_decompose', True, cert.passed, DERIVED, _failed(cert.checklist))


@scenario('theorem-c', 'IAut_1(A) = Sigma x| Gamma_1 and the action of Gamma_1 on Sigma',
          z12=group_doc(Atom(CYCLIC, 2, 2), Atom(CYCLIC, 3, 1), Atom(LOCALIZED_Q, 2)),
          pruefer=group_doc(Atom(PRUEFER, 3), Atom(FREE_Z)),
          z2=group_doc(Atom(CYCLIC, 2, 1), Atom(FREE_Z)))
def _theorem_c(sc: Scenario, ctx: ScenarioContext):
    n_max = ctx.option('n', ctx.budget)
    z12 = theoremC_split(sc.group('z12'), ctx.budget, n_max=n_max)
    ctx.expect('z12.tag', 'theoremC_split', THEOREM_C_BOUNDED_T, z12.tag, PAPER)
    ctx.expect('z12.faithful', 'theoremC_split', False, z12.numbers['faithful'], PAPER)
    ctx.expect('z12.Sigma', 'theoremC_split', 'Z(3)', z12.numbers['Sigma'], PAPER)
    ctx.expect('z12.checks', 'theoremC_split', True, z12.passed, DERIVED, _failed(z12.checklist))
    pruefer = theoremC_split(sc.group('pruefer'), ctx.budget, n_max=n_max)
    ctx.expect('pruefer.tag', 'theoremC_split', THEOREM_C_FG_QUOTIENT, pruefer.tag, PAPER)
    ctx.expect('pruefer.faithful', 'theoremC_split', True, pruefer.numbers['faithful'], PAPER)
    ctx.expect('pruefer.checks', 'theoremC_split', True, pruefer.passed, PAPER, _failed(pruefer.checklist))
    z2 = theoremC_split(sc.group('z2'), ctx.budget, n_max=n_max)
    ctx.expect('z2.Sigma', 'theoremC_split', 'Z(2)', z2.numbers['Sigma'], DERIVED)
    ctx.expect('z2.|Sigma family|', 'theoremC_split', 1, len(z2.families['Sigma']), DERIVED)
    ctx.expect('z2.Gamma1', 'theoremC_split', 0, len(z2.families['Gamma1']), DERIVED)
