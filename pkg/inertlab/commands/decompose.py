"""Decomposition commands: p-groups, periodic groups, Theorem B and C splittings, split lemma, witnesses."""

import logging

from ..decomp import (centralizer_check, factor_periodic, fc_center_witness, few_automorphisms_check, gamma_p,
                      non_finitary_conjugation_witness, periodic_decompose, pgroup_decompose, split_bounded,
                      theoremB_factor, theoremC_split)
from ..inertia import is_inertial
from ..report import Report, certificate_report
from . import budget_of, read_auto, read_group, read_subgroup, seed_of

logger = logging.getLogger('InertLab.CLI')

WITNESSES = ('fc-center', 'non-finitary', 'centralizer', 'few-automorphisms')


class Decompose:
    """The ``decompose`` subcommands."""

    def __init__(self, lab):
        self.lab = lab

    def register(self, subparsers):
        parser = subparsers.add_parser('decompose', help="generators and certificates for decompositions")
        actions = parser.add_subparsers(dest='action', metavar='<action>')

        pgroup = self.lab.add_parser(actions, 'pgroup', "PAut, FAut, Sigma, Phi and Delta of a p-group")
        pgroup.add_argument('--group', required=True, help="group-spec JSON file")
        pgroup.set_defaults(handler=self.pgroup)

        periodic = self.lab.add_parser(actions, 'periodic', "IAut(A) = PAut(A) FAut(A) Delta for periodic A")
        periodic.add_argument('--group', required=True, help="group-spec JSON file")
        periodic.add_argument('--samples', type=int, default=4, help="corpus members factored")
        periodic.set_defaults(handler=self.periodic)

        theorem_c = self.lab.add_parser(actions, 'theorem-c', "IAut_1(A) = Sigma x| Gamma_1 and the action on Sigma")
        theorem_c.add_argument('--group', required=True, help="group-spec JSON file")
        theorem_c.add_argument('--n', type=int, default=None, help="largest n in the non-nilpotency check")
        theorem_c.set_defaults(handler=self.theorem_c)

        for name, handler, help in (
                ('theorem-b', self.theorem_b, "gamma = gamma1 gamma0 with gamma0 in Q(A)"),
                ('factor', self.factor, "gamma = alpha phi delta for periodic A")):
            action = self.lab.add_parser(actions, name, help)
            action.add_argument('--group', required=True, help="group-spec JSON file")
            action.add_argument('--auto', required=True, help="automorphism JSON file")
            action.set_defaults(handler=handler)

        split = self.lab.add_parser(actions, 'split', "B = B1 (+) B2 with B2 finite and B1 <= B0")
        split.add_argument('--group', required=True, help="bounded group-spec JSON file")
        split.add_argument('--sub', required=True, help="generator file of B0")
        split.set_defaults(handler=self.split)

        gamma = self.lab.add_parser(actions, 'gamma-p', "the central automorphism 1 (+) p")
        gamma.add_argument('--group', required=True, help="group-spec JSON file")
        gamma.add_argument('--prime', type=int, required=True, help="a prime in pi_*(A)")
        gamma.set_defaults(handler=self.gamma_p)

        witness = self.lab.add_parser(actions, 'witness', "constructions that witness sharpness")
        witness.add_argument('kind', choices=WITNESSES)
        witness.add_argument('--group', required=True, help="group-spec JSON file")
        witness.add_argument('--samples', type=int, default=12, help="corpus members examined")
        witness.set_defaults(handler=self.witness)

    def pgroup(self, args) -> Report:
        A = read_group(args.group)
        return certificate_report(pgroup_decompose(A, budget_of(args)), "p-group decomposition")

    def periodic(self, args) -> Report:
        A = read_group(args.group)
        cert = periodic_decompose(A, budget_of(args), args.samples, seed_of(args))
        return certificate_report(cert, "periodic decomposition")

    def theorem_c(self, args) -> Report:
        A = read_group(args.group)
        return certificate_report(theoremC_split(A, budget_of(args), n_max=args.n), "torsion-trivial splitting")

    def theorem_b(self, args) -> Report:
        A = read_group(args.group)
        expr = read_auto(args.auto, A)
        factors = theoremB_factor(expr, A)
        report = Report("central factorization", f"gamma = {expr.label()} on {A.label()}")
        report.add_field('gamma1', factors.gamma1.label())
        report.add_field('gamma0', factors.gamma0.label())
        report.add_field('m/n', factors.multiplier)
        report.add_field('exponents', ', '.join(f"{p}^{s}" for p, s in sorted(factors.exponents.items())) or '-')
        report.add_checklist(factors.checks)
        report.data = factors.to_json()
        return report

    def factor(self, args) -> Report:
        A = read_group(args.group)
        expr = read_auto(args.auto, A)
        cert = factor_periodic(expr, A)
        report = certificate_report(cert, "periodic factorization")
        for name in ('alpha', 'phi', 'delta'):
            report.add_field(name, cert.families[name][0].label())
        return report

    def split(self, args) -> Report:
        B = read_group(args.group)
        B0 = read_subgroup(args.sub, B)
        result = split_bounded(B, B0, budget_of(args))
        report = Report("bounded split", f"B = {B.label()}, B0 = {B0.label()}")
        report.add_field('B1 (window)', result.B1.label())
        report.add_field('B2', result.B2.label())
        report.add_field('|B2|', result.order_B2)
        report.add_checklist(result.checks)
        report.data = result.to_json()
        return report

    def gamma_p(self, args) -> Report:
        A = read_group(args.group)
        expr = gamma_p(A, args.prime)
        verdict = is_inertial(expr, A)
        report = Report(f"gamma_({args.prime})", f"on {A.label()}")
        report.add_field('expression', expr.label())
        report.add_field('verdict', verdict.status)
        report.add_check('inertial', verdict.inertial, verdict.case)
        report.data = {'auto': expr.to_json(), 'verdict': verdict.to_json()}
        return report

    def witness(self, args) -> Report:
        A = read_group(args.group)
        budget, seed = budget_of(args), seed_of(args)
        if args.kind == 'fc-center':
            cert = fc_center_witness(A, budget)
        elif args.kind == 'non-finitary':
            cert = non_finitary_conjugation_witness(A, budget)
        elif args.kind == 'centralizer':
            cert = centralizer_check(A, budget, args.samples, seed)
        else:
            cert = few_automorphisms_check(A, args.samples, seed)
        logger.info("witness %s on %s: %s", args.kind, A.label(), 'pass' if cert.passed else 'fail')
        return certificate_report(cert, f"witness {args.kind}")


def setup(lab):
    """Load the Decompose commands."""
    lab.add_command(Decompose(lab))
