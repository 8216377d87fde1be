"""Inertia commands: certificate verdicts, the falsifier and almost-power classification."""

import logging

from ..config import Config
from ..inertia import INERTIAL, NOT_INERTIAL, check, inertia_falsify, is_almost_power
from ..report import Report
from . import read_auto, read_group, seed_of

logger = logging.getLogger('InertLab.CLI')

VERDICTS = (INERTIAL, NOT_INERTIAL)


class Inertia:
    """The ``inertia check|falsify|almost-power`` subcommands."""

    def __init__(self, lab):
        self.lab = lab

    def register(self, subparsers):
        parser = subparsers.add_parser('inertia', help="decide whether an automorphism is inertial")
        actions = parser.add_subparsers(dest='action', metavar='<action>')

        check_parser = self.lab.add_parser(actions, 'check', "certificate verdict, upgraded by the falsifier")
        self._io_arguments(check_parser)
        check_parser.add_argument('--expect', choices=VERDICTS, default=INERTIAL,
                                  help="verdict that counts as a pass (default INERTIAL)")
        check_parser.set_defaults(handler=self.check)

        falsify_parser = self.lab.add_parser(actions, 'falsify', "search subgroups H with (H + H gamma)/H infinite")
        self._io_arguments(falsify_parser)
        falsify_parser.add_argument('--expect-witness', action='store_true',
                                    help="pass when a witness is found instead of when none is")
        falsify_parser.set_defaults(handler=self.falsify)

        almost_parser = self.lab.add_parser(actions, 'almost-power', "is gamma an almost-power automorphism")
        self._io_arguments(almost_parser)
        almost_parser.set_defaults(handler=self.almost_power)

    def _io_arguments(self, parser):
        parser.add_argument('--group', required=True, help="group-spec JSON file")
        parser.add_argument('--auto', required=True, help="automorphism JSON file")
        parser.add_argument('--trials', type=int, default=None,
                            help=f"subgroups tried by the falsifier (default {Config.FALSIFY_TRIALS})")

    def _report(self, title: str, A, expr) -> Report:
        report = Report(title, f"gamma = {expr.label()} on {A.label()}")
        report.data = {'group': A.to_json(), 'auto': expr.to_json()}
        return report

    def check(self, args) -> Report:
        A = read_group(args.group)
        expr = read_auto(args.auto, A)
        verdict = check(expr, A, args.trials, seed_of(args))
        logger.info("verdict for %s: %s (%s)", expr.label(), verdict.status, verdict.case)
        report = self._report("inertia check", A, expr)
        report.add_field('verdict', verdict.status)
        report.add_field('case', verdict.case or '-')
        if verdict.counterwitness is not None:
            report.add_field('counterwitness', verdict.counterwitness.label())
        if verdict.violated:
            report.add_field('violated', verdict.violated)
        report.add_check(f"verdict is {args.expect}", verdict.status == args.expect)
        report.data['verdict'] = verdict.to_json()
        return report

    def falsify(self, args) -> Report:
        A = read_group(args.group)
        expr = read_auto(args.auto, A)
        result = inertia_falsify(expr, A, args.trials, seed_of(args))
        report = self._report("inertia falsify", A, expr)
        report.add_field('trials', result.trials)
        report.add_field('seed', result.seed)
        report.add_field('witness', result.witness.label() if result.witness is not None else 'none')
        found = result.witness is not None
        if args.expect_witness:
            report.add_check('witness found', found)
        else:
            report.add_check('no witness found', not found)
        report.data['falsify'] = result.to_json()
        return report

    def almost_power(self, args) -> Report:
        A = read_group(args.group)
        expr = read_auto(args.auto, A)
        answer = is_almost_power(expr, A)
        report = self._report("almost-power", A, expr)
        report.add_field('almost-power', answer)
        report.add_check('almost-power', answer)
        report.data['almost_power'] = answer
        return report


def setup(lab):
    """Load the Inertia commands."""
    lab.add_command(Inertia(lab))
