"""Scenario commands: list the suite, run one scenario or run them all."""

import logging

from ..report import Report
from ..scenarios import get_scenario, scenario_suite
from . import budget_of, seed_of

logger = logging.getLogger('InertLab.Scenarios')


class Scenarios:
    """The ``scenario list|run NAME|all`` subcommands."""

    def __init__(self, lab):
        self.lab = lab

    def register(self, subparsers):
        parser = subparsers.add_parser('scenario', help="named, reproducible constructions with expected outcomes")
        actions = parser.add_subparsers(dest='action', metavar='<action>')

        listing = self.lab.add_parser(actions, 'list', "list the scenario suite")
        listing.set_defaults(handler=self.list)

        run = self.lab.add_parser(actions, 'run', "run one scenario")
        run.add_argument('name', help="scenario name, see 'scenario list'")
        self._options(run)
        run.set_defaults(handler=self.run)

        everything = self.lab.add_parser(actions, 'all', "run every scenario")
        self._options(everything)
        everything.set_defaults(handler=self.run_all)

    def _options(self, parser):
        parser.add_argument('--primes', type=int, default=None, help="prime cutoff for the counterexample")
        parser.add_argument('--n', type=int, default=None, help="nilpotency exponent n")
        parser.add_argument('--s', type=int, default=None, help="power s of mu")

    def _run_options(self, args):
        return {'primes': args.primes, 'n': args.n, 's': args.s}

    def list(self, args) -> Report:
        report = Report("scenario suite", f"{len(scenario_suite())} scenarios")
        for scenario in scenario_suite():
            report.add_field(scenario.name, scenario.description)
        report.data = {'scenarios': [{'name': s.name, 'description': s.description, 'setup': s.setup}
                                     for s in scenario_suite()]}
        return report

    def run(self, args) -> Report:
        scenario = get_scenario(args.name)
        result = scenario.run(budget_of(args), seed_of(args), **self._run_options(args))
        return result.report()

    def run_all(self, args) -> Report:
        budget, seed = budget_of(args), seed_of(args)
        report = Report("scenario suite", f"seed {seed}, budget {budget}")
        results = []
        for scenario in scenario_suite():
            result = scenario.run(budget, seed, **self._run_options(args))
            logger.info("scenario %s: %s", scenario.name, 'pass' if result.passed else 'fail')
            results.append(result)
            for a in result.assertions:
                report.add_check(f"{result.name}/{a.id}", a.passed, a.detail, provenance=a.provenance)
        report.data = {'seed': seed, 'budget': budget, 'scenarios': [r.to_json() for r in results]}
        return report


def setup(lab):
    """Load the Scenarios commands."""
    lab.add_command(Scenarios(lab))
