"""Structural invariants of a group: r0, exp/eexp per prime, critical primes and pi_*."""

from ..groups import nat_or_inf_json, structural_report
from ..report import Report
from . import read_group


class Structure:
    """The ``eexp`` subcommand."""

    def __init__(self, lab):
        self.lab = lab

    def register(self, subparsers):
        parser = self.lab.add_parser(subparsers, 'eexp', "structural report of a group")
        parser.add_argument('--group', required=True, help="group-spec JSON file")
        parser.set_defaults(handler=self.eexp)

    def eexp(self, args) -> Report:
        A = read_group(args.group)
        structure = structural_report(A)
        report = Report("structural report", f"group: {A.label()}")
        report.add_field('r0', nat_or_inf_json(structure.r0))
        for p in sorted(structure.exponent_per_p):
            report.add_field(f"exp/eexp at {p}", f"{nat_or_inf_json(structure.exponent_per_p[p])}"
                                                 f" / {nat_or_inf_json(structure.eexp_per_p[p])}")
        report.add_field('critical primes', sorted(structure.critical_primes) or 'none')
        report.add_field('pi_*', structure.pi_star.label())
        report.add_field('T', structure.torsion.label())
        report.add_field('D', structure.divisible.label())
        report.data = {'group': A.to_json(), 'structure': structure.to_json()}
        return report


def setup(lab):
    """Load the Structure command."""
    lab.add_command(Structure(lab))
