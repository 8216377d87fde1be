"""Commensurability and indices of two subgroups given by generator files."""

from ..errors import UsageError
from ..lattice import commensurable, index, index_json, intersection, is_subgroup, quotient_order, subgroup_sum
from ..report import Report
from . import read_group, read_subgroup


class Commensurability:
    """The ``comm`` subcommand."""

    def __init__(self, lab):
        self.lab = lab

    def register(self, subparsers):
        parser = self.lab.add_parser(subparsers, 'comm', "compare two finitely generated subgroups")
        parser.add_argument('--group', required=True, help="group-spec JSON file")
        parser.add_argument('--sub', required=True, action='append', dest='subs',
                            help="subgroup generator file; give it twice")
        parser.add_argument('--expect', choices=('commensurable', 'incommensurable'), default=None,
                            help="add a pass/fail check on the outcome")
        parser.set_defaults(handler=self.comm)

    def comm(self, args) -> Report:
        if len(args.subs) != 2:
            raise UsageError("comm: exactly two --sub files are required")
        A = read_group(args.group)
        H, K = (read_subgroup(path, A) for path in args.subs)
        meet = intersection(H, K)
        same = commensurable(H, K)
        report = Report("commensurability", f"H = {H.label()}, K = {K.label()} in {A.label()}")
        report.add_field('|H : H n K|', index_json(index(meet, H)))
        report.add_field('|K : H n K|', index_json(index(meet, K)))
        report.add_field('|(H + K)/H|', index_json(quotient_order(H, K)))
        report.add_field('commensurable', same)
        if is_subgroup(H, K):
            report.add_field('|K : H|', index_json(index(H, K)))
        if args.expect is not None:
            report.add_check(args.expect, same == (args.expect == 'commensurable'))
        report.data = {
            'H': H.to_json(),
            'K': K.to_json(),
            'intersection': meet.to_json(),
            'sum': subgroup_sum(H, K).to_json(),
            'commensurable': same,
        }
        return report


def setup(lab):
    """Load the Commensurability command."""
    lab.add_command(Commensurability(lab))
