"""Subcommand modules for the InertLab CLI.

Each module defines a command class with a ``register(subparsers)`` method
and a module-level ``setup(lab)`` that adds it to the application.
"""

import json
from pathlib import Path

from ..autos import AutoExpr, parse_auto, validate
from ..config import Config
from ..errors import GroupSpecError, InvalidAutomorphismError
from ..groups import GroupDescriptor, parse_group
from ..lattice import Subgroup, subgroup_from_json


def read_text(path: str) -> str:
    return Path(path).read_text(encoding='utf-8')


def read_group(path: str) -> GroupDescriptor:
    return parse_group(read_text(path))


def read_auto(path: str, A: GroupDescriptor) -> AutoExpr:
    """Parse an automorphism file and reject expressions that are not automorphisms of A."""
    expr = parse_auto(read_text(path), A)
    report = validate(expr, A)
    if not report.valid:
        raise InvalidAutomorphismError(f"{expr.label()} is not an automorphism of {A.label()}", report.failures)
    return expr


def read_subgroup(path: str, A: GroupDescriptor) -> Subgroup:
    text = read_text(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise GroupSpecError(f"malformed JSON: {e.msg}", token=text[e.pos:e.pos + 10],
                             position=f"line {e.lineno} column {e.colno}") from None
    return subgroup_from_json(A, obj)


def budget_of(args) -> int:
    return Config.BUDGET if args.budget is None else args.budget


def seed_of(args) -> int:
    return Config.SEED if args.seed is None else args.seed
