"""Shared descriptors and hypothesis strategies."""

import json
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from inertlab.groups import (CYCLIC, CYCLIC_OMEGA, FREE_Z, FREE_Z_OMEGA, LOCALIZED_Q, PRUEFER, Atom,
                             GroupDescriptor)


def group(*atoms) -> GroupDescriptor:
    """group(('pruefer', 2), ('cyclicOmega', 2, 2), ('freeZ',))"""
    return GroupDescriptor(tuple(Atom(*a) for a in atoms))


Z = group((FREE_Z,))
Z2 = group((FREE_Z,), (FREE_Z,))
Z9_Z2 = group((CYCLIC, 3, 2), (FREE_Z,), (FREE_Z,))
PRUEFER_2 = group((PRUEFER, 2))
Q2 = group((LOCALIZED_Q, 2))
Z3_Q3 = group((CYCLIC, 3, 1), (LOCALIZED_Q, 3))
PRUEFER_Q = {p: group((PRUEFER, p), (LOCALIZED_Q, p)) for p in (2, 3, 5)}
CRITICAL_2 = group((PRUEFER, 2), (CYCLIC_OMEGA, 2, 2))
Z8_OMEGA4 = group((CYCLIC, 2, 3), (CYCLIC_OMEGA, 2, 2))
PRUEFER5_Z = group((PRUEFER, 5), (FREE_Z,))
PRUEFER3_Z = group((PRUEFER, 3), (FREE_Z,))
OMEGA_Z = group((FREE_Z_OMEGA,))


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document to a temporary file and return its path."""
    def write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj), encoding='utf-8')
        return str(path)
    return write


def coordinate(atom: Atom) -> st.SearchStrategy:
    """Canonical-or-not coordinates that the atom accepts."""
    if atom.kind in (CYCLIC, CYCLIC_OMEGA):
        return st.integers(-3 * atom.modulus, 3 * atom.modulus)
    if atom.kind == PRUEFER:
        return st.builds(lambda n, d: Fraction(n, atom.p ** d), st.integers(-50, 50), st.integers(0, 4))
    if atom.kind == LOCALIZED_Q:
        return st.builds(lambda n, d: Fraction(n, atom.p ** d), st.integers(-50, 50), st.integers(0, 4))
    return st.integers(-50, 50)


@st.composite
def elements(draw, A: GroupDescriptor, copies: int = 3):
    coords = {}
    for i, atom in enumerate(A.atoms):
        for c in range(copies if atom.is_omega else 1):
            if draw(st.booleans()):
                coords[(i, c)] = draw(coordinate(atom))
    return A.element(coords)
