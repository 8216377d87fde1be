"""Finitely generated subgroups, computed inside a finite window.

A window is a finite set of slots plus a truncation depth for every Pruefer
and Q_(p) atom it touches.  Inside a window every coordinate becomes an
integer (Pruefer and Q_(p) coordinates are scaled by p^depth), so the window
is the finitely generated group W = (+) Z/n_i with n_i = 0 for free
coordinates.  A subgroup H of W is stored through its preimage lattice
L_H = span(generators) + span(n_i e_i) in Z^r, in column Hermite normal form.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from sympy import Matrix, factorint
from sympy.matrices.normalforms import hermite_normal_form

from .errors import AmbientMismatchError, GroupSpecError, NotContainedError
from .groups import (INFINITY, LOCALIZED_Q, PRUEFER, Element, GroupDescriptor, NatOrInf, Slot,
                     element_from_json, nat_or_inf_json)

logger = logging.getLogger('InertLab.Lattice')

Column = Tuple[int, ...]


@dataclass(frozen=True)
class FiniteWindow:
    """Finite localization of a descriptor: a slot set and per-atom depths."""

    group: GroupDescriptor
    slots: Tuple[Slot, ...] = ()
    depths: Tuple[Tuple[int, int], ...] = ()

    @classmethod
    def for_elements(cls, group: GroupDescriptor, elements: Iterable[Element],
                     extra_slots: Iterable[Slot] = (), slack: int = 1) -> 'FiniteWindow':
        """Smallest window holding the elements, with depth = observed depth + slack."""
        elements = list(elements)
        slots = set(group.check_slot(tuple(s)) for s in extra_slots)
        depth: Dict[int, int] = {}
        for e in elements:
            if e.group != group:
                raise AmbientMismatchError(f"element of {e.group.label()} outside {group.label()}")
            slots.update(e.support)
        for atom_index, _ in slots:
            if group[atom_index].kind in (PRUEFER, LOCALIZED_Q):
                observed = max((e.depth(atom_index) for e in elements), default=0)
                depth[atom_index] = max(depth.get(atom_index, 0), observed + slack)
        return cls(group, tuple(sorted(slots)), tuple(sorted(depth.items())))

    def depth(self, atom_index: int) -> int:
        return dict(self.depths).get(atom_index, 0)

    def merge(self, other: 'FiniteWindow') -> 'FiniteWindow':
        if other.group != self.group:
            raise AmbientMismatchError(f"windows over {self.group.label()} and {other.group.label()}")
        depth = dict(self.depths)
        for atom_index, d in other.depths:
            depth[atom_index] = max(depth.get(atom_index, 0), d)
        return FiniteWindow(self.group, tuple(sorted(set(self.slots) | set(other.slots))),
                            tuple(sorted(depth.items())))

    def enlarged(self, extra_depth: int = 1) -> 'FiniteWindow':
        return FiniteWindow(self.group, self.slots,
                            tuple((i, d + extra_depth) for i, d in self.depths))

    def moduli(self) -> Tuple[int, ...]:
        result = []
        for atom_index, _ in self.slots:
            atom = self.group[atom_index]
            if atom.is_cyclic:
                result.append(atom.modulus)
            elif atom.kind == PRUEFER:
                result.append(atom.p ** self.depth(atom_index))
            else:
                result.append(0)
        return tuple(result)

    def covers(self, element: Element) -> bool:
        slots = set(self.slots)
        for slot in element.support:
            if slot not in slots or element.depth(slot[0]) > self.depth(slot[0]):
                return False
        return True

    def encode(self, element: Element) -> Column:
        if not self.covers(element):
            raise AmbientMismatchError(f"element {element.label()} outside the window")
        coords = element.as_dict()
        vector = []
        for atom_index, copy in self.slots:
            atom = self.group[atom_index]
            value = coords.get((atom_index, copy), Fraction(0))
            if atom.kind in (PRUEFER, LOCALIZED_Q):
                value = value * atom.p ** self.depth(atom_index)
            vector.append(int(value))
        return tuple(vector)

    def decode(self, vector: Sequence[int]) -> Element:
        coords = {}
        for (atom_index, copy), value in zip(self.slots, vector):
            atom = self.group[atom_index]
            if atom.kind in (PRUEFER, LOCALIZED_Q):
                coords[(atom_index, copy)] = Fraction(int(value), atom.p ** self.depth(atom_index))
            else:
                coords[(atom_index, copy)] = int(value)
        return self.group.element(coords)

    def relation_columns(self) -> List[Column]:
        n = len(self.slots)
        return [tuple(m if j == i else 0 for j in range(n)) for i, m in enumerate(self.moduli()) if m]

    def torsion_rank(self) -> int:
        return sum(1 for m in self.moduli() if m)


def _hnf(columns: Sequence[Column], rows: int) -> Tuple[Column, ...]:
    """Column Hermite normal form of the lattice spanned by the columns."""
    columns = [c for c in columns if any(c)]
    if not columns or rows == 0:
        return ()
    W = hermite_normal_form(Matrix(rows, len(columns), lambda i, j: columns[j][i]))
    return tuple(tuple(int(W[i, j]) for i in range(W.rows)) for j in range(W.cols))


def _pivot(column: Column) -> Tuple[int, int]:
    """(row, value) of the lowest nonzero entry."""
    for i in range(len(column) - 1, -1, -1):
        if column[i]:
            return i, column[i]
    raise ValueError("zero column")


@dataclass(frozen=True)
class Subgroup:
    """A finitely generated subgroup with its canonical normal form."""

    ambient: GroupDescriptor
    generators: Tuple[Element, ...]
    window: FiniteWindow
    normal_form: Tuple[Column, ...]

    @property
    def rank(self) -> int:
        """Rank of the preimage lattice; equals torsion rank of W plus r0(H)."""
        return len(self.normal_form)

    @property
    def torsion_free_rank(self) -> int:
        return self.rank - self.window.torsion_rank()

    @property
    def is_finite(self) -> bool:
        return self.torsion_free_rank == 0

    def in_window(self, window: FiniteWindow) -> 'Subgroup':
        if window == self.window:
            return self
        return _build(self.ambient, self.generators, self.window.merge(window))

    def contains(self, element: Element) -> bool:
        if element.group != self.ambient:
            raise AmbientMismatchError(f"element of {element.group.label()} tested in {self.ambient.label()}")
        if not self.window.covers(element):
            wider = self.in_window(FiniteWindow.for_elements(self.ambient, [element], slack=0))
            return wider.contains(element)
        column = self.window.encode(element)
        rows = len(self.window.slots)
        return _hnf(list(self.normal_form) + [column], rows) == self.normal_form

    def same_as(self, other: 'Subgroup') -> bool:
        if other.ambient != self.ambient:
            raise AmbientMismatchError("subgroups of different groups")
        window = self.window.merge(other.window)
        return self.in_window(window).normal_form == other.in_window(window).normal_form

    def order(self) -> NatOrInf:
        return index(span(self.ambient, [], self.window), self)

    def elements(self) -> List[Element]:
        """All elements of a finite subgroup, sorted canonically."""
        if not self.is_finite:
            raise ValueError("infinite subgroup has no element list")
        basis = [g for g in self.generators if g]
        seen = {self.ambient.zero()}
        frontier = [self.ambient.zero()]
        while frontier:
            nxt = []
            for x in frontier:
                for g in basis:
                    y = x + g
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return sorted(seen, key=lambda e: e.coords)

    def multiple(self, n: int) -> 'Subgroup':
        return span(self.ambient, [g.scale(n) for g in self.generators], self.window)

    def to_json(self) -> Dict[str, Any]:
        return {'generators': [g.to_json() for g in self.generators]}

    def label(self) -> str:
        return '<' + ', '.join(g.label() for g in self.generators) + '>'


def _build(A: GroupDescriptor, gens: Sequence[Element], window: FiniteWindow) -> Subgroup:
    columns = [window.encode(g) for g in gens] + window.relation_columns()
    nf = _hnf(columns, len(window.slots))
    return Subgroup(A, tuple(gens), window, nf)


def span(A: GroupDescriptor, gens: Iterable[Element], window: Optional[FiniteWindow] = None) -> Subgroup:
    """The subgroup generated by gens, normalized in (at least) the given window."""
    gens = list(gens)
    for g in gens:
        if g.group != A:
            raise AmbientMismatchError(f"generator {g.label()} outside {A.label()}")
    own = FiniteWindow.for_elements(A, gens)
    window = own if window is None else window.merge(own)
    return _build(A, gens, window)


def subgroup_from_json(A: GroupDescriptor, obj: Any) -> Subgroup:
    if not isinstance(obj, dict) or not isinstance(obj.get('generators'), list):
        raise GroupSpecError("subgroup must be an object with a 'generators' list", position='$')
    return span(A, [element_from_json(A, g, f"$.generators[{i}]") for i, g in enumerate(obj['generators'])])


def _aligned(H: Subgroup, K: Subgroup) -> Tuple[Subgroup, Subgroup]:
    if H.ambient != K.ambient:
        raise AmbientMismatchError(f"subgroups of {H.ambient.label()} and {K.ambient.label()}")
    window = H.window.merge(K.window)
    return H.in_window(window), K.in_window(window)


def subgroup_sum(H: Subgroup, K: Subgroup) -> Subgroup:
    H, K = _aligned(H, K)
    return _build(H.ambient, H.generators + K.generators, H.window)


def intersection(H: Subgroup, K: Subgroup) -> Subgroup:
    """H n K through the lattice of pairs (h, h + k)."""
    H, K = _aligned(H, K)
    n = len(H.window.slots)
    columns = [c + c for c in H.normal_form] + [tuple([0] * n) + c for c in K.normal_form]
    nf = _hnf(columns, 2 * n)
    gens = [H.window.decode(c[:n]) for c in nf if not any(c[n:])]
    return _build(H.ambient, [g for g in gens if g], H.window)


def lattice_ops(H: Subgroup, K: Subgroup) -> Dict[str, Subgroup]:
    return {'sum': subgroup_sum(H, K), 'intersection': intersection(H, K)}


def is_subgroup(H: Subgroup, K: Subgroup) -> bool:
    H, K = _aligned(H, K)
    return subgroup_sum(H, K).normal_form == K.normal_form


def index(H: Subgroup, K: Subgroup) -> NatOrInf:
    """|K/H| for H <= K, or INFINITY."""
    H, K = _aligned(H, K)
    if not is_subgroup(H, K):
        raise NotContainedError(f"{H.label()} is not contained in {K.label()}")
    if H.rank < K.rank:
        return INFINITY
    h = prod(_pivot(c)[1] for c in H.normal_form)
    k = prod(_pivot(c)[1] for c in K.normal_form)
    return h // k


def commensurable(H: Subgroup, K: Subgroup) -> bool:
    meet = intersection(H, K)
    return index(meet, H) != INFINITY and index(meet, K) != INFINITY


def quotient_order(H: Subgroup, K: Subgroup) -> NatOrInf:
    """|(H + K)/H|, the quantity the inertia definition bounds."""
    return index(H, subgroup_sum(H, K))


def is_pure(S: Subgroup, W: Subgroup) -> bool:
    """Purity of a subgroup S of a finite W: p^i W n S = p^i S for all prime powers."""
    S, W = _aligned(S, W)
    order = W.order()
    if order == INFINITY:
        raise ValueError("purity is decided for finite groups only")
    for p, e in factorint(order).items():
        for i in range(1, e + 1):
            q = int(p) ** i
            if not intersection(W.multiple(q), S).same_as(S.multiple(q)):
                return False
    return True


def index_json(value: NatOrInf) -> Any:
    return nat_or_inf_json(value)
