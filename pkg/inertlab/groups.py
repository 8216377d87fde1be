"""Abelian groups described by finite formal direct sums of atoms.

An atom is one of the summands

    Z(p^k)            cyclic
    (+)_w Z(p^k)      cyclicOmega, countably many copies
    Z(p^oo)           pruefer
    Z                 freeZ
    (+)_w Z           freeZOmega
    Q_(p)             localizedQ, rationals with p-power denominators

and elements are finite-support coordinate vectors indexed by slots
``(atom index, copy index)``.  Every coordinate is a ``Fraction`` kept in
canonical form: residues for cyclic atoms, rationals mod 1 for Pruefer
atoms, integers for free atoms and reduced rationals for Q_(p).
"""

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, Mapping, Optional, Tuple, Union

from sympy import isprime, mod_inverse, primitive_root

from .errors import AmbientMismatchError, GroupSpecError, NotDivisibleError

logger = logging.getLogger('InertLab.Groups')

CYCLIC = 'cyclic'
CYCLIC_OMEGA = 'cyclicOmega'
PRUEFER = 'pruefer'
FREE_Z = 'freeZ'
FREE_Z_OMEGA = 'freeZOmega'
LOCALIZED_Q = 'localizedQ'

KINDS = (CYCLIC, CYCLIC_OMEGA, PRUEFER, FREE_Z, FREE_Z_OMEGA, LOCALIZED_Q)
TORSION_KINDS = (CYCLIC, CYCLIC_OMEGA, PRUEFER)
PRIMED_KINDS = (CYCLIC, CYCLIC_OMEGA, PRUEFER, LOCALIZED_Q)

INFINITY = math.inf

Slot = Tuple[int, int]
NatOrInf = Union[int, float]


def p_valuation(n: int, p: int) -> int:
    """Exponent of p in the nonzero integer n."""
    n = abs(n)
    v = 0
    while n and n % p == 0:
        n //= p
        v += 1
    return v


def is_p_power(n: int, p: int) -> bool:
    n = abs(n)
    while n % p == 0:
        n //= p
    return n == 1


def unit_root(p: int) -> int:
    """A primitive root mod p^2, hence mod every p^m, p odd."""
    g = int(primitive_root(p))
    return g + p if pow(g, p - 1, p * p) == 1 else g


def nat_or_inf_json(value: NatOrInf) -> Any:
    return 'infinite' if value == INFINITY else value


@dataclass(frozen=True)
class Atom:
    """A single (possibly omega) summand."""

    kind: str
    p: Optional[int] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GroupSpecError("unknown atom kind", token=self.kind)
        if self.kind in PRIMED_KINDS:
            if not isinstance(self.p, int) or not isprime(self.p):
                raise GroupSpecError("p must be prime", token=str(self.p))
        elif self.p is not None:
            raise GroupSpecError(f"{self.kind} takes no prime", token=str(self.p))
        if self.kind in (CYCLIC, CYCLIC_OMEGA):
            if not isinstance(self.k, int) or self.k < 1:
                raise GroupSpecError("k must be a positive integer", token=str(self.k))
        elif self.k is not None:
            raise GroupSpecError(f"{self.kind} takes no exponent", token=str(self.k))

    @property
    def is_torsion(self) -> bool:
        return self.kind in TORSION_KINDS

    @property
    def is_omega(self) -> bool:
        return self.kind in (CYCLIC_OMEGA, FREE_Z_OMEGA)

    @property
    def is_cyclic(self) -> bool:
        return self.kind in (CYCLIC, CYCLIC_OMEGA)

    @property
    def is_finite(self) -> bool:
        """True when the whole atom is a finite group."""
        return self.kind == CYCLIC

    @property
    def modulus(self) -> int:
        """p^k for cyclic atoms, 0 otherwise."""
        return self.p ** self.k if self.is_cyclic else 0

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'kind': self.kind}
        if self.p is not None:
            data['p'] = self.p
        if self.k is not None:
            data['k'] = self.k
        return data

    def label(self) -> str:
        if self.kind == CYCLIC:
            return f"Z({self.p}^{self.k})" if self.k > 1 else f"Z({self.p})"
        if self.kind == CYCLIC_OMEGA:
            inner = f"Z({self.p}^{self.k})" if self.k > 1 else f"Z({self.p})"
            return f"(+)w {inner}"
        if self.kind == PRUEFER:
            return f"Z({self.p}^oo)"
        if self.kind == FREE_Z:
            return "Z"
        if self.kind == FREE_Z_OMEGA:
            return "(+)w Z"
        return f"Q_({self.p})"

    # Coordinate arithmetic

    def canonical(self, value: Any) -> Fraction:
        """Reduce a coordinate to canonical form, rejecting values outside the atom."""
        value = Fraction(value)
        if self.is_cyclic:
            if value.denominator != 1:
                raise GroupSpecError(f"coordinate of {self.label()} must be an integer", token=str(value))
            return Fraction(value.numerator % self.modulus)
        if self.kind == PRUEFER:
            if not is_p_power(value.denominator, self.p):
                raise GroupSpecError(f"coordinate of {self.label()} needs a {self.p}-power denominator",
                                     token=str(value))
            return value - math.floor(value)
        if self.kind in (FREE_Z, FREE_Z_OMEGA):
            if value.denominator != 1:
                raise GroupSpecError("coordinate of Z must be an integer", token=str(value))
            return value
        if not is_p_power(value.denominator, self.p):
            raise GroupSpecError(f"coordinate of {self.label()} needs a {self.p}-power denominator",
                                 token=str(value))
        return value

    def multiply(self, value: Fraction, q: Fraction) -> Fraction:
        """The coordinate q*value, computed inside the atom.

        For torsion atoms q acts through its image in the p-adic integers, so its
        denominator must be prime to p.
        """
        q = Fraction(q)
        if value == 0:
            return value
        if self.is_cyclic or self.kind == PRUEFER:
            if q.denominator % self.p == 0:
                raise NotDivisibleError(f"{q} is not a {self.p}-adic integer")
            if self.is_cyclic:
                n = self.modulus
                return Fraction(value.numerator * q.numerator * int(mod_inverse(q.denominator, n)) % n)
            n = value.denominator
            return Fraction(value.numerator * q.numerator * int(mod_inverse(q.denominator, n)) % n, n)
        result = value * q
        if self.kind in (FREE_Z, FREE_Z_OMEGA) and result.denominator != 1:
            raise NotDivisibleError(f"{value} * {q} leaves Z")
        if self.kind == LOCALIZED_Q and not is_p_power(result.denominator, self.p):
            raise NotDivisibleError(f"{value} * {q} leaves {self.label()}")
        return result

    def coordinate_order(self, value: Fraction) -> NatOrInf:
        if value == 0:
            return 1
        if self.is_cyclic:
            return self.modulus // math.gcd(value.numerator, self.modulus)
        if self.kind == PRUEFER:
            return value.denominator
        return INFINITY

    def depth(self, value: Fraction) -> int:
        """p-adic depth of the denominator (0 for atoms without denominators)."""
        if self.kind in (PRUEFER, LOCALIZED_Q) and value != 0:
            return p_valuation(value.denominator, self.p)
        return 0


@dataclass(frozen=True)
class PrimeSet:
    """A finite or cofinite set of primes."""

    primes: FrozenSet[int] = frozenset()
    cofinite: bool = False

    def __contains__(self, p: int) -> bool:
        return (p in self.primes) != self.cofinite

    @property
    def is_finite(self) -> bool:
        return not self.cofinite

    def to_json(self) -> Dict[str, Any]:
        if self.cofinite:
            return {'all_primes_except': sorted(self.primes)}
        return {'primes': sorted(self.primes)}

    def label(self) -> str:
        listed = ', '.join(str(p) for p in sorted(self.primes))
        return f"all primes except {{{listed}}}" if self.cofinite else f"{{{listed}}}"


@dataclass(frozen=True)
class GroupDescriptor:
    """An ordered finite list of atoms; the empty list is the zero group."""

    atoms: Tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'atoms', tuple(self.atoms))

    def __len__(self) -> int:
        return len(self.atoms)

    def __getitem__(self, index: int) -> Atom:
        return self.atoms[index]

    @property
    def is_zero(self) -> bool:
        return not self.atoms

    @property
    def is_periodic(self) -> bool:
        return all(a.is_torsion for a in self.atoms)

    @property
    def is_finite(self) -> bool:
        return all(a.is_finite for a in self.atoms)

    @property
    def r0(self) -> NatOrInf:
        """Torsion-free rank."""
        if any(a.kind == FREE_Z_OMEGA for a in self.atoms):
            return INFINITY
        return sum(1 for a in self.atoms if a.kind in (FREE_Z, LOCALIZED_Q))

    @property
    def torsion_primes(self) -> Tuple[int, ...]:
        return tuple(sorted({a.p for a in self.atoms if a.is_torsion}))

    def indices(self, predicate) -> Tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.atoms) if predicate(a))

    def torsion_indices(self) -> Tuple[int, ...]:
        return self.indices(lambda a: a.is_torsion)

    def torsion_free_indices(self) -> Tuple[int, ...]:
        return self.indices(lambda a: not a.is_torsion)

    def primary_indices(self, primes: Iterable[int]) -> Tuple[int, ...]:
        primes = set(primes)
        return self.indices(lambda a: a.is_torsion and a.p in primes)

    def divisible_indices(self) -> Tuple[int, ...]:
        return self.indices(lambda a: a.kind == PRUEFER)

    def restrict(self, indices: Iterable[int]) -> 'GroupDescriptor':
        """The summand made of the listed atoms, in the listed order."""
        return GroupDescriptor(tuple(self.atoms[i] for i in indices))

    def torsion(self) -> 'GroupDescriptor':
        return self.restrict(self.torsion_indices())

    def divisible(self) -> 'GroupDescriptor':
        return self.restrict(self.divisible_indices())

    def primary(self, p: int) -> 'GroupDescriptor':
        return self.restrict(self.primary_indices([p]))

    def check_slot(self, slot: Slot) -> Slot:
        atom_index, copy = slot
        if not 0 <= atom_index < len(self.atoms):
            raise GroupSpecError("atom index out of range", token=str(atom_index))
        if copy < 0 or (copy != 0 and not self.atoms[atom_index].is_omega):
            raise GroupSpecError("copy index must be 0 for non-omega atoms", token=str(copy))
        return (atom_index, copy)

    def element(self, coords: Optional[Mapping[Slot, Any]] = None) -> 'Element':
        """Build a canonical element from a slot -> coordinate mapping."""
        canonical: Dict[Slot, Fraction] = {}
        for slot, value in (coords or {}).items():
            slot = self.check_slot(tuple(slot))
            value = self.atoms[slot[0]].canonical(value)
            if value:
                canonical[slot] = value
        return Element(self, tuple(sorted(canonical.items())))

    def zero(self) -> 'Element':
        return Element(self, ())

    def generator(self, slot: Slot, depth: int = 1) -> 'Element':
        """The canonical generator of a slot; Pruefer layers are taken at p^depth."""
        atom = self.atoms[slot[0]]
        if atom.kind == PRUEFER:
            return self.element({slot: Fraction(1, atom.p ** depth)})
        return self.element({slot: 1})

    def label(self) -> str:
        return ' (+) '.join(a.label() for a in self.atoms) if self.atoms else '0'

    def to_json(self) -> Dict[str, Any]:
        return {'atoms': [a.to_json() for a in self.atoms]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(',', ':'))


@dataclass(frozen=True)
class Element:
    """A finite-support element; build it with ``GroupDescriptor.element``."""

    group: GroupDescriptor
    coords: Tuple[Tuple[Slot, Fraction], ...] = ()

    def as_dict(self) -> Dict[Slot, Fraction]:
        return dict(self.coords)

    def __getitem__(self, slot: Slot) -> Fraction:
        return self.as_dict().get(tuple(slot), Fraction(0))

    def __bool__(self) -> bool:
        return bool(self.coords)

    @property
    def support(self) -> Tuple[Slot, ...]:
        return tuple(slot for slot, _ in self.coords)

    def _check(self, other: 'Element'):
        if other.group != self.group:
            raise AmbientMismatchError(f"elements of {self.group.label()} and {other.group.label()}")

    def __add__(self, other: 'Element') -> 'Element':
        self._check(other)
        total = self.as_dict()
        for slot, value in other.coords:
            total[slot] = total.get(slot, Fraction(0)) + value
        return self.group.element(total)

    def __neg__(self) -> 'Element':
        return self.group.element({slot: -value for slot, value in self.coords})

    def __sub__(self, other: 'Element') -> 'Element':
        return self + (-other)

    def scale(self, n: int) -> 'Element':
        return self.group.element({slot: n * value for slot, value in self.coords})

    def __rmul__(self, n: int) -> 'Element':
        return self.scale(n)

    def scale_rational(self, q: Any) -> 'Element':
        """q * self, computed atom by atom (NotDivisibleError when impossible)."""
        q = Fraction(q)
        return self.group.element({
            slot: self.group.atoms[slot[0]].multiply(value, q) for slot, value in self.coords
        })

    def project(self, atom_indices: Iterable[int]) -> 'Element':
        """Component of the element on the listed atoms."""
        keep = set(atom_indices)
        return Element(self.group, tuple((s, v) for s, v in self.coords if s[0] in keep))

    def order(self) -> NatOrInf:
        result: NatOrInf = 1
        for (atom_index, _), value in self.coords:
            o = self.group.atoms[atom_index].coordinate_order(value)
            if o == INFINITY:
                return INFINITY
            result = result * o // math.gcd(result, o)
        return result

    @property
    def is_torsion(self) -> bool:
        return self.order() != INFINITY

    def depth(self, atom_index: int) -> int:
        atom = self.group.atoms[atom_index]
        return max((atom.depth(v) for (i, _), v in self.coords if i == atom_index), default=0)

    def to_json(self) -> Dict[str, Any]:
        return {'coords': [{'atom': i, 'copy': c, 'value': str(v)} for (i, c), v in self.coords]}

    def label(self) -> str:
        if not self.coords:
            return '0'
        return ' + '.join(f"{v}@{i}.{c}" for (i, c), v in self.coords)


# Parsing

def _parse_atom(obj: Any, position: str) -> Atom:
    if not isinstance(obj, dict):
        raise GroupSpecError("atom must be an object", token=json.dumps(obj), position=position)
    unknown = set(obj) - {'kind', 'p', 'k'}
    if unknown:
        raise GroupSpecError("unknown atom field", token=sorted(unknown)[0], position=position)
    try:
        return Atom(obj.get('kind'), obj.get('p'), obj.get('k'))
    except GroupSpecError as e:
        raise GroupSpecError(e.reason, token=e.token, position=position) from None


def group_from_json(obj: Any) -> GroupDescriptor:
    if not isinstance(obj, dict) or not isinstance(obj.get('atoms'), list):
        raise GroupSpecError("group document must be an object with an 'atoms' list", position='$')
    return GroupDescriptor(tuple(_parse_atom(a, f"$.atoms[{i}]") for i, a in enumerate(obj['atoms'])))


def parse_group(text: str) -> GroupDescriptor:
    """Parse a group-spec document."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise GroupSpecError(f"malformed JSON: {e.msg}", token=text[e.pos:e.pos + 10],
                             position=f"line {e.lineno} column {e.colno}") from None
    group = group_from_json(obj)
    logger.debug("parsed group %s", group.label())
    return group


def element_from_json(group: GroupDescriptor, obj: Any, position: str = '$') -> Element:
    if not isinstance(obj, dict) or not isinstance(obj.get('coords'), list):
        raise GroupSpecError("element must be an object with a 'coords' list", position=position)
    coords: Dict[Slot, Fraction] = {}
    for i, entry in enumerate(obj['coords']):
        where = f"{position}.coords[{i}]"
        try:
            slot = group.check_slot((int(entry['atom']), int(entry.get('copy', 0))))
            value = Fraction(str(entry['value']))
        except (KeyError, TypeError, ValueError, ZeroDivisionError):
            raise GroupSpecError("bad coordinate entry", token=json.dumps(entry), position=where) from None
        coords[slot] = coords.get(slot, Fraction(0)) + value
    try:
        return group.element(coords)
    except GroupSpecError as e:
        raise GroupSpecError(e.reason, token=e.token, position=position) from None


# Structural invariants

@dataclass(frozen=True)
class StructuralReport:
    r0: NatOrInf
    exponent_per_p: Dict[int, NatOrInf]
    eexp_per_p: Dict[int, NatOrInf]
    torsion: GroupDescriptor
    divisible: GroupDescriptor
    primary: Dict[int, GroupDescriptor]
    critical_primes: FrozenSet[int]
    pi_star: PrimeSet

    def to_json(self) -> Dict[str, Any]:
        return {
            'r0': nat_or_inf_json(self.r0),
            'exponent_per_p': {str(p): nat_or_inf_json(v) for p, v in sorted(self.exponent_per_p.items())},
            'eexp_per_p': {str(p): nat_or_inf_json(v) for p, v in sorted(self.eexp_per_p.items())},
            'torsion': self.torsion.to_json(),
            'divisible': self.divisible.to_json(),
            'primary': {str(p): g.to_json() for p, g in sorted(self.primary.items())},
            'critical_primes': sorted(self.critical_primes),
            'pi_star': self.pi_star.to_json(),
        }


def exponent(A: GroupDescriptor, p: int) -> NatOrInf:
    """Least m with p^m A_p = 0."""
    atoms = [A[i] for i in A.primary_indices([p])]
    if any(a.kind == PRUEFER for a in atoms):
        return INFINITY
    return max((a.k for a in atoms), default=0)


def essential_exponent(A: GroupDescriptor, p: int) -> NatOrInf:
    """Least e with p^e A_p finite."""
    atoms = [A[i] for i in A.primary_indices([p])]
    if any(a.kind == PRUEFER for a in atoms):
        return INFINITY
    return max((a.k for a in atoms if a.kind == CYCLIC_OMEGA), default=0)


def is_critical(A: GroupDescriptor, p: int) -> bool:
    """A_p = B (+) D with B infinite bounded and D nonzero divisible of finite rank."""
    kinds = {A[i].kind for i in A.primary_indices([p])}
    return PRUEFER in kinds and CYCLIC_OMEGA in kinds


def is_p_divisible_atom(atom: Atom, p: int) -> bool:
    if atom.is_torsion:
        return atom.p != p or atom.kind == PRUEFER
    return atom.kind == LOCALIZED_Q and atom.p == p


def pi_star(A: GroupDescriptor) -> PrimeSet:
    """Primes p with A/A_p p-divisible and A_p finite, or r0 finite and A_p bounded."""
    if A.is_periodic:
        # A/A_p is a p'-group; excluded are the primes with unbounded A_p
        unbounded = {a.p for a in A.atoms if a.kind == PRUEFER}
        return PrimeSet(frozenset(unbounded), cofinite=True)
    candidates = set(A.torsion_primes) | {a.p for a in A.atoms if a.kind == LOCALIZED_Q}
    chosen = set()
    for p in candidates:
        others = [A[i] for i in range(len(A)) if i not in A.primary_indices([p])]
        if not all(is_p_divisible_atom(a, p) for a in others):
            continue
        primary_kinds = {A[i].kind for i in A.primary_indices([p])}
        finite = primary_kinds <= {CYCLIC}
        bounded = PRUEFER not in primary_kinds
        if finite or (A.r0 != INFINITY and bounded):
            chosen.add(p)
    return PrimeSet(frozenset(chosen))


def structural_report(A: GroupDescriptor) -> StructuralReport:
    primes = A.torsion_primes
    report = StructuralReport(
        r0=A.r0,
        exponent_per_p={p: exponent(A, p) for p in primes},
        eexp_per_p={p: essential_exponent(A, p) for p in primes},
        torsion=A.torsion(),
        divisible=A.divisible(),
        primary={p: A.primary(p) for p in primes},
        critical_primes=frozenset(p for p in primes if is_critical(A, p)),
        pi_star=pi_star(A),
    )
    logger.debug("structural report for %s: r0=%s critical=%s", A.label(), report.r0,
                 sorted(report.critical_primes))
    return report


def element_ops(a: Element, b: Element, n: int) -> Dict[str, Element]:
    """Sum, negation and n-th multiple, as one bundle."""
    if a.group != b.group:
        raise AmbientMismatchError(f"elements of {a.group.label()} and {b.group.label()}")
    return {'sum': a + b, 'negation': -a, 'scalar': a.scale(n)}
