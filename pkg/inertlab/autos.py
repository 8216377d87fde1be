"""Structured automorphism expressions.

Automorphisms act on the right: ``apply(Composite([f, g]), a) == apply(g, apply(f, a))``
and conjugation is ``sigma^gamma = gamma^-1 sigma gamma``.

Every valid expression compiles to a ``NormalForm`` D + phi, where D multiplies
each atom by a single scalar and phi is a homomorphism supported on finitely
many slots.  Everything else in this module is computed on normal forms.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from sympy import Matrix, Rational, factorint, isprime, mod_inverse
from sympy.ntheory.modular import crt

from .config import Config
from .errors import AmbientMismatchError, GroupSpecError, InvalidAutomorphismError, NotDivisibleError, StabilityError
from .groups import (CYCLIC, FREE_Z, FREE_Z_OMEGA, LOCALIZED_Q, PRUEFER, Atom, Element, GroupDescriptor, Slot,
                     element_from_json)
from .lattice import Subgroup, index, span

logger = logging.getLogger('InertLab.Autos')

TORSION = 'torsion'
DIVISIBLE = 'divisible'
PRIMARY = 'primary'
FINITE = 'finite'
WINDOW = 'window'
PART_KINDS = (TORSION, DIVISIBLE, PRIMARY, FINITE, WINDOW)


@dataclass(frozen=True)
class Part:
    """A characteristic part X of the ambient, used as the target of Hom(A/X, X).

    ``finite`` and ``window`` have no X: the former tags finitary perturbations
    (finite image), the latter an arbitrary finitely supported perturbation.
    """

    kind: str = TORSION
    primes: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in PART_KINDS:
            raise GroupSpecError("unknown part kind", token=self.kind)
        if self.kind == PRIMARY and not self.primes:
            raise GroupSpecError("primary part needs primes")

    @property
    def is_series(self) -> bool:
        return self.kind in (TORSION, DIVISIBLE, PRIMARY)

    def atom_indices(self, A: GroupDescriptor) -> Tuple[int, ...]:
        if self.kind == TORSION:
            return A.torsion_indices()
        if self.kind == DIVISIBLE:
            return A.divisible_indices()
        if self.kind == PRIMARY:
            return A.primary_indices(self.primes)
        return ()

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'kind': self.kind}
        if self.primes:
            data['primes'] = list(self.primes)
        return data

    def label(self) -> str:
        names = {TORSION: 'T', DIVISIBLE: 'D', FINITE: 'finite', WINDOW: 'window'}
        return names.get(self.kind, 'A_{' + ','.join(map(str, self.primes)) + '}')


@dataclass(frozen=True)
class HomData:
    """A homomorphism A/X -> X given by the images of finitely many slot generators.

    Slots not listed map to zero.  Images of Q_(p) slots are images of 1.
    """

    group: GroupDescriptor
    part: Part
    images: Tuple[Tuple[Slot, Element], ...] = ()

    def __post_init__(self):
        cleaned = {}
        for slot, image in self.images:
            slot = self.group.check_slot(tuple(slot))
            if image.group != self.group:
                raise AmbientMismatchError(f"image {image.label()} outside {self.group.label()}")
            if image:
                cleaned[slot] = image
        object.__setattr__(self, 'images', tuple(sorted(cleaned.items())))

    @classmethod
    def of(cls, group: GroupDescriptor, part: Part, images: Dict[Slot, Element]) -> 'HomData':
        return cls(group, part, tuple(images.items()))

    def as_dict(self) -> Dict[Slot, Element]:
        return dict(self.images)

    @property
    def support(self) -> Tuple[Slot, ...]:
        return tuple(s for s, _ in self.images)

    def __bool__(self) -> bool:
        return bool(self.images)

    def __add__(self, other: 'HomData') -> 'HomData':
        if other.group != self.group:
            raise AmbientMismatchError("homomorphisms on different groups")
        total = self.as_dict()
        for slot, image in other.images:
            total[slot] = total[slot] + image if slot in total else image
        return HomData.of(self.group, self.part, total)

    def scaled(self, q: Any) -> 'HomData':
        q = Fraction(q)
        return HomData.of(self.group, self.part, {s: v.scale_rational(q) for s, v in self.images})

    def evaluate(self, a: Element) -> Element:
        """phi(a); coordinates outside the support contribute nothing."""
        images = self.as_dict()
        total = self.group.zero()
        for slot, value in a.coords:
            if slot in images:
                total = total + images[slot].scale_rational(value)
        return total

    def check(self) -> List[str]:
        """Failed well-definedness clauses, empty when phi is a homomorphism A/X -> X."""
        A = self.group
        failures = []
        x_atoms = set(self.part.atom_indices(A))
        for slot, image in self.images:
            atom = A[slot[0]]
            where = f"slot {slot[0]}.{slot[1]}"
            if slot[0] in x_atoms:
                failures.append(f"source-outside-X: {where} lies in {self.part.label()}")
            if atom.kind == PRUEFER:
                failures.append(f"source-not-pruefer: {where} is divisible torsion")
                continue
            if self.part.is_series and any(s[0] not in x_atoms for s in image.support):
                failures.append(f"image-in-X: image of {where} leaves {self.part.label()}")
            if self.part.kind == FINITE and not image.is_torsion:
                failures.append(f"finite-image: image of {where} has infinite order")
            if atom.is_cyclic and image.scale(atom.modulus):
                failures.append(f"order: {atom.modulus} * image of {where} is not zero")
            if atom.kind == LOCALIZED_Q:
                bad = [s for s in image.support if not _uniquely_divisible(A[s[0]], atom.p)]
                if bad:
                    failures.append(f"divisibility: image of {where} is not uniquely {atom.p}-divisible")
        return failures

    def to_json(self) -> Dict[str, Any]:
        return {
            'part': self.part.to_json(),
            'images': [{'atom': s[0], 'copy': s[1], 'image': v.to_json()} for s, v in self.images],
        }

    def label(self) -> str:
        if not self.images:
            return '0'
        return '; '.join(f"{s[0]}.{s[1]} -> {v.label()}" for s, v in self.images)


def _uniquely_divisible(atom: Atom, p: int) -> bool:
    if atom.is_torsion:
        return atom.p != p
    return atom.kind == LOCALIZED_Q and atom.p == p


# Expressions

class AutoExpr:
    """Base class of the expression tree."""

    tag = 'AutoExpr'

    def to_json(self) -> Dict[str, Any]:
        return {'tag': self.tag}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(',', ':'))


@dataclass(frozen=True)
class Identity(AutoExpr):
    tag = 'Identity'

    def label(self) -> str:
        return '1'


@dataclass(frozen=True)
class Negation(AutoExpr):
    tag = 'Negation'

    def label(self) -> str:
        return '-1'


@dataclass(frozen=True)
class RatMult(AutoExpr):
    """Multiplication by m/n: (n a) gamma = m a."""

    m: int
    n: int = 1
    tag = 'RatMult'

    def to_json(self) -> Dict[str, Any]:
        return {'tag': self.tag, 'm': self.m, 'n': self.n}

    def label(self) -> str:
        return f"{self.m}/{self.n}" if self.n != 1 else str(self.m)


@dataclass(frozen=True)
class PAdicRat(AutoExpr):
    """Power automorphism m/n on the p-torsion atoms, identity elsewhere."""

    p: int
    m: int
    n: int = 1
    tag = 'PAdicRat'

    def to_json(self) -> Dict[str, Any]:
        return {'tag': self.tag, 'p': self.p, 'm': self.m, 'n': self.n}

    def label(self) -> str:
        value = f"{self.m}/{self.n}" if self.n != 1 else str(self.m)
        return f"[{value}]_{self.p}"


@dataclass(frozen=True)
class BlockSum(AutoExpr):
    """Per-atom action; each block is an expression on the one-atom group, unlisted atoms fixed."""

    blocks: Tuple[Tuple[int, AutoExpr], ...] = ()
    tag = 'BlockSum'

    @classmethod
    def of(cls, blocks: Dict[int, AutoExpr]) -> 'BlockSum':
        return cls(tuple(sorted(blocks.items(), key=lambda kv: kv[0])))

    def to_json(self) -> Dict[str, Any]:
        return {'tag': self.tag, 'blocks': [{'atom': i, 'expr': e.to_json()} for i, e in self.blocks]}

    def label(self) -> str:
        return '(+)'.join(f"{i}:{e.label()}" for i, e in self.blocks) or '1'


@dataclass(frozen=True)
class OnePlusHom(AutoExpr):
    """The map 1 + phi."""

    phi: HomData
    tag = 'OnePlusHom'

    def to_json(self) -> Dict[str, Any]:
        return {'tag': self.tag, 'phi': self.phi.to_json()}

    def label(self) -> str:
        return f"1+[{self.phi.label()}]"


@dataclass(frozen=True)
class Composite(AutoExpr):
    """Apply the parts left to right."""

    parts: Tuple[AutoExpr, ...] = ()
    tag = 'Composite'

    def __init__(self, parts: Iterable[AutoExpr] = ()):
        object.__setattr__(self, 'parts', tuple(parts))

    def to_json(self) -> Dict[str, Any]:
        return {'tag': self.tag, 'parts': [p.to_json() for p in self.parts]}

    def label(self) -> str:
        return '(' + ' . '.join(p.label() for p in self.parts) + ')'


@dataclass(frozen=True)
class Inverse(AutoExpr):
    expr: AutoExpr
    tag = 'Inverse'

    def to_json(self) -> Dict[str, Any]:
        return {'tag': self.tag, 'expr': self.expr.to_json()}

    def label(self) -> str:
        return f"{self.expr.label()}^-1"


def auto_from_json(obj: Any, A: GroupDescriptor, position: str = '$') -> AutoExpr:
    """Parse an expression tree; HomData images are read as elements of A."""
    if not isinstance(obj, dict) or 'tag' not in obj:
        raise GroupSpecError("expression must be an object with a 'tag'", position=position)
    tag = obj['tag']
    try:
        if tag == 'Identity':
            return Identity()
        if tag == 'Negation':
            return Negation()
        if tag == 'RatMult':
            return RatMult(int(obj['m']), int(obj.get('n', 1)))
        if tag == 'PAdicRat':
            return PAdicRat(int(obj['p']), int(obj['m']), int(obj.get('n', 1)))
        if tag == 'BlockSum':
            blocks = {}
            for i, entry in enumerate(obj['blocks']):
                atom_index = int(entry['atom'])
                if not 0 <= atom_index < len(A):
                    raise GroupSpecError("block atom out of range", token=str(atom_index),
                                         position=f"{position}.blocks[{i}]")
                if atom_index in blocks:
                    raise GroupSpecError("atom assigned twice", token=str(atom_index),
                                         position=f"{position}.blocks[{i}]")
                blocks[atom_index] = auto_from_json(entry['expr'], A.restrict([atom_index]),
                                                    f"{position}.blocks[{i}].expr")
            return BlockSum.of(blocks)
        if tag == 'OnePlusHom':
            return OnePlusHom(hom_from_json(obj['phi'], A, f"{position}.phi"))
        if tag == 'Composite':
            return Composite(auto_from_json(p, A, f"{position}.parts[{i}]") for i, p in enumerate(obj['parts']))
        if tag == 'Inverse':
            return Inverse(auto_from_json(obj['expr'], A, f"{position}.expr"))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, GroupSpecError):
            raise
        raise GroupSpecError(f"malformed {tag} expression", token=str(e), position=position) from None
    raise GroupSpecError("unknown expression tag", token=str(tag), position=position)


def hom_from_json(obj: Any, A: GroupDescriptor, position: str = '$') -> HomData:
    if not isinstance(obj, dict) or not isinstance(obj.get('images'), list):
        raise GroupSpecError("homomorphism must carry an 'images' list", position=position)
    part_obj = obj.get('part', {'kind': TORSION})
    part = Part(part_obj.get('kind', TORSION), tuple(int(p) for p in part_obj.get('primes', ())))
    images = {}
    for i, entry in enumerate(obj['images']):
        where = f"{position}.images[{i}]"
        try:
            slot = A.check_slot((int(entry['atom']), int(entry.get('copy', 0))))
        except (KeyError, TypeError, ValueError):
            raise GroupSpecError("bad image entry", token=json.dumps(entry), position=where) from None
        images[slot] = element_from_json(A, entry.get('image'), f"{where}.image")
    return HomData.of(A, part, images)


def parse_auto(text: str, A: GroupDescriptor) -> AutoExpr:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise GroupSpecError(e.msg, token=text[e.pos:e.pos + 12], position=f"line {e.lineno} column {e.colno}") \
            from None
    return auto_from_json(obj, A)


# Normal forms

def _canonical_scalar(atom: Atom, q: Fraction) -> Fraction:
    """Scalar q as it acts on the atom: a residue on cyclic atoms, q itself elsewhere."""
    q = Fraction(q)
    if atom.is_cyclic:
        n = atom.modulus
        return Fraction(q.numerator * int(mod_inverse(q.denominator, n)) % n)
    return q


def _scalar_is_unit(atom: Atom, q: Fraction) -> bool:
    if q == 0:
        return False
    if atom.is_cyclic or atom.kind == PRUEFER:
        return q.numerator % atom.p != 0 and q.denominator % atom.p != 0
    if atom.kind in (FREE_Z, FREE_Z_OMEGA):
        return abs(q) == 1
    m, n = abs(q.numerator), q.denominator
    return _is_power(m, atom.p) and _is_power(n, atom.p) and (m == 1 or n == 1)


def _is_power(n: int, p: int) -> bool:
    while n > 1 and n % p == 0:
        n //= p
    return n == 1


def _inverse_scalar(atom: Atom, q: Fraction) -> Fraction:
    if atom.is_cyclic:
        return Fraction(int(mod_inverse(q.numerator, atom.modulus)))
    return 1 / q


@dataclass(frozen=True)
class NormalForm:
    """gamma = D + phi: per-atom scalars plus a perturbation on finitely many slots."""

    group: GroupDescriptor
    scalars: Tuple[Fraction, ...]
    images: Tuple[Tuple[Slot, Element], ...] = ()

    def __post_init__(self):
        scalars = tuple(_canonical_scalar(a, q) for a, q in zip(self.group.atoms, self.scalars))
        object.__setattr__(self, 'scalars', scalars)
        object.__setattr__(self, 'images', tuple(sorted((s, v) for s, v in self.images if v)))

    @classmethod
    def identity(cls, A: GroupDescriptor) -> 'NormalForm':
        return cls(A, tuple(Fraction(1) for _ in A.atoms))

    @classmethod
    def diagonal(cls, A: GroupDescriptor, scalars: Sequence[Any]) -> 'NormalForm':
        return cls(A, tuple(Fraction(q) for q in scalars))

    def perturbation(self) -> Dict[Slot, Element]:
        return dict(self.images)

    @property
    def support(self) -> Tuple[Slot, ...]:
        return tuple(s for s, _ in self.images)

    def scalar_part(self, a: Element) -> Element:
        return self.group.element({
            slot: self.group[slot[0]].multiply(value, self.scalars[slot[0]]) for slot, value in a.coords
        })

    def perturb(self, a: Element) -> Element:
        images = self.perturbation()
        total = self.group.zero()
        for slot, value in a.coords:
            if slot in images:
                total = total + images[slot].scale_rational(value)
        return total

    def apply(self, a: Element) -> Element:
        if a.group != self.group:
            raise AmbientMismatchError(f"element of {a.group.label()} under an automorphism of {self.group.label()}")
        return self.scalar_part(a) + self.perturb(a)

    def minus_one(self, a: Element) -> Element:
        """a(gamma - 1)."""
        return self.apply(a) - a

    def then(self, other: 'NormalForm') -> 'NormalForm':
        """self followed by other."""
        if other.group != self.group:
            raise AmbientMismatchError("automorphisms of different groups")
        A = self.group
        scalars = tuple(x * y for x, y in zip(self.scalars, other.scalars))
        product = NormalForm(A, scalars)
        images = {}
        for slot in sorted(set(self.support) | set(other.support)):
            e = A.generator(slot)
            images[slot] = other.apply(self.apply(e)) - product.scalar_part(e)
        return NormalForm(A, scalars, tuple(images.items()))

    def window_generators(self, other: Optional['NormalForm'] = None, budget: int = 0) -> List[Element]:
        """Generators on which two normal forms are compared.

        Pruefer atoms are compared through their scalars, so none are listed.
        Omega atoms contribute their perturbed copies, the first ``budget``
        copies and one fresh copy carrying the bare scalar.
        """
        A = self.group
        support = set(self.support) | (set(other.support) if other else set())
        gens = []
        for i, atom in enumerate(A.atoms):
            if atom.kind == PRUEFER:
                continue
            if atom.is_omega:
                copies = {c for (j, c) in support if j == i} | set(range(budget))
                copies.add(max(copies, default=-1) + 1)
                gens.extend(A.generator((i, c)) for c in sorted(copies))
            else:
                gens.append(A.generator((i, 0)))
        return gens

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NormalForm):
            return NotImplemented
        if other.group != self.group:
            return False
        for atom, x, y in zip(self.group.atoms, self.scalars, other.scalars):
            if atom.kind == PRUEFER and x != y:
                return False
        return all(self.apply(e) == other.apply(e) for e in self.window_generators(other))

    def __hash__(self) -> int:
        return hash((self.group, tuple(q for a, q in zip(self.group.atoms, self.scalars) if a.kind == PRUEFER)))

    def is_identity(self) -> bool:
        return self == NormalForm.identity(self.group)

    def scalar_inverse(self) -> 'NormalForm':
        return NormalForm(self.group, tuple(_inverse_scalar(a, q) for a, q in zip(self.group.atoms, self.scalars)))

    def power(self, k: int) -> 'NormalForm':
        if k < 0:
            return invert(self).power(-k)
        result = NormalForm.identity(self.group)
        base = self
        while k:
            if k & 1:
                result = result.then(base)
            base = base.then(base)
            k >>= 1
        return result

    def to_expr(self) -> AutoExpr:
        """Composite([1 + chi, D]) with chi = phi D^-1."""
        A = self.group
        d_inv = self.scalar_inverse()
        chi = {s: d_inv.apply(v) for s, v in self.images}
        blocks = {i: _scalar_expr(atom, q) for i, (atom, q) in enumerate(zip(A.atoms, self.scalars)) if q != 1}
        parts: List[AutoExpr] = []
        if chi:
            parts.append(OnePlusHom(HomData.of(A, Part(WINDOW), chi)))
        if blocks:
            parts.append(BlockSum.of(blocks))
        if not parts:
            return Identity()
        return parts[0] if len(parts) == 1 else Composite(parts)

    def to_json(self) -> Dict[str, Any]:
        return {
            'scalars': [str(q) for q in self.scalars],
            'perturbation': [{'atom': s[0], 'copy': s[1], 'image': v.to_json()} for s, v in self.images],
        }

    def label(self) -> str:
        diag = ', '.join(str(q) for q in self.scalars)
        if not self.images:
            return f"diag({diag})"
        pert = '; '.join(f"{s[0]}.{s[1]} -> {v.label()}" for s, v in self.images)
        return f"diag({diag}) + [{pert}]"


def _scalar_expr(atom: Atom, q: Fraction) -> AutoExpr:
    if atom.is_torsion:
        return PAdicRat(atom.p, q.numerator, q.denominator)
    if q == -1:
        return Negation()
    return RatMult(q.numerator, q.denominator)


def _restrict_to(a: Element, slots: Iterable[Slot]) -> Element:
    keep = set(slots)
    return Element(a.group, tuple((s, v) for s, v in a.coords if s in keep))


def _nilpotency_bound(A: GroupDescriptor, slots: Sequence[Slot]) -> int:
    heights = [A[s[0]].k if A[s[0]].is_cyclic else 1 for s in slots]
    return len(slots) * max(heights, default=1) + 1


def _is_nilpotent_on(nf: NormalForm, slots: Sequence[Slot]) -> bool:
    """Whether the slot block of the perturbation is nilpotent."""
    for slot in slots:
        y = nf.group.generator(slot)
        for _ in range(_nilpotency_bound(nf.group, slots)):
            y = _restrict_to(nf.perturb(y), slots)
            if not y:
                break
        else:
            return False
    return True


def invert(nf: NormalForm) -> NormalForm:
    """gamma^-1, writing gamma = (1 + chi) followed by D."""
    A = nf.group
    d_inv = nf.scalar_inverse()
    chi = NormalForm(A, tuple(Fraction(1) for _ in A.atoms), tuple((s, d_inv.apply(v)) for s, v in nf.images))
    slots = chi.support
    if not any(_restrict_to(v, slots) for _, v in chi.images):
        inverse_chi = NormalForm(A, chi.scalars, tuple((s, -v) for s, v in chi.images))
    elif _is_nilpotent_on(chi, slots):
        images = {}
        for slot in slots:
            y, total = A.generator(slot), A.zero()
            while True:
                y = -chi.perturb(y)
                if not y:
                    break
                total = total + y
            images[slot] = total
        inverse_chi = NormalForm(A, chi.scalars, tuple(images.items()))
    else:
        inverse_chi = _invert_on_slots(chi)
    return d_inv.then(inverse_chi)


# Slot blocks
#
# 1 + chi is the identity off its support S, so it is bijective exactly when
# its S-block is.  Torsion slots map into torsion, which makes the S-block
# triangular: the cyclic slots of each prime form one block and the
# torsion-free slots another.

def _rational(q: Fraction) -> Rational:
    return Rational(q.numerator, q.denominator)


def _fraction(x: Any) -> Fraction:
    x = Rational(x)
    return Fraction(int(x.p), int(x.q))


def _slot_blocks(A: GroupDescriptor, slots: Iterable[Slot]) -> Tuple[Dict[int, List[Slot]], List[Slot]]:
    torsion: Dict[int, List[Slot]] = {}
    free = []
    for slot in slots:
        atom = A[slot[0]]
        if atom.is_cyclic:
            torsion.setdefault(atom.p, []).append(slot)
        else:
            free.append(slot)
    return torsion, free


def _torsion_block(nf: NormalForm, block: Sequence[Slot]) -> Matrix:
    """gamma on cyclic p-slots in Pruefer coordinates x / p^k; an integer matrix."""
    A = nf.group
    rows = []
    for s in block:
        image = nf.apply(A.generator(s))
        rows.append([_rational(image[t] * Fraction(A[s[0]].p) ** (A[s[0]].k - A[t[0]].k)) for t in block])
    return Matrix(rows)


def _free_block(nf: NormalForm, block: Sequence[Slot]) -> Matrix:
    A = nf.group
    return Matrix([[_rational(nf.apply(A.generator(s))[t]) for t in block] for s in block])


def _free_failures(nf: NormalForm, free: Sequence[Slot]) -> List[str]:
    """Determinant of each diagonal block must be a unit: +-1 on Z, +-p^j on Q_(p)."""
    A = nf.group
    blocks: Dict[int, List[Slot]] = {}
    for slot in free:
        atom = A[slot[0]]
        blocks.setdefault(atom.p if atom.kind == LOCALIZED_Q else 0, []).append(slot)
    failures = []
    for p, block in sorted(blocks.items()):
        det = _fraction(_free_block(nf, block).det())
        if p == 0:
            unit, ring = abs(det) == 1, 'Z'
        else:
            unit, ring = det != 0 and _is_power(abs(det.numerator), p) and _is_power(det.denominator, p), \
                f"Z[1/{p}]"
        if not unit:
            failures.append(f"bijective: det {det} on slots {list(block)} is not a unit of {ring}")
    return failures


def _bijectivity_failures(nf: NormalForm) -> List[str]:
    A = nf.group
    torsion, free = _slot_blocks(A, nf.support)
    failures = []
    cyclic = [s for p in sorted(torsion) for s in torsion[p]]
    if cyclic:
        source = span(A, [A.generator(s) for s in cyclic])
        image = span(A, [_restrict_to(nf.apply(A.generator(s)), cyclic) for s in cyclic], source.window)
        if index(image, source) != 1:
            failures.append(f"bijective: 1+phi is not onto the slots {cyclic}")
    failures.extend(_free_failures(nf, free))
    return failures


def _slot_preimage(nf: NormalForm, target: Element, torsion: Dict[int, List[Slot]],
                   free: Sequence[Slot]) -> Element:
    """y in the span of the slots with gamma(y) = target modulo the other slots."""
    A = nf.group
    y = A.zero()
    if free:
        row = Matrix([[_rational(target[t]) for t in free]]) * _free_block(nf, free).inv()
        y = A.element({t: _fraction(row[j]) for j, t in enumerate(free)})
    rest = target - nf.apply(y)
    for p, block in torsion.items():
        scale = [Fraction(p) ** A[t[0]].k for t in block]
        row = Matrix([[_rational(rest[t] / scale[j]) for j, t in enumerate(block)]]) \
            * _torsion_block(nf, block).inv()
        y = y + A.element({t: _canonical_scalar(A[t[0]], _fraction(row[j]) * scale[j])
                           for j, t in enumerate(block)})
    return y


def _invert_on_slots(chi: NormalForm) -> NormalForm:
    A = chi.group
    failures = _bijectivity_failures(chi)
    if failures:
        raise InvalidAutomorphismError(f"{chi.label()} is not bijective", failures)
    torsion, free = _slot_blocks(A, chi.support)
    images = {}
    for slot in chi.support:
        y = _slot_preimage(chi, A.generator(slot), torsion, free)
        images[slot] = y - chi.apply(y)
    return NormalForm(A, chi.scalars, tuple(images.items()))


def _rat_scalars(A: GroupDescriptor, q: Fraction) -> Tuple[Fraction, ...]:
    return tuple(q for _ in A.atoms)


def compile_expr(expr: AutoExpr, A: GroupDescriptor) -> NormalForm:
    """Normal form of a valid expression; raises InvalidAutomorphismError otherwise."""
    failures = _failures(expr, A)
    if failures:
        raise InvalidAutomorphismError(f"{expr.label()} is not an automorphism of {A.label()}", failures)
    return _compile(expr, A)


def _compile(expr: AutoExpr, A: GroupDescriptor) -> NormalForm:
    if isinstance(expr, Identity):
        return NormalForm.identity(A)
    if isinstance(expr, Negation):
        return NormalForm(A, _rat_scalars(A, Fraction(-1)))
    if isinstance(expr, RatMult):
        return NormalForm(A, _rat_scalars(A, Fraction(expr.m, expr.n)))
    if isinstance(expr, PAdicRat):
        q = Fraction(expr.m, expr.n)
        return NormalForm(A, tuple(q if a.is_torsion and a.p == expr.p else Fraction(1) for a in A.atoms))
    if isinstance(expr, BlockSum):
        return _compile_blocks(expr, A)
    if isinstance(expr, OnePlusHom):
        return NormalForm(A, _rat_scalars(A, Fraction(1)), expr.phi.images)
    if isinstance(expr, Composite):
        result = NormalForm.identity(A)
        for part in expr.parts:
            result = result.then(_compile(part, A))
        return result
    if isinstance(expr, Inverse):
        return invert(_compile(expr.expr, A))
    raise GroupSpecError("unknown expression", token=type(expr).__name__)


def _compile_blocks(expr: BlockSum, A: GroupDescriptor) -> NormalForm:
    scalars = [Fraction(1) for _ in A.atoms]
    images = {}
    for atom_index, block in expr.blocks:
        single = A.restrict([atom_index])
        local = _compile(block, single)
        scalars[atom_index] = local.scalars[0]
        for (_, copy), image in local.images:
            images[(atom_index, copy)] = A.element({(atom_index, c): v for (_, c), v in image.coords})
    return NormalForm(A, tuple(scalars), tuple(images.items()))


# Validation

@dataclass
class ValidityReport:
    valid: bool
    failures: List[str] = field(default_factory=list)

    def to_json(self) -> Dict[str, Any]:
        return {'valid': self.valid, 'failures': list(self.failures)}


def _failures(expr: AutoExpr, A: GroupDescriptor) -> List[str]:
    if isinstance(expr, (Identity, Negation)):
        return []
    if isinstance(expr, RatMult):
        return _ratmult_failures(expr, A)
    if isinstance(expr, PAdicRat):
        failures = []
        if not isprime(expr.p):
            failures.append(f"prime: {expr.p} is not prime")
        elif expr.n == 0 or expr.m % expr.p == 0 or expr.n % expr.p == 0:
            failures.append(f"unit: {expr.m}/{expr.n} is not a {expr.p}-adic unit")
        return failures
    if isinstance(expr, BlockSum):
        failures = []
        seen = set()
        for atom_index, block in expr.blocks:
            if not 0 <= atom_index < len(A) or atom_index in seen:
                failures.append(f"blocks: bad or repeated atom {atom_index}")
                continue
            seen.add(atom_index)
            failures.extend(f"block {atom_index}: {f}" for f in _failures(block, A.restrict([atom_index])))
        return failures
    if isinstance(expr, OnePlusHom):
        return _one_plus_hom_failures(expr.phi, A)
    if isinstance(expr, Composite):
        failures = []
        for i, part in enumerate(expr.parts):
            failures.extend(f"part {i}: {f}" for f in _failures(part, A))
        return failures
    if isinstance(expr, Inverse):
        return _failures(expr.expr, A)
    return [f"expression: unknown constructor {type(expr).__name__}"]


def _ratmult_failures(expr: RatMult, A: GroupDescriptor) -> List[str]:
    m, n = expr.m, expr.n
    if m == 0 or n == 0:
        return ["coprime: m and n must be nonzero"]
    failures = []
    if math.gcd(m, n) != 1:
        failures.append(f"coprime: gcd({m}, {n}) != 1")
    primes = set(factorint(abs(m * n)))
    for i, atom in enumerate(A.atoms):
        if atom.is_torsion and atom.p in primes:
            failures.append(f"A_pi(mn)=0: atom {i} ({atom.label()}) is {atom.p}-torsion")
        elif atom.kind in (FREE_Z, FREE_Z_OMEGA) and primes:
            failures.append(f"mnA=A: {abs(m * n)}Z != Z at atom {i}")
        elif atom.kind == LOCALIZED_Q and primes - {atom.p}:
            failures.append(f"mnA=A: {abs(m * n)}{atom.label()} != {atom.label()} at atom {i}")
    return failures


def _one_plus_hom_failures(phi: HomData, A: GroupDescriptor) -> List[str]:
    if phi.group != A:
        return [f"ambient: homomorphism on {phi.group.label()} used on {A.label()}"]
    failures = phi.check()
    if failures:
        return failures
    nf = NormalForm(A, _rat_scalars(A, Fraction(1)), phi.images)
    slots = nf.support
    if not any(_restrict_to(v, slots) for _, v in nf.images) or _is_nilpotent_on(nf, slots):
        return []
    return _bijectivity_failures(nf)


def validate(expr: AutoExpr, A: GroupDescriptor) -> ValidityReport:
    """Side conditions of every constructor, checked against A."""
    failures = _failures(expr, A)
    return ValidityReport(not failures, failures)


def apply(expr: AutoExpr, a: Element) -> Element:
    return compile_expr(expr, a.group).apply(a)


def equal(f: AutoExpr, g: AutoExpr, A: GroupDescriptor) -> bool:
    """Equality contract: Pruefer scalars agree and the images of the window generators agree."""
    return compile_expr(f, A) == compile_expr(g, A)


def power(expr: AutoExpr, k: int) -> AutoExpr:
    if k == 0:
        return Identity()
    if k < 0:
        return Inverse(power(expr, -k))
    return expr if k == 1 else Composite([expr] * k)


# Finitary automorphisms

@dataclass
class FinitaryVerdict:
    value: bool
    witness: Optional[Subgroup] = None
    direction: str = ''

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'finitary': self.value}
        if self.witness is not None:
            data['image'] = self.witness.to_json()
            data['image_order'] = self.witness.order()
        if self.direction:
            data['direction'] = self.direction
        return data


def _class_generators(nf: NormalForm, atom_index: int) -> List[Element]:
    """Slots of an atom that must be inspected: the perturbed ones plus a generic one."""
    A = nf.group
    atom = A[atom_index]
    if not atom.is_omega:
        return [A.generator((atom_index, 0))]
    copies = sorted(c for (i, c) in nf.support if i == atom_index)
    fresh = copies[-1] + 1 if copies else 0
    return [A.generator((atom_index, c)) for c in copies + [fresh]]


def is_finitary(expr: AutoExpr, A: GroupDescriptor) -> FinitaryVerdict:
    """Decide whether A(gamma - 1) is finite."""
    return finitary_normal_form(compile_expr(expr, A))


def finitary_normal_form(nf: NormalForm) -> FinitaryVerdict:
    A = nf.group
    images = []
    for i, atom in enumerate(A.atoms):
        if atom.kind == PRUEFER:
            if nf.scalars[i] != 1:
                return FinitaryVerdict(False, direction=f"atom {i} ({atom.label()}): multiplication by "
                                                        f"{nf.scalars[i]} - 1 is onto {atom.label()}")
            continue
        if atom.is_omega and nf.scalars[i] != 1:
            return FinitaryVerdict(False, direction=f"atom {i} ({atom.label()}): scalar {nf.scalars[i]} "
                                                    f"moves every copy")
        for e in _class_generators(nf, i):
            moved = nf.minus_one(e)
            if not moved.is_torsion:
                return FinitaryVerdict(False, direction=f"slot {e.support[0]}: image {moved.label()} "
                                                        f"has infinite order")
            images.append(moved)
    return FinitaryVerdict(True, witness=span(A, [m for m in images if m]))


# Multiplications

WHOLE = 'whole'
MOD_T = 'mod-T'
ON_D = 'on-D'
ON_P = 'on-A_p'
MOD_D = 'mod-D'
FINITE_INDEX = 'finite-index'
REGIONS = (WHOLE, MOD_T, ON_D, ON_P, MOD_D, FINITE_INDEX)


@dataclass
class Multiplier:
    """A multiplication: one rational, or a p-adic rational per prime.

    For the finite-index region the subgroup is everything except the
    excluded torsion slots, with ``multiples`` (slot -> k) replacing the
    torsion-free slots by k times their generator.
    """

    region: str
    rational: Optional[Fraction] = None
    local: Tuple[Tuple[int, Fraction], ...] = ()
    excluded: Tuple[Slot, ...] = ()
    multiples: Tuple[Tuple[Slot, int], ...] = ()

    def at(self, p: int) -> Optional[Fraction]:
        if self.rational is not None:
            return self.rational
        return dict(self.local).get(p)

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'region': self.region}
        if self.rational is not None:
            data['rational'] = str(self.rational)
        if self.local:
            data['local'] = {str(p): str(q) for p, q in self.local}
        if self.excluded:
            data['excluded'] = [list(s) for s in self.excluded]
        if self.multiples:
            data['multiples'] = [{'atom': s[0], 'copy': s[1], 'k': k} for s, k in self.multiples]
        return data

    def label(self) -> str:
        if self.rational is not None:
            return str(self.rational)
        return ', '.join(f"{q} at {p}" for p, q in self.local)


def _region_atoms(A: GroupDescriptor, region: str, p: Optional[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """(domain atoms, atoms quotiented out) of a region."""
    everything = tuple(range(len(A)))
    if region in (WHOLE, FINITE_INDEX):
        return everything, ()
    if region == MOD_T:
        return A.torsion_free_indices(), A.torsion_indices()
    if region == ON_D:
        return A.divisible_indices(), ()
    if region == ON_P:
        if p is None:
            raise GroupSpecError("region on-A_p needs a prime")
        return A.primary_indices([p]), ()
    if region == MOD_D:
        divisible = A.divisible_indices()
        return tuple(i for i in everything if i not in divisible), divisible
    raise GroupSpecError("unknown region", token=region)


def multiplication_certificate(expr: AutoExpr, A: GroupDescriptor, region: str = WHOLE,
                               p: Optional[int] = None) -> Optional[Multiplier]:
    return multiplier_of(compile_expr(expr, A), region, p)


def multiplier_of(nf: NormalForm, region: str = WHOLE, p: Optional[int] = None) -> Optional[Multiplier]:
    """The multiplier by which gamma acts on a region, or None."""
    domain, ignored = _region_atoms(nf.group, region, p)
    return multiplier_over(nf, domain, ignored, region)


def multiplier_over(nf: NormalForm, domain: Sequence[int], ignored: Sequence[int],
                     region: str = WHOLE, finite_index: Optional[bool] = None) -> Optional[Multiplier]:
    A = nf.group
    if finite_index is None:
        finite_index = region == FINITE_INDEX
    exact: List[Fraction] = []
    pruefer: Dict[int, set] = {}
    residues: Dict[int, List[Tuple[int, int]]] = {}
    excluded: List[Slot] = []
    multiples: List[Tuple[Slot, int]] = []
    for i in domain:
        atom = A[i]
        if atom.kind == PRUEFER:
            pruefer.setdefault(atom.p, set()).add(nf.scalars[i])
            continue
        if finite_index and atom.kind == CYCLIC:
            excluded.append((i, 0))
            continue
        for e in _class_generators(nf, i):
            slot = e.support[0]
            image = nf.apply(e)
            if finite_index and atom.is_torsion and slot in nf.perturbation():
                excluded.append(slot)
                continue
            image = image.project(j for j in range(len(A)) if j not in ignored)
            if finite_index and not atom.is_torsion:
                torsion = image.project(A.torsion_indices())
                if torsion:
                    multiples.append((slot, int(torsion.order())))
                image = image - torsion
            if any(s != slot for s in image.support):
                return None
            value = image[slot]
            if atom.is_cyclic:
                residues.setdefault(atom.p, []).append((int(value), atom.modulus))
            else:
                exact.append(value)
    result = _solve_multiplier(exact, pruefer, residues)
    if result is None:
        return None
    rational, local = result
    return Multiplier(region, rational, local, tuple(sorted(set(excluded))), tuple(sorted(multiples)))


def _combine_residues(constraints: List[Tuple[int, int]]) -> Optional[Tuple[int, int]]:
    """One residue mod the largest modulus that reduces to every constraint."""
    value, modulus = max(constraints, key=lambda c: c[1])
    for v, m in constraints:
        if (value - v) % m:
            return None
    return value % modulus, modulus


def _matches(q: Fraction, p: int, residues: List[Tuple[int, int]], pruefer: set) -> bool:
    if q.denominator % p == 0:
        return False
    if pruefer and pruefer != {q}:
        return False
    return all((q.numerator * int(mod_inverse(q.denominator, m)) - v) % m == 0 for v, m in residues)


def _solve_multiplier(exact: List[Fraction], pruefer: Dict[int, set],
                      residues: Dict[int, List[Tuple[int, int]]]):
    if len(set(exact)) > 1 or any(len(v) > 1 for v in pruefer.values()):
        return None
    primes = sorted(set(pruefer) | set(residues))
    candidates = set(exact) or {next(iter(v)) for v in pruefer.values()}
    for q in sorted(candidates):
        if all(_matches(q, r, residues.get(r, []), pruefer.get(r, set())) for r in primes):
            return q, ()
    if exact:
        return None
    local = {}
    for r in primes:
        if r in pruefer:
            u = next(iter(pruefer[r]))
            if not _matches(u, r, residues.get(r, []), pruefer[r]):
                return None
            local[r] = u
        else:
            combined = _combine_residues(residues[r])
            if combined is None:
                return None
            local[r] = combined
    if not pruefer:
        if not local:
            return Fraction(1), ()
        value, _ = crt([m for _, m in local.values()], [v for v, _ in local.values()])
        return Fraction(int(value)), ()
    return None, tuple((r, Fraction(v) if r in pruefer else Fraction(v[0])) for r, v in sorted(local.items()))


# Stability groups and conjugation

def fixes_atoms(nf: NormalForm, atoms: Iterable[int]) -> bool:
    """gamma is the identity on the listed atoms."""
    for i in atoms:
        if nf.group[i].kind == PRUEFER:
            if nf.scalars[i] != 1:
                return False
        elif any(nf.minus_one(e) for e in _class_generators(nf, i)):
            return False
    return True


def trivial_modulo(nf: NormalForm, atoms: Iterable[int]) -> bool:
    """gamma acts as the identity on A/X, X the sum of the listed atoms."""
    x_atoms = set(atoms)
    for i in range(len(nf.group)):
        if i in x_atoms:
            continue
        if nf.group[i].kind == PRUEFER:
            if nf.scalars[i] != 1:
                return False
        elif any(s[0] not in x_atoms for e in _class_generators(nf, i) for s in nf.minus_one(e).support):
            return False
    return True


def is_stability_element(expr: AutoExpr, part: Part, A: GroupDescriptor) -> bool:
    nf = compile_expr(expr, A)
    x_atoms = part.atom_indices(A)
    return fixes_atoms(nf, x_atoms) and trivial_modulo(nf, x_atoms)


def stab_to_hom(sigma: AutoExpr, part: Part, A: GroupDescriptor) -> HomData:
    """sigma - 1 read as a homomorphism A/X -> X."""
    if not part.is_series:
        raise StabilityError(f"{part.label()} is not a characteristic part")
    nf = compile_expr(sigma, A)
    x_atoms = part.atom_indices(A)
    if not fixes_atoms(nf, x_atoms):
        raise StabilityError(f"{sigma.label()} moves {part.label()}")
    if not trivial_modulo(nf, x_atoms):
        raise StabilityError(f"{sigma.label()} is not the identity on A/{part.label()}")
    images = {}
    for i in range(len(A)):
        if i in x_atoms or A[i].kind == PRUEFER:
            continue
        for e in _class_generators(nf, i):
            images[e.support[0]] = nf.minus_one(e)
    return HomData.of(A, part, images)


def hom_to_stab(phi: HomData) -> AutoExpr:
    failures = phi.check()
    if failures:
        raise InvalidAutomorphismError(f"{phi.label()} is not a homomorphism into {phi.part.label()}", failures)
    return OnePlusHom(phi) if phi else Identity()


def conjugate_hom(phi: HomData, gamma: AutoExpr) -> HomData:
    """The module action: x -> (phi(x gamma^-1)) gamma."""
    A = phi.group
    nf = compile_expr(gamma, A)
    inverse = invert(nf)
    x_atoms = set(phi.part.atom_indices(A))
    slots = (set(phi.support) | set(inverse.support)) - {s for s in inverse.support if s[0] in x_atoms}
    images = {}
    for slot in sorted(slots):
        if slot[0] in x_atoms or A[slot[0]].kind == PRUEFER:
            continue
        images[slot] = nf.apply(phi.evaluate(inverse.apply(A.generator(slot))))
    return HomData.of(A, phi.part, images)


@dataclass
class ConjugationResult:
    """sigma^gamma with the closed forms that apply, each checked against the definition."""

    expr: AutoExpr
    normal_form: NormalForm
    module_form: Optional[AutoExpr] = None
    module_agrees: Optional[bool] = None
    power_exponent: Optional[Fraction] = None
    power_agrees: Optional[bool] = None

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'conjugate': self.normal_form.to_json()}
        if self.module_form is not None:
            data['module_form'] = self.module_form.to_json()
            data['module_agrees'] = self.module_agrees
        if self.power_exponent is not None:
            data['power_exponent'] = str(self.power_exponent)
            data['power_agrees'] = self.power_agrees
        return data


def conjugate(sigma: AutoExpr, gamma: AutoExpr, A: GroupDescriptor, part: Optional[Part] = None) -> ConjugationResult:
    """gamma^-1 sigma gamma.

    With a part X that sigma stabilizes, the result is also computed as
    1 + gamma^-1 (sigma - 1) gamma, and, when gamma = m1 on X and
    gamma^-1 = m2 on A/X, as sigma^(m1 m2).
    """
    expr = Composite([Inverse(gamma), sigma, gamma])
    nf = compile_expr(expr, A)
    result = ConjugationResult(expr, nf)
    if part is None:
        return result
    phi = stab_to_hom(sigma, part, A)
    result.module_form = hom_to_stab(conjugate_hom(phi, gamma))
    result.module_agrees = compile_expr(result.module_form, A) == nf
    exponent = lemma_exponent(gamma, part, A)
    if exponent is not None:
        result.power_exponent = exponent
        try:
            closed = hom_to_stab(phi.scaled(exponent))
            result.power_agrees = compile_expr(closed, A) == nf
        except NotDivisibleError:
            result.power_agrees = False
    return result


def lemma_exponent(gamma: AutoExpr, part: Part, A: GroupDescriptor) -> Optional[Fraction]:
    """m1 * m2 when gamma = m1 on X and gamma^-1 = m2 on A/X, both rational."""
    nf = compile_expr(gamma, A)
    x_atoms = part.atom_indices(A)
    m1 = _multiplier_on(nf, x_atoms, ())
    m2 = _multiplier_on(invert(nf), tuple(i for i in range(len(A)) if i not in x_atoms), x_atoms)
    if m1 is None or m2 is None:
        return None
    return m1 * m2


def _multiplier_on(nf: NormalForm, domain: Sequence[int], ignored: Sequence[int]) -> Optional[Fraction]:
    found = multiplier_over(nf, domain, ignored)
    return found.rational if found is not None else None


def conjugate_split(sigma: AutoExpr, gamma1: AutoExpr, gamma2: AutoExpr, part: Part,
                    A: GroupDescriptor) -> ConjugationResult:
    """sigma^(gamma1 gamma2) = gamma2^-1 (sigma - 1) gamma1 + 1.

    Needs gamma1 trivial on A/X and gamma2 trivial on X.
    """
    x_atoms = part.atom_indices(A)
    nf1, nf2 = compile_expr(gamma1, A), compile_expr(gamma2, A)
    if not trivial_modulo(nf1, x_atoms):
        raise StabilityError(f"{gamma1.label()} is not the identity on A/{part.label()}")
    if not fixes_atoms(nf2, x_atoms):
        raise StabilityError(f"{gamma2.label()} moves {part.label()}")
    gamma = Composite([gamma1, gamma2])
    expr = Composite([Inverse(gamma), sigma, gamma])
    nf = compile_expr(expr, A)
    phi = stab_to_hom(sigma, part, A)
    inverse2 = invert(nf2)
    slots = set(phi.support) | {s for s in inverse2.support if s[0] not in x_atoms}
    images = {s: nf1.apply(phi.evaluate(inverse2.apply(A.generator(s))))
              for s in sorted(slots) if A[s[0]].kind != PRUEFER}
    closed = hom_to_stab(HomData.of(A, part, images))
    return ConjugationResult(expr, nf, closed, compile_expr(closed, A) == nf)


def order(expr: AutoExpr, A: GroupDescriptor, cap: Optional[int] = None) -> Optional[int]:
    """Order of gamma, or None if it exceeds the cap."""
    cap = cap or Config.INVERSE_ORDER_CAP
    nf = compile_expr(expr, A)
    identity = NormalForm.identity(A)
    current = nf
    for k in range(1, cap + 1):
        if current == identity:
            return k
        current = current.then(nf)
    return None


def commutator(f: AutoExpr, g: AutoExpr) -> AutoExpr:
    """[f, g] = f^-1 g^-1 f g."""
    return Composite([Inverse(f), Inverse(g), f, g])


def restrict_normal_form(nf: NormalForm, atoms: Sequence[int], extra: Sequence[Tuple[Atom, Any]] = ()) -> NormalForm:
    """gamma on the summand made of the listed (gamma-invariant) atoms, plus extra scalar atoms."""
    A = nf.group
    position = {i: j for j, i in enumerate(atoms)}
    B = GroupDescriptor(tuple(A[i] for i in atoms) + tuple(atom for atom, _ in extra))
    scalars = [nf.scalars[i] for i in atoms] + [Fraction(q) for _, q in extra]
    images = {}
    for (i, c), image in nf.images:
        if i not in position:
            continue
        if any(s[0] not in position for s in image.support):
            raise AmbientMismatchError(f"atoms {list(atoms)} are not invariant")
        images[(position[i], c)] = B.element({(position[j], d): v for (j, d), v in image.coords})
    return NormalForm(B, tuple(scalars), tuple(images.items()))


def embed_normal_form(nf: NormalForm, atoms: Sequence[int], A: GroupDescriptor) -> NormalForm:
    """gamma (+) 1, where gamma acts on the summand of A made of the listed atoms."""
    if nf.group != A.restrict(atoms):
        raise AmbientMismatchError(f"{nf.group.label()} is not the summand {list(atoms)} of {A.label()}")
    scalars = [Fraction(1) for _ in A.atoms]
    for j, i in enumerate(atoms):
        scalars[i] = nf.scalars[j]
    images = {(atoms[j], c): A.element({(atoms[k], d): v for (k, d), v in image.coords})
              for (j, c), image in nf.images}
    return NormalForm(A, tuple(scalars), tuple(images.items()))


def embed(expr: AutoExpr, atoms: Sequence[int], A: GroupDescriptor) -> AutoExpr:
    return embed_normal_form(compile_expr(expr, A.restrict(atoms)), atoms, A).to_expr()
