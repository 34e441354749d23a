"""
Atomic k-types as bit-vectors.

A k-type over a signature is the set of positive non-equality atoms over the
terms x1..xk, c1..cm that it makes true; every other atom is false. Atoms are
numbered canonically: relations in signature order, then argument tuples in
lexicographic order over the term alphabet (x1..xk first, then constants).
Bit i of a type is the truth of atom i, so the canonical order of types is the
order of their integer values.

Terms inside this module are integers: 0..k-1 stand for x1..xk and k+j for
the j-th constant.
"""
from __future__ import annotations

import logging
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterable, Iterator, Sequence

from gforge.logic_syntax import Signature

logger = logging.getLogger(__name__)


class TypeAlgebraError(ValueError):
    """Bad index selection, arity mismatch or an enumeration above its cap."""


AtomKey = tuple[str, tuple[int, ...]]


@dataclass(frozen=True)
class AtomSpace:
    """Canonical numbering of the atoms available to k-types."""

    signature: Signature
    arity: int

    @cached_property
    def alphabet(self) -> int:
        return self.arity + len(self.signature.constants)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        offsets, total = [], 0
        for _, ar in self.signature.relations:
            offsets.append(total)
            total += self.alphabet**ar
        return tuple(offsets)

    @cached_property
    def size(self) -> int:
        return sum(self.alphabet**ar for _, ar in self.signature.relations)

    @cached_property
    def _rel_index(self) -> dict[str, int]:
        return {name: i for i, (name, _) in enumerate(self.signature.relations)}

    def index(self, rel: str, args: Sequence[int]) -> int:
        r = self._rel_index[rel]
        code = 0
        for a in args:
            code = code * self.alphabet + a
        return self.offsets[r] + code

    def decode(self, bit: int) -> AtomKey:
        r = bisect_right(self.offsets, bit) - 1
        name, ar = self.signature.relations[r]
        code = bit - self.offsets[r]
        args = [0] * ar
        for i in range(ar - 1, -1, -1):
            code, args[i] = divmod(code, self.alphabet)
        return name, tuple(args)

    def term(self, t: int | str) -> int:
        """Integer term for a variable position or a constant name."""
        if isinstance(t, str):
            return self.arity + self.signature.constants.index(t)
        return t

    def term_name(self, t: int) -> str:
        if t < self.arity:
            return f"x{t + 1}"
        return self.signature.constants[t - self.arity]

    @cached_property
    def atoms(self) -> tuple[AtomKey, ...]:
        return tuple(self.decode(i) for i in range(self.size))

    def variables_of(self, bit: int) -> frozenset[int]:
        return frozenset(a for a in self.decode(bit)[1] if a < self.arity)

    @cached_property
    def boundary_mask(self) -> int:
        full = frozenset(range(self.arity))
        mask = 0
        for i in range(self.size):
            if self.variables_of(i) == full:
                mask |= 1 << i
        return mask

    @cached_property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def relation_mask(self, rel: str) -> int:
        """All atoms of one relation, e.g. the forced atoms of a universal role."""
        r = self._rel_index[rel]
        lo = self.offsets[r]
        return ((1 << (self.alphabet ** self.signature.relations[r][1])) - 1) << lo


@lru_cache(maxsize=None)
def atom_space(signature: Signature, arity: int) -> AtomSpace:
    return AtomSpace(signature, arity)


def iter_bits(bits: int) -> Iterator[int]:
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


@lru_cache(maxsize=4096)
def _remap_table(signature: Signature, src: int, dst: int, positions: tuple[int, ...], lift: bool) -> tuple[int, ...]:
    """Per-bit image of a variable remapping between atom spaces, -1 when dropped.

    With ``lift`` the source variable j becomes destination variable
    positions[j]; otherwise destination variable j is source variable positions[j].
    """
    s, d = atom_space(signature, src), atom_space(signature, dst)
    if lift:
        var_map = {j: p for j, p in enumerate(positions)}
    else:
        var_map = {p: j for j, p in enumerate(positions)}
    table = []
    for bit in range(s.size):
        rel, args = s.decode(bit)
        new_args = []
        for a in args:
            if a >= src:
                new_args.append(a - src + dst)
            elif a in var_map:
                new_args.append(var_map[a])
            else:
                break
        else:
            table.append(d.index(rel, new_args))
            continue
        table.append(-1)
    return tuple(table)


def reduct_bits(signature: Signature, arity: int, bits: int, positions: Sequence[int]) -> int:
    """Reduct onto 0-based ``positions``; destination variable j is source positions[j]."""
    table = _remap_table(signature, arity, len(positions), tuple(positions), False)
    out = 0
    for bit in iter_bits(bits):
        target = table[bit]
        if target >= 0:
            out |= 1 << target
    return out


def lift_bits(signature: Signature, src: int, dst: int, bits: int, positions: Sequence[int]) -> int:
    """Embed a src-type into dst variables; source variable j lands on positions[j]."""
    table = _remap_table(signature, src, dst, tuple(positions), True)
    out = 0
    for bit in iter_bits(bits):
        out |= 1 << table[bit]
    return out


def lift_table(signature: Signature, src: int, dst: int, positions: Sequence[int]) -> tuple[int, ...]:
    return _remap_table(signature, src, dst, tuple(positions), True)


@dataclass(frozen=True)
class BoundaryAssignment:
    """Atoms of a type that mention every one of its variables."""

    signature: Signature
    arity: int
    bits: int

    def atoms(self) -> list[str]:
        return _atom_texts(atom_space(self.signature, self.arity), self.bits)


@dataclass(frozen=True, order=True)
class AtomicType:
    bits: int
    arity: int
    signature: Signature

    @property
    def space(self) -> AtomSpace:
        return atom_space(self.signature, self.arity)

    @classmethod
    def from_atoms(cls, signature: Signature, arity: int, atoms: Iterable[tuple[str, Sequence[int | str]]]) -> AtomicType:
        """Atoms given with 0-based variable positions or constant names."""
        space = atom_space(signature, arity)
        bits = 0
        for rel, args in atoms:
            if len(args) != signature.arity(rel):
                raise TypeAlgebraError(f"{rel} expects {signature.arity(rel)} arguments")
            terms = [space.term(a) for a in args]
            if any(isinstance(a, int) and not 0 <= a < arity for a in args):
                raise TypeAlgebraError(f"variable position out of range in {rel}{tuple(args)}")
            bits |= 1 << space.index(rel, terms)
        return cls(bits, arity, signature)

    def holds(self, rel: str, args: Sequence[int | str]) -> bool:
        space = self.space
        return bool(self.bits >> space.index(rel, [space.term(a) for a in args]) & 1)

    def atoms(self) -> list[str]:
        return _atom_texts(self.space, self.bits)

    def __str__(self) -> str:
        return "{" + ", ".join(self.atoms()) + "}"


def _atom_texts(space: AtomSpace, bits: int) -> list[str]:
    texts = []
    for bit in iter_bits(bits):
        rel, args = space.decode(bit)
        texts.append(f"{rel}({','.join(space.term_name(a) for a in args)})")
    return texts


def count_types(signature: Signature, k: int) -> int:
    """Product over relations of 2 ** ((k + |Cons|) ** arity)."""
    m = len(signature.constants)
    return math.prod(2 ** ((k + m) ** ar) for _, ar in signature.relations)


def enumerate_types(signature: Signature, k: int, cap: int | None = None) -> Iterator[AtomicType]:
    """All k-types in canonical order."""
    total = count_types(signature, k)
    if cap is not None and total > cap:
        raise TypeAlgebraError(f"{total} {k}-types exceed the enumeration cap {cap}")
    for bits in range(total):
        yield AtomicType(bits, k, signature)


def enumerate_forced(signature: Signature, k: int, forced: int, cap: int | None = None) -> list[int]:
    """Bits of every k-type containing all atoms in ``forced``, sorted."""
    space = atom_space(signature, k)
    free = space.full_mask & ~forced
    total = 1 << bin(free).count("1")
    if cap is not None and total > cap:
        raise TypeAlgebraError(f"{total} {k}-types exceed the enumeration cap {cap}")
    out = []
    sub = free
    while True:
        out.append(sub | forced)
        if sub == 0:
            break
        sub = (sub - 1) & free
    out.reverse()
    return out


def reduct(tau: AtomicType, indices: Sequence[int]) -> AtomicType:
    """Reduct onto 1-based ``indices``; x_{indices[j]} is renamed x_{j+1}."""
    if len(set(indices)) != len(indices):
        raise TypeAlgebraError(f"duplicate indices {list(indices)}")
    if any(not 1 <= i <= tau.arity for i in indices):
        raise TypeAlgebraError(f"indices {list(indices)} out of range for arity {tau.arity}")
    positions = [i - 1 for i in indices]
    return AtomicType(reduct_bits(tau.signature, tau.arity, tau.bits, positions), len(positions), tau.signature)


def prefix_reduct(tau: AtomicType, k: int) -> AtomicType:
    return reduct(tau, range(1, k + 1))


def boundary(tau: AtomicType) -> BoundaryAssignment:
    return BoundaryAssignment(tau.signature, tau.arity, tau.bits & tau.space.boundary_mask)


def interior(tau: AtomicType) -> AtomicType:
    return AtomicType(tau.bits & ~tau.space.boundary_mask, tau.arity, tau.signature)


def compatible(tau1: AtomicType, tau2: AtomicType) -> bool:
    if tau1.arity != tau2.arity or tau1.signature != tau2.signature:
        raise TypeAlgebraError("compatibility needs types of equal arity and signature")
    mask = ~tau1.space.boundary_mask
    return (tau1.bits & mask) == (tau2.bits & mask)


def is_guarded_type(tau: AtomicType) -> bool:
    return tau.arity <= 1 or bool(tau.bits & tau.space.boundary_mask)


def index_sequences(k: int) -> Iterator[tuple[int, ...]]:
    """All sequences of distinct 0-based positions below k, every length and order."""
    for m in range(k + 1):
        for seq in product(range(k), repeat=m):
            if len(set(seq)) == m:
                yield seq
