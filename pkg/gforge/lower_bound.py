"""
A family of short guarded sentences whose models are doubly exponential.

phi_n names a ground tuple a_1..a_n and demands a witness element for every
set of permutations of it: Wit links a witness to every rearrangement of the
ground tuple, Mem records which rearrangements belong to the set, and Adj
steps from one set to the set differing on a single permutation. The
auxiliary relations Inc, Gen, Dec and Succ run a counter along

    pi' = cyc^-j . rho . cyc^k . pi,   0 <= j < k < n,  rho(n) = n,

which reaches every permutation other than pi, so Adj neighbours agree on
all other memberships. Every model therefore has 2**(n!) distinct witnesses.

Permutations are 0-based tuples p with p[i] the image of i. A permutation
acts on a tuple by moving the entry at position i to position p[i].
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from typing import Iterable, Sequence, TypeVar

from gforge.logic_syntax import (
    And,
    Atom,
    Iff,
    Implies,
    Not,
    Or,
    QuantKind,
    Sentence,
    Signature,
    Var,
    conjoin,
    make_quantifier,
)
from gforge.model_builder import MaterializationRefused
from gforge.structure_lab import FiniteStructure, model_check

logger = logging.getLogger(__name__)

Perm = tuple[int, ...]
T = TypeVar("T")

MODEL_LIMIT = 3


# --- permutations ---------------------------------------------------------------------------------


def apply_permutation(p: Perm, items: Sequence[T]) -> tuple[T, ...]:
    out: list = [None] * len(items)
    for i, target in enumerate(p):
        out[target] = items[i]
    return tuple(out)


def compose(p: Perm, q: Perm) -> Perm:
    """p after q."""
    return tuple(p[q[i]] for i in range(len(q)))


def inverse(p: Perm) -> Perm:
    out = [0] * len(p)
    for i, target in enumerate(p):
        out[target] = i
    return tuple(out)


def power(p: Perm, e: int) -> Perm:
    base = p if e >= 0 else inverse(p)
    out = tuple(range(len(p)))
    for _ in range(abs(e)):
        out = compose(base, out)
    return out


@dataclass(frozen=True)
class PermutationPack:
    n: int

    @property
    def identity(self) -> Perm:
        return tuple(range(self.n))

    @property
    def cyc(self) -> Perm:
        """1 -> 2 -> ... -> n -> 1."""
        return tuple((i + 1) % self.n for i in range(self.n))

    @property
    def swp(self) -> Perm:
        return (1, 0) + tuple(range(2, self.n))

    @property
    def cyc_prime(self) -> Perm:
        """1 -> 2 -> ... -> n-1 -> 1, fixing n."""
        m = self.n - 1
        return tuple((i + 1) % m for i in range(m)) + (m,)

    @cached_property
    def all(self) -> tuple[Perm, ...]:
        return tuple(permutations(range(self.n)))

    def generated(self, generators: Iterable[Perm]) -> frozenset[Perm]:
        gens = list(generators)
        seen = {self.identity}
        queue = deque([self.identity])
        while queue:
            p = queue.popleft()
            for g in gens:
                q = compose(g, p)
                if q not in seen:
                    seen.add(q)
                    queue.append(q)
        return frozenset(seen)


def decompose_perm(pi: Perm, pi2: Perm) -> tuple[int, int, Perm] | None:
    """(j, k, rho) with pi2 = cyc^-j . rho . cyc^k . pi, 0 <= j < k < n and rho fixing n.

    None exactly when pi2 == pi. The smallest i with sigma(i) > i, where
    sigma = pi2 . pi^-1, fixes k = n-1-i and j = n-1-sigma(i).
    """
    if len(pi) != len(pi2):
        raise ValueError("permutations of different sizes")
    n = len(pi)
    sigma = compose(pi2, inverse(pi))
    moved = [i for i in range(n) if sigma[i] > i]
    if not moved:
        return None
    i = moved[0]
    k, j = n - 1 - i, n - 1 - sigma[i]
    cyc = PermutationPack(n).cyc
    rho = compose(power(cyc, j), compose(sigma, power(cyc, -k)))
    return j, k, rho


def recompose(pi: Perm, j: int, k: int, rho: Perm) -> Perm:
    cyc = PermutationPack(len(pi)).cyc
    return compose(power(cyc, -j), compose(rho, compose(power(cyc, k), pi)))


# --- the sentence ---------------------------------------------------------------------------------


def phi_relations(n: int) -> tuple[tuple[str, int], ...]:
    rels = [
        ("Wit", n + 1),
        ("Mem", n + 1),
        ("Adj", n + 2),
        ("Gen", n + 3),
        ("Inc", n + 3),
        ("Dec", n + 3),
        ("Succ", n + 4),
    ]
    rels += [(f"P{i}", 1) for i in range(1, n + 1)]
    rels += [(f"Q{i}", 1) for i in range(1, n)]
    return tuple(rels)


def _atom(rel: str, *args: str) -> Atom:
    return Atom(rel, tuple(Var(a) for a in args))


def _forall(variables: Sequence[str], guard: Atom, body) -> object:
    return make_quantifier(QuantKind.FORALL, tuple(variables), Implies(guard, body))


def _exists(variables: Sequence[str], guard: Atom, body) -> object:
    return make_quantifier(QuantKind.EXISTS, tuple(variables), And(guard, body))


def emit_phi_n(n: int) -> Sentence:
    if n < 3:
        raise ValueError(f"the family starts at n = 3, got {n}")
    pack = PermutationPack(n)
    xs = tuple(f"x{i}" for i in range(1, n + 1))
    ys = ("y1", "y2")
    rotated = apply_permutation(pack.cyc, xs)
    parts = []

    parts.append(_exists(xs + ("y",), _atom("Wit", *xs, "y"), conjoin(_atom(f"P{i + 1}", x) for i, x in enumerate(xs))))

    for i in range(2, n + 1):
        parts.append(_forall(("x",), _atom(f"P{i}", "x"), _atom(f"Q{i - 1}", "x")))
    for i in range(2, n):
        parts.append(_forall(("x",), _atom(f"Q{i}", "x"), _atom(f"Q{i - 1}", "x")))
    for i in range(1, n):
        parts.append(_forall(("x",), _atom(f"Q{i}", "x"), Not(_atom(f"P{i}", "x"))))

    parts.append(
        _forall(
            xs + ("y",),
            _atom("Wit", *xs, "y"),
            And(_atom("Wit", *apply_permutation(pack.swp, xs), "y"), _atom("Wit", *rotated, "y")),
        )
    )
    parts.append(
        _forall(
            xs + ("y1",),
            _atom("Wit", *xs, "y1"),
            _exists(
                ("y2",),
                _atom("Adj", *xs, *ys),
                And(
                    _atom("Wit", *xs, "y2"),
                    Not(Iff(_atom("Mem", *xs, "y1"), _atom("Mem", *xs, "y2"))),
                ),
            ),
        )
    )

    counter = xs + ys + ("z", "z2")
    steps = [And(_atom(f"P{i}", "z"), _atom(f"P{i + 1}", "z2")) for i in range(1, n - 1)]
    parts.append(_forall(counter, _atom("Succ", *counter), _disjoin(steps)))

    parts.append(_forall(xs + ys, _atom("Adj", *xs, *ys), _exists(("z",), _atom("Inc", *rotated, *ys, "z"), _atom("P1", "z"))))
    parts.append(
        _forall(
            xs + ys + ("z",),
            _atom("Inc", *xs, *ys, "z"),
            Or(
                _atom(f"P{n - 1}", "z"),
                _exists(("z2",), _atom("Succ", *xs, *ys, "z", "z2"), _atom("Inc", *rotated, *ys, "z2")),
            ),
        )
    )
    parts.append(_forall(xs + ys + ("z",), _atom("Inc", *xs, *ys, "z"), _atom("Gen", *xs, *ys, "z")))
    parts.append(
        _forall(
            xs + ys + ("z",),
            _atom("Gen", *xs, *ys, "z"),
            And(
                _atom("Gen", *apply_permutation(pack.cyc_prime, xs), *ys, "z"),
                _atom("Gen", *apply_permutation(pack.swp, xs), *ys, "z"),
            ),
        )
    )
    parts.append(_forall(xs + ys + ("z",), _atom("Gen", *xs, *ys, "z"), _atom("Dec", *xs, *ys, "z")))
    back = apply_permutation(inverse(pack.cyc), xs)
    parts.append(
        _forall(
            xs + ys + ("z",),
            _atom("Dec", *xs, *ys, "z"),
            Or(
                _atom("P1", "z"),
                _exists(("z2",), _atom("Succ", *xs, *ys, "z2", "z"), _atom("Dec", *back, *ys, "z2")),
            ),
        )
    )
    parts.append(
        _forall(
            xs + ys + ("z",),
            _atom("Dec", *xs, *ys, "z"),
            Iff(_atom("Mem", *xs, "y1"), _atom("Mem", *xs, "y2")),
        )
    )
    return Sentence(conjoin(parts), (), phi_relations(n))


def _disjoin(parts: list):
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


# --- the standard model ---------------------------------------------------------------------------


def _estimate(n: int) -> str:
    witnesses = 2 ** math.factorial(n)
    return f"{n + witnesses} elements and about {3 * math.factorial(n) * witnesses} Wit/Mem/Adj facts"


def standard_model(n: int = 3) -> FiniteStructure:
    """Ground elements 0..n-1, then witness n + F for every permutation set F as a bitmask.

    Bit b of F stands for the b-th permutation in lexicographic order. Inc,
    Gen, Dec and Succ are the least relations closing the counter rules
    from every Adj fact.
    """
    if n < 3:
        raise ValueError(f"the family starts at n = 3, got {n}")
    if n > MODEL_LIMIT:
        raise MaterializationRefused(f"the standard model for n={n} has {_estimate(n)}; only n <= {MODEL_LIMIT} is built")
    pack = PermutationPack(n)
    perms = pack.all
    ground = tuple(range(n))
    tuples = {p: apply_permutation(p, ground) for p in perms}
    witnesses = range(n, n + 2 ** len(perms))
    facts = []
    for i in range(1, n + 1):
        facts.append((f"P{i}", (i - 1,)))
        facts.extend((f"Q{j}", (i - 1,)) for j in range(1, i))
    for w in witnesses:
        mask = w - n
        for b, p in enumerate(perms):
            facts.append(("Wit", tuples[p] + (w,)))
            if mask >> b & 1:
                facts.append(("Mem", tuples[p] + (w,)))
            partner = n + (mask ^ (1 << b))
            ys = (w, partner)
            facts.append(("Adj", tuples[p] + ys))
            facts.extend(_counter_facts(pack, p, ys, tuples))
    b = FiniteStructure.from_facts(_signature(n), n + 2 ** len(perms), facts)
    logger.info("standard model for n=%s: %s elements, %s facts", n, b.size, len(b.facts))
    return b


def _signature(n: int) -> Signature:
    return Signature(phi_relations(n), ())


def _counter_facts(pack: PermutationPack, pi: Perm, ys: tuple[int, int], tuples: dict[Perm, tuple[int, ...]]) -> list:
    n = pack.n
    facts = []
    cyc, back = pack.cyc, inverse(pack.cyc)
    inc = [(compose(cyc, pi), 1)]
    while inc[-1][1] < n - 1:
        sigma, i = inc[-1]
        facts.append(("Succ", tuples[sigma] + ys + (i - 1, i)))
        inc.append((compose(cyc, sigma), i + 1))
    gen = set(inc)
    queue = deque(inc)
    while queue:
        sigma, i = queue.popleft()
        for g in (pack.cyc_prime, pack.swp):
            nxt = (compose(g, sigma), i)
            if nxt not in gen:
                gen.add(nxt)
                queue.append(nxt)
    dec = set(gen)
    queue = deque(gen)
    while queue:
        sigma, i = queue.popleft()
        if i == 1:
            continue
        facts.append(("Succ", tuples[sigma] + ys + (i - 2, i - 1)))
        nxt = (compose(back, sigma), i - 1)
        if nxt not in dec:
            dec.add(nxt)
            queue.append(nxt)
    facts.extend(("Inc", tuples[s] + ys + (i - 1,)) for s, i in inc)
    facts.extend(("Gen", tuples[s] + ys + (i - 1,)) for s, i in gen)
    facts.extend(("Dec", tuples[s] + ys + (i - 1,)) for s, i in dec)
    return facts


# --- verification ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class LowerBoundReport:
    n: int
    domain_size: int
    satisfied: bool
    distinct_profiles: int
    toggles_single: bool

    @property
    def bound(self) -> int:
        return 2 ** math.factorial(self.n)

    @property
    def ok(self) -> bool:
        return self.satisfied and self.distinct_profiles == self.bound and self.domain_size >= self.bound

    def records(self) -> list[str]:
        return [
            f"n={self.n}",
            f"domain={self.domain_size}",
            f"bound={self.bound}",
            f"model_check={'true' if self.satisfied else 'false'}",
            f"distinct_profiles={self.distinct_profiles}",
            f"toggles_single={'true' if self.toggles_single else 'false'}",
            f"ok={'true' if self.ok else 'false'}",
        ]


def ground_tuple(b: FiniteStructure, n: int) -> tuple[int, ...] | None:
    """First Wit tuple whose i-th entry is marked P_i."""
    for args in sorted(b.matches("Wit", {}), key=str):
        head = args[:n]
        if all(b.holds(f"P{i + 1}", (a,)) for i, a in enumerate(head)):
            return tuple(head)
    return None


def mem_profiles(b: FiniteStructure, ground: tuple[int, ...]) -> dict[int, frozenset[Perm]]:
    """Permutation set recorded by Mem for every element linked by Wit to all rearrangements."""
    perms = PermutationPack(len(ground)).all
    tuples = {p: apply_permutation(p, ground) for p in perms}
    profiles = {}
    for y in range(b.size):
        if all(b.holds("Wit", tuples[p] + (y,)) for p in perms):
            profiles[y] = frozenset(p for p in perms if b.holds("Mem", tuples[p] + (y,)))
    return profiles


def toggles_single(b: FiniteStructure, ground: tuple[int, ...]) -> bool:
    """Every Adj fact over the ground tuple has Dec on exactly the other permutations."""
    n = len(ground)
    perms = PermutationPack(n).all
    by_tuple = {apply_permutation(p, ground): p for p in perms}
    for args in b.matches("Adj", {}):
        pi = by_tuple.get(tuple(args[:n]))
        if pi is None:
            continue
        ys = tuple(args[n:])
        reached = {
            by_tuple[tuple(d[:n])]
            for d in b.matches("Dec", {n: ys[0], n + 1: ys[1]})
            if tuple(d[:n]) in by_tuple
        }
        if reached != set(perms) - {pi}:
            return False
    return True


def verify_lower_bound(n: int = 3, b: FiniteStructure | None = None) -> LowerBoundReport:
    """Check a model of phi_n: truth, injective Mem-profiles, single-permutation Adj steps."""
    b = standard_model(n) if b is None else b
    satisfied = model_check(b, emit_phi_n(n))
    ground = ground_tuple(b, n)
    if ground is None:
        return LowerBoundReport(n, b.size, satisfied, 0, False)
    profiles = mem_profiles(b, ground)
    report = LowerBoundReport(n, b.size, satisfied, len(set(profiles.values())), toggles_single(b, ground))
    logger.info("lower bound n=%s: %s", n, " ".join(report.records()))
    return report
