"""
Finite structures stored as boundary ledgers, and everything that inspects them.

A structure has unnamed elements 0..n-1 plus the signature's constants, which
denote themselves. Constants may be aliased after a case split merges them;
an alias points at the representative name. Every fact is filed under the
sorted tuple of unnamed elements it mentions, so the ledger entry of a tuple
is exactly its boundary assignment and the 0-level entry holds constant-only
facts.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Sequence

from gforge.logic_syntax import (
    And,
    Atom,
    Bottom,
    Const,
    Eq,
    Formula,
    FragmentError,
    FragmentTag,
    Iff,
    Implies,
    Not,
    Or,
    QuantKind,
    Quantifier,
    Sentence,
    Signature,
    SignatureError,
    Top,
    Var,
    atom_terms,
    classify,
    free_variables,
    term_vars,
    walk,
)
from gforge.type_algebra import AtomicType, atom_space, lift_bits, prefix_reduct

if TYPE_CHECKING:
    from gforge.witness_engine import TypeFamily

logger = logging.getLogger(__name__)

STRUCTURE_HEADER = "gforge-structure 1"

Element = int | str
Fact = tuple[str, tuple[Element, ...]]


class StructureError(ValueError):
    """Bad tuple, out-of-range element, or a symbol the structure does not interpret."""


def _unnamed(args: Iterable[Element]) -> tuple[int, ...]:
    return tuple(sorted({a for a in args if isinstance(a, int)}))


def _sort_key(args: Sequence[Element]) -> tuple:
    return tuple((0, a) if isinstance(a, int) else (1, a) for a in args)


class FiniteStructure:
    """Immutable σ-structure over unnamed elements ``range(size)`` and the constants."""

    def __init__(
        self,
        signature: Signature,
        size: int,
        ledger: Mapping[tuple[int, ...], frozenset[Fact]],
        aliases: Mapping[str, str] | None = None,
    ):
        self.signature = signature
        self.size = size
        self.ledger = {key: facts for key, facts in ledger.items() if facts}
        self.aliases = dict(aliases or {})
        self._types: dict[tuple[int, ...], int] = {}
        self._indexes: dict[tuple[str, tuple[int, ...]], dict] = {}
        self._facts: frozenset[Fact] | None = None
        self._adjacency: dict[int, frozenset[int]] | None = None

    # --- construction ---------------------------------------------------------------

    @classmethod
    def from_facts(
        cls,
        signature: Signature,
        size: int,
        facts: Iterable[Fact],
        aliases: Mapping[str, str] | None = None,
    ) -> FiniteStructure:
        aliases = dict(aliases or {})
        ledger: dict[tuple[int, ...], set[Fact]] = defaultdict(set)
        for rel, args in facts:
            if not signature.has_relation(rel):
                raise StructureError(f"relation {rel} is not in the signature")
            if len(args) != signature.arity(rel):
                raise StructureError(f"{rel} expects {signature.arity(rel)} arguments, got {args}")
            resolved = []
            for a in args:
                if isinstance(a, int):
                    if not 0 <= a < size:
                        raise StructureError(f"element {a} outside 0..{size - 1}")
                    resolved.append(a)
                elif a in signature.constants:
                    resolved.append(aliases.get(a, a))
                else:
                    raise StructureError(f"unknown constant {a}")
            ledger[_unnamed(resolved)].add((rel, tuple(resolved)))
        return cls(signature, size, {k: frozenset(v) for k, v in ledger.items()}, aliases)

    @classmethod
    def from_boundaries(
        cls,
        signature: Signature,
        size: int,
        boundaries: Mapping[tuple[int, ...], Iterable[Fact]],
    ) -> FiniteStructure:
        facts = []
        for key, entries in boundaries.items():
            for rel, args in entries:
                if _unnamed(args) != tuple(sorted(key)):
                    raise StructureError(f"fact {rel}{args} does not belong under {key}")
                facts.append((rel, tuple(args)))
        return cls.from_facts(signature, size, facts)

    # --- views ----------------------------------------------------------------------

    @property
    def facts(self) -> frozenset[Fact]:
        if self._facts is None:
            self._facts = frozenset(f for entries in self.ledger.values() for f in entries)
        return self._facts

    @property
    def representatives(self) -> tuple[str, ...]:
        return tuple(c for c in self.signature.constants if c not in self.aliases)

    @property
    def domain(self) -> list[Element]:
        return list(range(self.size)) + list(self.representatives)

    def constant_class(self, rep: str) -> tuple[str, ...]:
        return tuple(c for c in self.signature.constants if self.aliases.get(c, c) == rep)

    def resolve(self, name: str) -> str:
        if name not in self.signature.constants:
            raise StructureError(f"constant {name} is not interpreted")
        return self.aliases.get(name, name)

    def holds(self, rel: str, args: tuple[Element, ...]) -> bool:
        return (rel, args) in self.ledger.get(_unnamed(args), ())

    def relation_view(self) -> dict[str, list[tuple[Element, ...]]]:
        view: dict[str, list[tuple[Element, ...]]] = {name: [] for name in self.signature.relation_names}
        for rel, args in self.facts:
            view[rel].append(args)
        return {rel: sorted(tuples, key=_sort_key) for rel, tuples in view.items()}

    @property
    def adjacency(self) -> dict[int, frozenset[int]]:
        """Unnamed elements that share some fact with each element."""
        if self._adjacency is None:
            adj: dict[int, set[int]] = defaultdict(set)
            for key in self.ledger:
                for a in key:
                    adj[a].update(key)
            self._adjacency = {a: frozenset(others - {a}) for a, others in adj.items()}
        return self._adjacency

    def matches(self, rel: str, bound: Mapping[int, Element]) -> list[tuple[Element, ...]]:
        """Facts of ``rel`` whose arguments agree with ``bound`` (position -> element)."""
        positions = tuple(sorted(bound))
        index = self._indexes.get((rel, positions))
        if index is None:
            index = defaultdict(list)
            for r, args in self.facts:
                if r == rel:
                    index[tuple(args[p] for p in positions)].append(args)
            self._indexes[(rel, positions)] = index
        return index.get(tuple(bound[p] for p in positions), [])

    def type_bits(self, elements: tuple[int, ...]) -> int:
        cached = self._types.get(elements)
        if cached is not None:
            return cached
        k = len(elements)
        space = atom_space(self.signature, k)
        position = {e: i for i, e in enumerate(elements)}
        bits = 0
        for m in range(k + 1):
            for subset in combinations(sorted(elements), m):
                for rel, args in self.ledger.get(subset, ()):
                    choices = []
                    for a in args:
                        if isinstance(a, int):
                            choices.append((position[a],))
                        else:
                            choices.append(tuple(space.term(c) for c in self.constant_class(a)))
                    for terms in product(*choices):
                        bits |= 1 << space.index(rel, terms)
        self._types[elements] = bits
        return bits

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteStructure):
            return NotImplemented
        return (
            self.signature == other.signature
            and self.size == other.size
            and self.ledger == other.ledger
            and self.aliases == other.aliases
        )

    def __repr__(self) -> str:
        return f"FiniteStructure(size={self.size}, facts={len(self.facts)}, signature={self.signature})"


# --- types and witness checks ------------------------------------------------------------


def _check_tuple(b: FiniteStructure, elements: Sequence[Element]) -> tuple[int, ...]:
    if any(not isinstance(e, int) for e in elements):
        raise StructureError(f"type_of takes unnamed elements only, got {tuple(elements)}")
    if len(set(elements)) != len(elements):
        raise StructureError(f"repeated element in {tuple(elements)}")
    if any(not 0 <= e < b.size for e in elements):
        raise StructureError(f"element outside 0..{b.size - 1} in {tuple(elements)}")
    return tuple(elements)


def type_of(b: FiniteStructure, elements: Sequence[Element]) -> AtomicType:
    elements = _check_tuple(b, elements)
    return AtomicType(b.type_bits(elements), len(elements), b.signature)


@dataclass(frozen=True)
class Violation:
    check: str
    elements: tuple[int, ...]
    realized: AtomicType
    missing: AtomicType | None = None

    def __str__(self) -> str:
        text = f"{self.check} elements={list(self.elements)} type={self.realized}"
        if self.missing is not None:
            text += f" missing={self.missing}"
        return text


def _same_signature(b: FiniteStructure, w: TypeFamily) -> None:
    if b.signature != w.signature:
        raise StructureError(f"structure over {b.signature} checked against witness over {w.signature}")


def check_guarded(b: FiniteStructure, w: TypeFamily) -> list[Violation]:
    """Tuples whose realized type is guarded but absent from the witness."""
    _same_signature(b, w)
    members = [set(level) for level in w.levels]
    violations = []
    candidates: list[tuple[int, ...]] = [()]
    candidates.extend((a,) for a in range(b.size) if w.width >= 1)
    candidates.extend(key for key in sorted(b.ledger) if 2 <= len(key) <= w.width)
    for key in candidates:
        for elements in permutations(key):
            bits = b.type_bits(elements)
            if bits not in members[len(elements)]:
                violations.append(Violation("guarded", elements, AtomicType(bits, len(elements), b.signature)))
    return violations


def _one_type_classes(b: FiniteStructure) -> dict[int, list[int]]:
    classes: dict[int, list[int]] = defaultdict(list)
    for a in range(b.size):
        classes[b.type_bits((a,))].append(a)
    return classes


def check_extension(b: FiniteStructure, w: TypeFamily, first_only: bool = False) -> list[Violation]:
    """Realized witness k-types lacking an extension to some witness (k+1)-type above them.

    Only increasing tuples are inspected; a closed witness makes every other
    ordering a permutation of one of them. Elements sharing no fact with the
    tuple are handled per 1-type class.
    """
    _same_signature(b, w)
    sig = b.signature
    classes = _one_type_classes(b)
    violations: list[Violation] = []
    for k in range(w.width):
        level = set(w.levels[k])
        above: dict[int, list[int]] = defaultdict(list)
        for bits in w.levels[k + 1]:
            above[prefix_reduct(AtomicType(bits, k + 1, sig), k).bits].append(bits)
        for elements in combinations(range(b.size), k):
            tau1 = b.type_bits(elements)
            if tau1 not in level or not above.get(tau1):
                continue
            realized: set[int] = set()
            touching: set[int] = set()
            for a in elements:
                touching |= b.adjacency.get(a, frozenset())
            touching -= set(elements)
            for c in touching:
                realized.add(b.type_bits(elements + (c,)))
            excluded = touching | set(elements)
            base = lift_bits(sig, k, k + 1, tau1, range(k))
            for one_type, members in classes.items():
                if any(m not in excluded for m in members):
                    realized.add(base | lift_bits(sig, 1, k + 1, one_type, (k,)))
            for bits in above[tau1]:
                if bits not in realized:
                    violations.append(
                        Violation(
                            "extension",
                            elements,
                            AtomicType(tau1, k, sig),
                            AtomicType(bits, k + 1, sig),
                        )
                    )
                    if first_only:
                        return violations
    return violations


# --- model checking -----------------------------------------------------------------------


def _interpretable(b: FiniteStructure, f: Formula) -> None:
    for node in walk(f):
        if isinstance(node, Atom):
            if not b.signature.has_relation(node.rel):
                raise StructureError(f"relation {node.rel} is not interpreted")
            if b.signature.arity(node.rel) != len(node.args):
                raise StructureError(f"{node.rel} used with {len(node.args)} arguments")
        if isinstance(node, (Atom, Eq)):
            for t in atom_terms(node):
                if isinstance(t, Const):
                    b.resolve(t.name)


def _value(b: FiniteStructure, t, env: Mapping[str, Element]) -> Element:
    if isinstance(t, Var):
        return env[t.name]
    return b.resolve(t.name)


def _guard_envs(b: FiniteStructure, guard: Atom | Eq, variables: tuple[str, ...], env: dict) -> Iterator[dict]:
    quantified = set(variables)
    if isinstance(guard, Eq):
        sides = [guard.left, guard.right]
        free = [t for t in sides if isinstance(t, Var) and t.name in quantified]
        if len(free) == 2:
            for d in b.domain:
                yield {**env, free[0].name: d, free[1].name: d}
        else:
            other = next(t for t in sides if t not in free)
            yield {**env, free[0].name: _value(b, other, env)}
        return
    bound = {}
    for i, t in enumerate(guard.args):
        if isinstance(t, Const):
            bound[i] = b.resolve(t.name)
        elif t.name not in quantified:
            bound[i] = env[t.name]
    for args in b.matches(guard.rel, bound):
        new = dict(env)
        assigned: set[str] = set()
        for t, a in zip(guard.args, args):
            if isinstance(t, Var) and t.name in quantified:
                if t.name in assigned and new[t.name] != a:
                    break
                new[t.name] = a
                assigned.add(t.name)
        else:
            yield new


def _satisfies(b: FiniteStructure, f: Formula, env: dict) -> bool:
    if isinstance(f, Atom):
        return b.holds(f.rel, tuple(_value(b, t, env) for t in f.args))
    if isinstance(f, Eq):
        return _value(b, f.left, env) == _value(b, f.right, env)
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Not):
        return not _satisfies(b, f.body, env)
    if isinstance(f, And):
        return _satisfies(b, f.left, env) and _satisfies(b, f.right, env)
    if isinstance(f, Or):
        return _satisfies(b, f.left, env) or _satisfies(b, f.right, env)
    if isinstance(f, Implies):
        return not _satisfies(b, f.left, env) or _satisfies(b, f.right, env)
    if isinstance(f, Iff):
        return _satisfies(b, f.left, env) == _satisfies(b, f.right, env)
    if f.guard is None:
        envs = (
            {**env, **dict(zip(f.variables, values))}
            for values in product(b.domain, repeat=len(f.variables))
        )
    else:
        envs = _guard_envs(b, f.guard, f.variables, env)
    if f.kind is QuantKind.EXISTS:
        return any(_satisfies(b, f.body, e) for e in envs)
    return all(_satisfies(b, f.body, e) for e in envs)


def model_check(b: FiniteStructure, sentence: Sentence | Formula) -> bool:
    """Tarskian truth; guarded quantifiers range over the matching facts only."""
    f = sentence.formula if isinstance(sentence, Sentence) else sentence
    _interpretable(b, f)
    return _satisfies(b, f, {})


def naive_model_check(b: FiniteStructure, sentence: Sentence | Formula) -> bool:
    """Expands every quantifier over the whole domain; used as an oracle."""
    f = sentence.formula if isinstance(sentence, Sentence) else sentence
    _interpretable(b, f)

    def value(t, env):
        return env[t.name] if isinstance(t, Var) else b.resolve(t.name)

    def ev(g: Formula, env: dict) -> bool:
        if isinstance(g, Atom):
            return (g.rel, tuple(value(t, env) for t in g.args)) in b.facts
        if isinstance(g, Eq):
            return value(g.left, env) == value(g.right, env)
        if isinstance(g, (Top, Bottom)):
            return isinstance(g, Top)
        if isinstance(g, Not):
            return not ev(g.body, env)
        if isinstance(g, (And, Or, Implies, Iff)):
            left, right = ev(g.left, env), ev(g.right, env)
            if isinstance(g, And):
                return left and right
            if isinstance(g, Or):
                return left or right
            if isinstance(g, Implies):
                return not left or right
            return left == right
        results = []
        for values in product(b.domain, repeat=len(g.variables)):
            inner = {**env, **dict(zip(g.variables, values))}
            guard = True if g.guard is None else ev(g.guard, inner)
            if g.kind is QuantKind.EXISTS:
                results.append(guard and ev(g.body, inner))
            else:
                results.append(not guard or ev(g.body, inner))
        return any(results) if g.kind is QuantKind.EXISTS else all(results)

    return ev(f, {})


# --- duplication, kings, reshaping -------------------------------------------------------------


def duplicate(b: FiniteStructure) -> FiniteStructure:
    """Two-copy structure: copy 0 keeps the original names, copy 1 is fresh and unnamed.

    (0, a) -> a, (1, a) -> n + a, (0, c) -> c, (1, c_j) -> 2n + j, and each
    k-ary fact is copied for every choice of copy index per argument.
    """
    n = b.size
    reps = b.representatives
    slot = {c: j for j, c in enumerate(reps)}

    def image(a: Element, copy: int) -> Element:
        if isinstance(a, int):
            return a + n * copy
        return a if copy == 0 else 2 * n + slot[a]

    facts = []
    for rel, args in b.facts:
        for choice in product((0, 1), repeat=len(args)):
            facts.append((rel, tuple(image(a, i) for a, i in zip(args, choice))))
    return FiniteStructure.from_facts(b.signature, 2 * n + len(reps), facts, b.aliases)


@dataclass(frozen=True)
class KingReport:
    elements: tuple[int, ...] = ()

    @property
    def king_free(self) -> bool:
        return not self.elements


def kings(b: FiniteStructure) -> KingReport:
    classes = _one_type_classes(b)
    return KingReport(tuple(sorted(members[0] for members in classes.values() if len(members) == 1)))


def restrict(b: FiniteStructure, signature: Signature) -> FiniteStructure:
    """Reduct to the relations of ``signature``; constants and aliases are kept."""
    keep = set(signature.relation_names)
    facts = [f for f in b.facts if f[0] in keep]
    reduced = Signature(tuple(r for r in b.signature.relations if r[0] in keep), b.signature.constants)
    return FiniteStructure.from_facts(reduced, b.size, facts, b.aliases)


def rename_constants(b: FiniteStructure, aliases: Mapping[str, str]) -> FiniteStructure:
    """Identify constants: each key now denotes the element of its value."""
    parent = {c: b.aliases.get(c, c) for c in b.signature.constants}

    def root(c: str) -> str:
        while parent[c] != c:
            c = parent[c]
        return c

    for name, target in aliases.items():
        if name not in parent or target not in parent:
            raise StructureError(f"cannot alias {name} to {target}: unknown constant")
        a, t = root(name), root(target)
        if a != t:
            parent[a] = t
    merged = {c: root(c) for c in parent if root(c) != c}
    return FiniteStructure.from_facts(b.signature, b.size, b.facts, merged)


def merge_elements(b: FiniteStructure, keep: int, drop: int) -> FiniteStructure:
    """Identify unnamed element ``drop`` with ``keep`` and renumber the rest."""
    if keep == drop:
        return b

    def image(a: Element) -> Element:
        if not isinstance(a, int):
            return a
        if a == drop:
            a = keep
        return a - 1 if a > drop else a

    facts = [(rel, tuple(image(a) for a in args)) for rel, args in b.facts]
    return FiniteStructure.from_facts(b.signature, b.size - 1, facts, b.aliases)


# --- triguarded to guarded with a universal role -----------------------------------------------


def _has_variable_equality(f: Formula) -> bool:
    for node in walk(f):
        if isinstance(node, Eq) and (isinstance(node.left, Var) or isinstance(node.right, Var)):
            if node.left != node.right:
                return True
    return False


def tgf_to_gfu(sentence: Sentence, allow_equality: bool = False) -> Sentence:
    """Guard every unguarded quantifier with a binary universal-role atom.

    The returned sentence names the role in ``universal_role``; witness
    levels are then required to make every role atom true.
    """
    if classify(sentence.formula) is FragmentTag.FO:
        raise FragmentError("sentence is not in the triguarded fragment")
    if not allow_equality and _has_variable_equality(sentence.formula):
        raise FragmentError(
            "equality between variables is not allowed in the triguarded fragment; "
            "with it finite satisfiability becomes undecidable"
        )
    role = sentence.universal_role or sentence.signature.fresh_name("U")

    def guard_for(node: Quantifier) -> Atom:
        scope = list(node.variables) + sorted(free_variables(node.body) - set(node.variables))
        names = term_vars(Var(v) for v in scope)
        if len(names) > 2:
            raise FragmentError(f"unguarded quantifier over {len(names)} free variables")
        if len(names) == 1:
            names = names * 2
        return Atom(role, tuple(Var(v) for v in names))

    def rewrite(f: Formula) -> Formula:
        if isinstance(f, (Atom, Eq, Top, Bottom)):
            return f
        if isinstance(f, Not):
            return Not(rewrite(f.body))
        if isinstance(f, (And, Or, Implies, Iff)):
            return type(f)(rewrite(f.left), rewrite(f.right))
        body = rewrite(f.body)
        if f.guard is not None:
            return Quantifier(f.kind, f.variables, f.guard, body)
        return Quantifier(f.kind, f.variables, guard_for(f), body)

    formula = rewrite(sentence.formula)
    relations = tuple(sentence.signature.relations)
    if role not in dict(relations):
        relations += ((role, 2),)
    logger.debug("tgf_to_gfu: universal role %s", role)
    return Sentence(formula, sentence.signature.constants, relations, universal_role=role)


# --- file format --------------------------------------------------------------------------------


def _args_text(args: Sequence[Element]) -> str:
    return "(" + ",".join(str(a) for a in args) + ")"


def format_structure(b: FiniteStructure) -> str:
    lines = [STRUCTURE_HEADER, f"size {b.size}", f"signature {b.signature}"]
    for name in sorted(b.aliases):
        lines.append(f"alias {name} {b.aliases[name]}")
    for rel, tuples in b.relation_view().items():
        lines.append(f"{rel}: " + " ".join(_args_text(t) for t in tuples) if tuples else f"{rel}:")
    return "\n".join(lines) + "\n"


def parse_structure(text: str) -> FiniteStructure:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != STRUCTURE_HEADER:
        raise StructureError(f"missing header {STRUCTURE_HEADER!r}")
    size: int | None = None
    signature: Signature | None = None
    aliases: dict[str, str] = {}
    facts: list[Fact] = []
    for line in lines[1:]:
        head, _, rest = line.partition(" ")
        if head == "size":
            size = int(rest)
        elif head == "signature":
            try:
                signature = Signature.parse(rest)
            except SignatureError as e:
                raise StructureError(f"bad signature line {line!r}") from e
        elif head == "alias":
            name, target = rest.split()
            aliases[name] = target
        elif ":" in line:
            rel, _, body = line.partition(":")
            for chunk in body.replace(" ", "").split(")"):
                if not chunk:
                    continue
                items = chunk.lstrip("(").split(",")
                facts.append(
                    (rel.strip(), tuple(int(x) if x.lstrip("-").isdigit() else x for x in items if x != ""))
                )
        else:
            raise StructureError(f"unrecognised line {line!r}")
    if size is None or signature is None:
        raise StructureError("structure file needs size and signature lines")
    return FiniteStructure.from_facts(signature, size, facts, aliases)


def write_structure(b: FiniteStructure, path: str | Path) -> None:
    Path(path).write_text(format_structure(b), encoding="utf-8")


def read_structure(path: str | Path) -> FiniteStructure:
    return parse_structure(Path(path).read_text(encoding="utf-8"))
