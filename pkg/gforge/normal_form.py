"""
Normal-form rewriting for guarded sentences.

A normal-form sentence is a conjunction of three conjunct shapes:

    existential   exists x (a(x) & psi(x))
    universal     forall x (a(x) -> psi(x))
    skolem        forall x (a(x) -> exists y (b(x,y) & psi(x,y)))

with quantifier-free bodies. Rewriting first fixes a case split: a partition
of the constants (constants in one block denote one element) and a truth
value for every closed quantifier block that is not itself a top-level
conjunct. Open maximal quantifier blocks are then replaced, deepest first,
by fresh relations R_chi_<k> over the block's free variables.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import count
from typing import Iterator, Union

from gforge.logic_syntax import (
    BINARY,
    FALSE,
    TRUE,
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
    Top,
    Var,
    atom_terms,
    classify,
    conjoin,
    conjuncts,
    free_variables,
    length,
    map_constants,
    negate,
    print_formula,
    term_vars,
)
from gforge.structure_lab import FiniteStructure

logger = logging.getLogger(__name__)

FRESH_STEM = "R_chi"


@dataclass(frozen=True)
class CaseSplit:
    """A constant partition and truth values for the split-over closed subsentences."""

    partition: tuple[tuple[str, ...], ...]
    truth: tuple[bool, ...]
    subsentences: tuple[Formula, ...]
    index: int = 0

    @property
    def aliases(self) -> dict[str, str]:
        return {c: block[0] for block in self.partition for c in block[1:]}

    @property
    def representatives(self) -> tuple[str, ...]:
        return tuple(block[0] for block in self.partition)

    def describe(self) -> str:
        blocks = " ".join("{" + ",".join(b) + "}" for b in self.partition) or "{}"
        bits = "".join("1" if t else "0" for t in self.truth) or "-"
        return f"split={self.index} partition={blocks} truth={bits}"


@dataclass(frozen=True)
class Existential:
    variables: tuple[str, ...]
    guard: Atom | Eq
    body: Formula

    kind = "existential"

    def to_formula(self) -> Formula:
        return Quantifier(QuantKind.EXISTS, self.variables, self.guard, self.body)


@dataclass(frozen=True)
class Universal:
    variables: tuple[str, ...]
    guard: Atom | Eq
    body: Formula

    kind = "universal"

    def to_formula(self) -> Formula:
        return Quantifier(QuantKind.FORALL, self.variables, self.guard, self.body)


@dataclass(frozen=True)
class Skolem:
    variables: tuple[str, ...]
    guard: Atom | Eq
    witnesses: tuple[str, ...]
    witness_guard: Atom | Eq
    body: Formula

    kind = "skolem"

    def to_formula(self) -> Formula:
        inner = Quantifier(QuantKind.EXISTS, self.witnesses, self.witness_guard, self.body)
        return Quantifier(QuantKind.FORALL, self.variables, self.guard, inner)


Conjunct = Union[Existential, Universal, Skolem]


@dataclass(frozen=True)
class NormalFormSentence:
    signature: Signature
    conjuncts: tuple[Conjunct, ...]
    universal_role: str | None = None
    fresh: tuple[str, ...] = ()

    @property
    def existentials(self) -> list[Existential]:
        return [c for c in self.conjuncts if isinstance(c, Existential)]

    @property
    def universals(self) -> list[Universal]:
        return [c for c in self.conjuncts if isinstance(c, Universal)]

    @property
    def skolems(self) -> list[Skolem]:
        return [c for c in self.conjuncts if isinstance(c, Skolem)]

    @property
    def width(self) -> int:
        return self.signature.width

    def to_sentence(self) -> Sentence:
        return Sentence(
            conjoin(c.to_formula() for c in self.conjuncts),
            self.signature.constants,
            self.signature.relations,
            self.universal_role,
        )

    def length(self) -> int:
        return length(self.to_sentence().formula)


# --- case splits ----------------------------------------------------------------------------


def _set_partitions(items: list[str]) -> Iterator[list[list[str]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in _set_partitions(rest):
        yield [[first]] + smaller
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1 :]


def constant_partitions(constants: tuple[str, ...]) -> list[tuple[tuple[str, ...], ...]]:
    """Finest partitions first, then lexicographic; blocks sorted, representative first."""
    found = set()
    for blocks in _set_partitions(sorted(constants)):
        found.add(tuple(sorted(tuple(sorted(b)) for b in blocks)))
    return sorted(found, key=lambda p: (-len(p), p))


def _asserted(f: Formula) -> bool:
    return isinstance(f, Quantifier) and f.guard is not None and not free_variables(f)


def _post_order(f: Formula) -> Iterator[Formula]:
    if isinstance(f, Not):
        yield from _post_order(f.body)
    elif isinstance(f, BINARY):
        yield from _post_order(f.left)
        yield from _post_order(f.right)
    elif isinstance(f, Quantifier):
        yield from _post_order(f.body)
    yield f


def closed_subsentences(sentence: Sentence) -> tuple[Formula, ...]:
    """Closed quantifier blocks that the case split assigns a truth value, in post-order."""
    found: list[Formula] = []
    for top in conjuncts(sentence.formula):
        candidates = _post_order(top)
        for node in candidates:
            if node is top and _asserted(top):
                continue
            if isinstance(node, Quantifier) and not free_variables(node) and node not in found:
                found.append(node)
    return tuple(found)


def case_splits(sentence: Sentence) -> Iterator[CaseSplit]:
    subsentences = closed_subsentences(sentence)
    m = len(subsentences)
    index = 0
    for partition in constant_partitions(sentence.signature.constants):
        for code in range(2**m):
            truth = tuple(bool(code >> (m - 1 - j) & 1) for j in range(m))
            yield CaseSplit(partition, truth, subsentences, index)
            index += 1


def count_case_splits(sentence: Sentence) -> int:
    return len(constant_partitions(sentence.signature.constants)) * 2 ** len(closed_subsentences(sentence))


# --- rewriting ------------------------------------------------------------------------------


def apply_partition(f: Formula, split: CaseSplit) -> Formula:
    """Rename constants to their block representative and decide ground equalities."""
    mapped = map_constants(f, split.aliases)
    return _decide_constant_equalities(mapped)


def _decide_constant_equalities(f: Formula) -> Formula:
    if isinstance(f, Eq):
        if isinstance(f.left, Const) and isinstance(f.right, Const):
            return TRUE if f.left == f.right else FALSE
        return f
    if isinstance(f, (Atom, Top, Bottom)):
        return f
    if isinstance(f, Not):
        return Not(_decide_constant_equalities(f.body))
    if isinstance(f, BINARY):
        return type(f)(_decide_constant_equalities(f.left), _decide_constant_equalities(f.right))
    return Quantifier(f.kind, f.variables, f.guard, _decide_constant_equalities(f.body))


def simplify(f: Formula) -> Formula:
    """Fold true and false through the connectives of a quantifier-free formula."""
    if isinstance(f, Not):
        body = simplify(f.body)
        return negate(body) if isinstance(body, (Top, Bottom, Not)) else Not(body)
    if not isinstance(f, BINARY):
        return f
    left, right = simplify(f.left), simplify(f.right)
    if isinstance(f, And):
        if isinstance(left, Bottom) or isinstance(right, Bottom):
            return FALSE
        if isinstance(left, Top):
            return right
        if isinstance(right, Top):
            return left
        return And(left, right)
    if isinstance(f, Or):
        if isinstance(left, Top) or isinstance(right, Top):
            return TRUE
        if isinstance(left, Bottom):
            return right
        if isinstance(right, Bottom):
            return left
        return Or(left, right)
    if isinstance(f, Implies):
        if isinstance(left, Bottom) or isinstance(right, Top):
            return TRUE
        if isinstance(left, Top):
            return right
        if isinstance(right, Bottom):
            return negate(left)
        return Implies(left, right)
    if isinstance(left, Top):
        return right
    if isinstance(right, Top):
        return left
    if isinstance(left, Bottom):
        return negate(right)
    if isinstance(right, Bottom):
        return negate(left)
    return Iff(left, right)


class _Rewriter:
    def __init__(self, signature: Signature, truth: dict[Formula, bool]):
        self.signature = signature
        self.truth = truth
        self.conjuncts: list[Conjunct] = []
        self.fresh: list[tuple[str, int]] = []
        self._counter = count(1)

    def _fresh_relation(self, arity: int) -> str:
        taken = self.signature.extend(self.fresh)
        name = taken.fresh_name(f"{FRESH_STEM}_{next(self._counter)}")
        self.fresh.append((name, arity))
        return name

    def rewrite(self, f: Formula, polarity: int) -> Formula:
        """Quantifier-free replacement of ``f``; polarity is +1, -1 or 0 (both)."""
        if isinstance(f, (Atom, Eq, Top, Bottom)):
            return f
        if isinstance(f, Not):
            return Not(self.rewrite(f.body, -polarity))
        if isinstance(f, (And, Or)):
            return type(f)(self.rewrite(f.left, polarity), self.rewrite(f.right, polarity))
        if isinstance(f, Implies):
            return Implies(self.rewrite(f.left, -polarity), self.rewrite(f.right, polarity))
        if isinstance(f, Iff):
            return Iff(self.rewrite(f.left, 0), self.rewrite(f.right, 0))
        if f.guard is None:
            raise FragmentError(f"unguarded quantifier over {f.variables} in {print_formula(f)}")
        if not free_variables(f):
            return self._closed_block(f)
        return self._open_block(f, polarity)

    def _closed_block(self, f: Quantifier) -> Formula:
        value = self.truth.get(f)
        if value is None:
            raise FragmentError(f"closed subsentence without a truth value: {print_formula(f)}")
        exists = f.kind is QuantKind.EXISTS
        body = simplify(self.rewrite(f.body, 1 if value else -1))
        if exists and value:
            self.conjuncts.append(Existential(f.variables, f.guard, body))
        elif exists:
            self.conjuncts.append(Universal(f.variables, f.guard, simplify(negate(body))))
        elif value:
            self.conjuncts.append(Universal(f.variables, f.guard, body))
        else:
            self.conjuncts.append(Existential(f.variables, f.guard, simplify(negate(body))))
        return TRUE if value else FALSE

    def _open_block(self, f: Quantifier, polarity: int) -> Formula:
        guard = f.guard
        outer = tuple(v for v in term_vars(atom_terms(guard)) if v not in f.variables)
        guard_vars = tuple(term_vars(atom_terms(guard)))
        # inner blocks are numbered first
        body = simplify(self.rewrite(f.body, polarity))
        rel = self._fresh_relation(len(outer))
        r_atom = Atom(rel, tuple(Var(v) for v in outer))
        if f.kind is QuantKind.EXISTS:
            if polarity >= 0:
                self.conjuncts.append(Skolem(outer, r_atom, f.variables, guard, body))
            if polarity <= 0:
                self.conjuncts.append(Universal(guard_vars, guard, simplify(Implies(body, r_atom))))
            return r_atom
        if polarity > 0:
            self.conjuncts.append(Universal(guard_vars, guard, simplify(Implies(r_atom, body))))
            return r_atom
        # the fresh symbol stands for the negated block
        negated = simplify(negate(body))
        self.conjuncts.append(Skolem(outer, r_atom, f.variables, guard, negated))
        if polarity == 0:
            self.conjuncts.append(Universal(guard_vars, guard, simplify(Implies(negated, r_atom))))
        return Not(r_atom)

    def top_level(self, f: Formula) -> Formula | None:
        """Assert a closed guarded conjunct directly; return the residual otherwise."""
        if not _asserted(f):
            return self.rewrite(f, 1)
        inner = f.body
        if f.kind is QuantKind.FORALL and isinstance(inner, Quantifier) and inner.kind is QuantKind.EXISTS:
            if inner.guard is not None:
                body = simplify(self.rewrite(inner.body, 1))
                self.conjuncts.append(Skolem(f.variables, f.guard, inner.variables, inner.guard, body))
                return None
        body = simplify(self.rewrite(f.body, 1))
        if f.kind is QuantKind.EXISTS:
            self.conjuncts.append(Existential(f.variables, f.guard, body))
        elif not isinstance(body, Top):
            self.conjuncts.append(Universal(f.variables, f.guard, body))
        return None


def _residual_conjunct(residual: Formula) -> Conjunct | None:
    x = Var("x")
    if isinstance(residual, Top):
        return None
    if isinstance(residual, Bottom):
        return Existential(("x",), Eq(x, x), FALSE)
    return Universal(("x",), Eq(x, x), residual)


def normalize(sentence: Sentence, split: CaseSplit) -> tuple[NormalFormSentence, Signature]:
    """Rewrite a guarded sentence under ``split``; returns the normal form and its signature."""
    if classify(sentence.formula) is not FragmentTag.GF:
        raise FragmentError("normal form needs a guarded sentence; translate triguarded input first")
    sigma = sentence.signature
    formula = apply_partition(sentence.formula, split)
    truth: dict[Formula, bool] = {}
    inconsistent = False
    for sub, value in zip(split.subsentences, split.truth):
        key = apply_partition(sub, split)
        if truth.setdefault(key, value) != value:
            inconsistent = True
    reps = set(split.representatives)
    base = Signature(sigma.relations, tuple(c for c in sigma.constants if c in reps))
    rewriter = _Rewriter(base, truth)
    residual: list[Formula] = []
    for part in conjuncts(formula):
        rest = rewriter.top_level(part)
        if rest is not None:
            residual.append(rest)
    tail = _residual_conjunct(FALSE if inconsistent else simplify(conjoin(residual)))
    parts = list(rewriter.conjuncts)
    if tail is not None:
        parts.append(tail)
    sigma_nf = base.extend(rewriter.fresh)
    nf = NormalFormSentence(sigma_nf, tuple(parts), sentence.universal_role, tuple(n for n, _ in rewriter.fresh))
    logger.debug(
        "normalize %s: %d conjuncts, %d fresh symbols",
        split.describe(),
        len(parts),
        len(rewriter.fresh),
    )
    return nf, sigma_nf


def identity_split(sentence: Sentence) -> CaseSplit:
    """The first split: finest partition, every split-over subsentence false."""
    return next(case_splits(sentence))


def expansion_factor(sentence: Sentence, nf: NormalFormSentence) -> float:
    return nf.length() / max(1, length(sentence.formula))


# --- models ---------------------------------------------------------------------------------


def reinterpret_model(b: FiniteStructure, split: CaseSplit, sigma: Signature) -> FiniteStructure:
    """The sigma-reduct of a normal-form model, with merged constants aliased to their block."""
    keep = set(sigma.relation_names)
    facts = [f for f in b.facts if f[0] in keep]
    aliases = {c: rep for c, rep in split.aliases.items() if c in sigma.constants}
    return FiniteStructure.from_facts(sigma, b.size, facts, aliases)


# --- text form ------------------------------------------------------------------------------


def serialize_normal_form(nf: NormalFormSentence) -> str:
    """One conjunct per line, each preceded by a "# kind:" comment; parses as a sentence."""
    lines = []
    if nf.signature.constants:
        lines.append(f"const {', '.join(nf.signature.constants)}.")
    lines.append("rel " + ", ".join(f"{name}/{arity}" for name, arity in nf.signature.relations) + ".")
    if not nf.conjuncts:
        lines.append("true")
    for i, conj in enumerate(nf.conjuncts):
        lines.append(f"# kind: {conj.kind}")
        tail = " &" if i < len(nf.conjuncts) - 1 else ""
        lines.append(print_formula(conj.to_formula()) + tail)
    return "\n".join(lines) + "\n"


def from_normal_sentence(sentence: Sentence) -> NormalFormSentence:
    """Read back a sentence whose conjuncts already have the three normal-form shapes."""
    parts: list[Conjunct] = []
    for f in conjuncts(sentence.formula):
        if isinstance(f, Top):
            continue
        if not _asserted(f):
            raise FragmentError(f"not a normal-form conjunct: {print_formula(f)}")
        inner = f.body
        if (
            f.kind is QuantKind.FORALL
            and isinstance(inner, Quantifier)
            and inner.kind is QuantKind.EXISTS
            and inner.guard is not None
        ):
            parts.append(Skolem(f.variables, f.guard, inner.variables, inner.guard, inner.body))
        elif f.kind is QuantKind.EXISTS:
            parts.append(Existential(f.variables, f.guard, f.body))
        else:
            parts.append(Universal(f.variables, f.guard, f.body))
    if any(isinstance(node, Quantifier) for part in parts for node in _post_order(part.body)):
        raise FragmentError("normal-form bodies must be quantifier-free")
    return NormalFormSentence(sentence.signature, tuple(parts), sentence.universal_role)
