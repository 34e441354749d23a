"""
Sample sentences for demos and tests.

The corpus holds small guarded sentences with known status: satisfiable
normal-form sentences over widths 1 to 3, a few unsatisfiable ones, and the
worked examples (the thesis-supervision sentence, its triguarded variant,
and the two-block sentence whose normal form needs two fresh unary symbols).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from gforge.logic_syntax import Sentence, parse_sentence
from gforge.structure_lab import FiniteStructure


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    text: str
    satisfiable: bool
    fragment: str = "GF"
    normal: bool = True
    note: str = ""

    def sentence(self) -> Sentence:
        return _parse(self.text)


@lru_cache(maxsize=None)
def _parse(text: str) -> Sentence:
    return parse_sentence(text)


_ENTRIES = (
    CorpusEntry("unary-exists", "exists x (P(x) & Q(x))", True),
    CorpusEntry("unary-split", "exists x (P(x) & !Q(x)) & exists x (Q(x) & !P(x))", True),
    CorpusEntry("unary-implication", "exists x (P(x) & P(x)) & forall x (P(x) -> Q(x))", True),
    CorpusEntry(
        "unary-equivalence",
        "forall x (P(x) -> Q(x)) & forall x (Q(x) -> P(x)) & exists x (P(x) & P(x))",
        True,
    ),
    CorpusEntry("universal-only", "forall x y (R(x,y) -> P(x))", True),
    CorpusEntry(
        "edge-out",
        "exists x (P(x) & P(x)) & forall x (P(x) -> exists y (R(x,y) & Q(y)))",
        True,
    ),
    CorpusEntry(
        "serial",
        "exists x (P(x) & P(x)) & forall x (P(x) -> exists y (R(x,y) & P(y)))",
        True,
    ),
    CorpusEntry(
        "asymmetric-serial",
        "exists x (P(x) & P(x)) & forall x (P(x) -> exists y (R(x,y) & P(y) & !R(y,x)))",
        True,
        note="smallest model is a directed 3-cycle",
    ),
    CorpusEntry(
        "symmetric-split",
        "forall x y (R(x,y) -> R(y,x)) & exists x y (R(x,y) & P(x) & !P(y))",
        True,
    ),
    CorpusEntry(
        "bipartite",
        "exists x (P(x) & P(x)) & forall x (P(x) -> !Q(x)) & forall x (P(x) -> exists y (R(x,y) & Q(y)))"
        " & forall x (Q(x) -> exists y (R(x,y) & P(y))) & forall x y (R(x,y) -> R(y,x))",
        True,
    ),
    CorpusEntry("two-relations", "forall x y (R(x,y) -> !S(x,y)) & exists x y (R(x,y) & S(y,x))", True),
    CorpusEntry("guarded-inequality", "exists x y (R(x,y) & x != y) & forall x y (R(x,y) -> P(y))", True),
    CorpusEntry(
        "unary-chain",
        "exists x (A(x) & A(x)) & forall x (A(x) -> exists y (R(x,y) & B(y)))"
        " & forall x (B(x) -> exists y (R(x,y) & C(y))) & forall x (C(x) -> !A(x))",
        True,
    ),
    CorpusEntry("pair-cover", "exists x y (R(x,y) & R(y,x)) & forall x y (R(x,y) -> (P(x) | P(y)))", True),
    CorpusEntry(
        "zero-successor",
        "exists x (Z(x) & Z(x)) & forall x (Z(x) -> exists y (S(x,y) & !Z(y))) & forall x y (S(x,y) -> !S(y,x))",
        True,
    ),
    CorpusEntry(
        "alternating",
        "exists x (P(x) & P(x)) & forall x (P(x) -> exists y (R(x,y) & Q(y)))"
        " & forall x (Q(x) -> exists y (S(x,y) & P(y))) & forall x y (R(x,y) -> !S(y,x))",
        True,
    ),
    CorpusEntry(
        "two-successors",
        "exists x (P(x) & P(x)) & forall x (P(x) -> exists y (R(x,y) & Q(y)))"
        " & forall x (P(x) -> exists y (R(x,y) & !Q(y)))",
        True,
    ),
    CorpusEntry(
        "irreflexive-serial",
        "exists x (P(x) & P(x)) & forall x (P(x) -> exists y (R(x,y) & P(y))) & forall x (P(x) -> !R(x,x))",
        True,
        note="smallest model is a 2-cycle",
    ),
    CorpusEntry("constant-mark", "const c. P(c) & forall x (P(x) -> exists y (R(x,y) & Q(y)))", True),
    CorpusEntry("constant-pair", "const c, d. R(c,d) & !R(d,c) & forall x y (R(x,y) -> P(x))", True),
    CorpusEntry("ternary-exists", "exists x y z (T(x,y,z) & P(x) & !P(z))", True),
    CorpusEntry(
        "ternary-skolem",
        "exists x (P(x) & P(x)) & forall x (P(x) -> exists y z (T(x,y,z) & Q(y) & !Q(z)))",
        True,
    ),
    CorpusEntry(
        "ternary-rotation",
        "exists x y z (T(x,y,z) & T(x,y,z)) & forall x y z (T(x,y,z) -> T(y,z,x))",
        True,
    ),
    CorpusEntry(
        "ternary-symmetric",
        "forall x y z (T(x,y,z) -> (T(y,x,z) & P(z))) & exists x y z (T(x,y,z) & Q(x))",
        True,
    ),
    CorpusEntry(
        "mixed-arity",
        "forall x y (R(x,y) -> exists z (T(x,y,z) & P(z))) & exists x y (R(x,y) & Q(x))",
        True,
    ),
    CorpusEntry("contradiction", "exists x (P(x) & !P(x))", False),
    CorpusEntry("unary-clash", "exists x (P(x) & Q(x)) & forall x (P(x) -> !Q(x))", False),
    CorpusEntry(
        "skolem-clash",
        "exists x (P(x) & P(x)) & forall x (P(x) -> exists y (R(x,y) & Q(y))) & forall x y (R(x,y) -> !Q(y))",
        False,
    ),
    CorpusEntry(
        "supervision",
        "forall p s (supervises(p,s) -> (!graduate(s) & exists t (prepares(s,t) & thesis(t))))",
        True,
        normal=False,
        note="guards supervises(p,s) and prepares(s,t)",
    ),
    CorpusEntry(
        "better-than",
        "forall p s ((professor(p) & student(s)) -> exists t (better_than_in(p,s,t) & topic(t)))",
        True,
        fragment="TGF",
        normal=False,
        note="the outer block is unguarded but binds only two variables",
    ),
    CorpusEntry(
        "roles",
        "exists x (U(x) & exists y z (P(x,y,z) & !U(y))) & exists u (U(u) & forall v w (P(u,v,w) -> U(v)))",
        True,
        normal=False,
        note="normal form adds one unary symbol per inner block",
    ),
    CorpusEntry(
        "unique-zero",
        "forall x y ((Zero(x) & Zero(y)) -> x = y)",
        True,
        fragment="TGF",
        normal=False,
        note="equality between variables; not preserved by duplication",
    ),
)


def corpus() -> tuple[CorpusEntry, ...]:
    return _ENTRIES


def entry(name: str) -> CorpusEntry:
    for e in _ENTRIES:
        if e.name == name:
            return e
    raise KeyError(f"no corpus entry named {name!r}")


def normal_form_entries(satisfiable: bool = True) -> list[CorpusEntry]:
    return [e for e in _ENTRIES if e.normal and e.satisfiable == satisfiable]


def roles_model() -> FiniteStructure:
    """Three elements, U = {0, 2}, P = {(0, 1, 2)}: a model of the "roles" sentence."""
    sig = entry("roles").sentence().signature
    return FiniteStructure.from_facts(sig, 3, [("U", (0,)), ("U", (2,)), ("P", (0, 1, 2))])
