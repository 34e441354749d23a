"""
Abstract syntax, concrete grammar and fragment classification for
first-order sentences without function symbols.

Formulas are immutable trees. A quantifier node keeps its guard atom apart
from its body: a guarded existential reads exists x (guard & body), a guarded
universal reads forall x (guard -> body). Guards are detected while the tree
is built, so parsing and programmatic construction agree.

Sentence text format:

    const c, d.            # optional constant declarations
    rel R/2, P/1.          # optional arity declarations
    forall x y (R(x,y) -> P(x) | x = c)

Connectives by increasing binding strength: <->, ->, |, &, !. Quantifiers
take a block of variables and a parenthesised scope.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Union

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

logger = logging.getLogger(__name__)


class GrammarError(ValueError):
    """Sentence text does not conform to the grammar."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class SignatureError(ValueError):
    """A relation or constant symbol is used inconsistently."""


class FragmentError(ValueError):
    """A sentence falls outside the fragment an operation requires."""


# --- terms and formulas -------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


class QuantKind(str, Enum):
    EXISTS = "exists"
    FORALL = "forall"


@dataclass(frozen=True)
class Quantifier:
    """A quantifier block. ``guard`` is None for unguarded quantification."""

    kind: QuantKind
    variables: tuple[str, ...]
    guard: Atom | Eq | None
    body: "Formula"


Formula = Union[Atom, Eq, Top, Bottom, Not, And, Or, Implies, Iff, Quantifier]
BINARY = (And, Or, Implies, Iff)
TRUE = Top()
FALSE = Bottom()


class FragmentTag(str, Enum):
    GF = "GF"
    TGF = "TGF"
    FO = "FO"


@dataclass(frozen=True)
class Signature:
    """Relation symbols with arities, plus constants. Order is significant."""

    relations: tuple[tuple[str, int], ...]
    constants: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.relations:
            raise SignatureError("a signature needs at least one relation symbol")
        names = [name for name, _ in self.relations] + list(self.constants)
        if len(set(names)) != len(names):
            raise SignatureError(f"symbol names must be unique: {names}")
        for name, arity in self.relations:
            if arity < 1:
                raise SignatureError(f"relation {name} must have arity >= 1, got {arity}")

    @property
    def width(self) -> int:
        return max((arity for _, arity in self.relations), default=0)

    @property
    def relation_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    def arity(self, rel: str) -> int:
        for name, arity in self.relations:
            if name == rel:
                return arity
        raise SignatureError(f"relation {rel} is not in the signature")

    def has_relation(self, rel: str) -> bool:
        return any(name == rel for name, _ in self.relations)

    def extend(
        self,
        relations: Iterable[tuple[str, int]] = (),
        constants: Iterable[str] = (),
    ) -> Signature:
        return Signature(self.relations + tuple(relations), self.constants + tuple(constants))

    def restrict(self, names: Iterable[str]) -> Signature:
        keep = set(names)
        return Signature(tuple(r for r in self.relations if r[0] in keep), self.constants)

    def fresh_name(self, stem: str) -> str:
        taken = set(self.relation_names) | set(self.constants)
        if stem not in taken:
            return stem
        k = 1
        while f"{stem}_{k}" in taken:
            k += 1
        return f"{stem}_{k}"

    def __str__(self) -> str:
        rels = ", ".join(f"{name}/{arity}" for name, arity in self.relations)
        if self.constants:
            return f"rel {rels}; const {', '.join(self.constants)}"
        return f"rel {rels}"

    @classmethod
    def parse(cls, text: str) -> Signature:
        """Inverse of ``str``: "rel R/2, P/1; const c"."""
        rel_part, _, const_part = text.strip().partition(";")
        rel_part = rel_part.strip()
        if not rel_part.startswith("rel"):
            raise SignatureError(f"malformed signature {text!r}")
        relations = []
        for item in rel_part[3:].split(","):
            if not item.strip():
                continue
            name, _, arity = item.strip().partition("/")
            try:
                relations.append((name.strip(), int(arity)))
            except ValueError as e:
                raise SignatureError(f"malformed arity in {item!r}") from e
        constants: tuple[str, ...] = ()
        const_part = const_part.strip()
        if const_part:
            if not const_part.startswith("const"):
                raise SignatureError(f"malformed signature {text!r}")
            constants = tuple(c.strip() for c in const_part[5:].split(",") if c.strip())
        return cls(tuple(relations), constants)


@dataclass(frozen=True)
class Sentence:
    """A closed formula with its declared constants and arities."""

    formula: Formula
    constants: tuple[str, ...] = ()
    relations: tuple[tuple[str, int], ...] = ()
    universal_role: str | None = field(default=None, compare=True)

    @property
    def signature(self) -> Signature:
        used, used_constants = _symbols(self.formula)
        declared = dict(self.relations)
        for name, arity in used.items():
            if name in declared and declared[name] != arity:
                raise SignatureError(f"{name} declared with arity {declared[name]} but used with {arity}")
        rels = list(self.relations) + [r for r in used.items() if r[0] not in declared]
        consts = list(self.constants) + [c for c in used_constants if c not in self.constants]
        return Signature(tuple(rels), tuple(consts))


# --- structural helpers -----------------------------------------------------------


def term_vars(terms: Iterable[Term]) -> list[str]:
    """Variable names in order of first occurrence."""
    seen: list[str] = []
    for t in terms:
        if isinstance(t, Var) and t.name not in seen:
            seen.append(t.name)
    return seen


def atom_terms(atom: Atom | Eq) -> tuple[Term, ...]:
    if isinstance(atom, Atom):
        return atom.args
    return (atom.left, atom.right)


def free_variables(f: Formula) -> frozenset[str]:
    if isinstance(f, (Atom, Eq)):
        return frozenset(term_vars(atom_terms(f)))
    if isinstance(f, (Top, Bottom)):
        return frozenset()
    if isinstance(f, Not):
        return free_variables(f.body)
    if isinstance(f, BINARY):
        return free_variables(f.left) | free_variables(f.right)
    inner = free_variables(f.body)
    if f.guard is not None:
        inner |= free_variables(f.guard)
    return inner - set(f.variables)


def walk(f: Formula) -> Iterator[Formula]:
    """Pre-order, left to right; guards are visited before bodies."""
    yield f
    if isinstance(f, Not):
        yield from walk(f.body)
    elif isinstance(f, BINARY):
        yield from walk(f.left)
        yield from walk(f.right)
    elif isinstance(f, Quantifier):
        if f.guard is not None:
            yield from walk(f.guard)
        yield from walk(f.body)


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


def _left_spine(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return _left_spine(f.left) + [f.right]
    return [f]


def conjoin(parts: Iterable[Formula]) -> Formula:
    result: Formula | None = None
    for part in parts:
        result = part if result is None else And(result, part)
    return TRUE if result is None else result


def negate(f: Formula) -> Formula:
    if isinstance(f, Not):
        return f.body
    if isinstance(f, Top):
        return FALSE
    if isinstance(f, Bottom):
        return TRUE
    return Not(f)


def _covers(guard: Atom | Eq, variables: Iterable[str], rest: Iterable[str]) -> bool:
    guard_vars = set(term_vars(atom_terms(guard)))
    return set(variables) <= guard_vars and set(rest) <= guard_vars


def make_quantifier(kind: QuantKind, variables: tuple[str, ...], matrix: Formula) -> Quantifier:
    """Build a quantifier node, recognising a guard in ``matrix`` when there is one."""
    if kind is QuantKind.EXISTS:
        spine = _left_spine(matrix)
        head, rest = spine[0], spine[1:]
        if isinstance(head, (Atom, Eq)):
            body = conjoin(rest)
            if _covers(head, variables, free_variables(body)):
                return Quantifier(kind, variables, head, body)
    elif isinstance(matrix, Implies) and isinstance(matrix.left, (Atom, Eq)):
        if _covers(matrix.left, variables, free_variables(matrix.right)):
            return Quantifier(kind, variables, matrix.left, matrix.right)
    return Quantifier(kind, variables, None, matrix)


def map_constants(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename constants throughout a formula."""

    def term(t: Term) -> Term:
        if isinstance(t, Const):
            return Const(mapping.get(t.name, t.name))
        return t

    if isinstance(f, Atom):
        return Atom(f.rel, tuple(term(t) for t in f.args))
    if isinstance(f, Eq):
        return Eq(term(f.left), term(f.right))
    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, Not):
        return Not(map_constants(f.body, mapping))
    if isinstance(f, BINARY):
        return type(f)(map_constants(f.left, mapping), map_constants(f.right, mapping))
    guard = map_constants(f.guard, mapping) if f.guard is not None else None
    return Quantifier(f.kind, f.variables, guard, map_constants(f.body, mapping))


def evaluate(
    f: Formula,
    env: Mapping[str, Hashable],
    holds: Callable[[str, tuple[Hashable, ...]], bool],
    constant: Callable[[str], Hashable] = lambda name: name,
) -> bool:
    """Truth of a quantifier-free formula under ``env``.

    ``holds(rel, args)`` answers atoms over resolved elements; constants are
    resolved through ``constant``. Equality compares resolved elements.
    """

    def value(t: Term) -> Hashable:
        if isinstance(t, Var):
            return env[t.name]
        return constant(t.name)

    if isinstance(f, Atom):
        return holds(f.rel, tuple(value(t) for t in f.args))
    if isinstance(f, Eq):
        return value(f.left) == value(f.right)
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Not):
        return not evaluate(f.body, env, holds, constant)
    if isinstance(f, And):
        return evaluate(f.left, env, holds, constant) and evaluate(f.right, env, holds, constant)
    if isinstance(f, Or):
        return evaluate(f.left, env, holds, constant) or evaluate(f.right, env, holds, constant)
    if isinstance(f, Implies):
        return (not evaluate(f.left, env, holds, constant)) or evaluate(f.right, env, holds, constant)
    if isinstance(f, Iff):
        return evaluate(f.left, env, holds, constant) == evaluate(f.right, env, holds, constant)
    raise ValueError("evaluate expects a quantifier-free formula")


# --- classification, signature, length --------------------------------------------


def classify(f: Formula) -> FragmentTag:
    tag = FragmentTag.GF
    for node in walk(f):
        if not isinstance(node, Quantifier):
            continue
        body_vars = free_variables(node.body)
        if node.guard is not None and _covers(node.guard, node.variables, body_vars):
            continue
        if len(set(node.variables) | body_vars) <= 2:
            tag = FragmentTag.TGF
        else:
            return FragmentTag.FO
    return tag


def _symbols(f: Formula) -> tuple[dict[str, int], list[str]]:
    relations: dict[str, int] = {}
    constants: list[str] = []
    for node in walk(f):
        if isinstance(node, Atom):
            known = relations.setdefault(node.rel, len(node.args))
            if known != len(node.args):
                raise SignatureError(f"{node.rel} used with arities {known} and {len(node.args)}")
        if isinstance(node, (Atom, Eq)):
            for t in atom_terms(node):
                if isinstance(t, Const) and t.name not in constants:
                    constants.append(t.name)
    return relations, constants


def signature_of(f: Formula) -> Signature:
    """Relations and constants occurring in ``f``, in order of first occurrence."""
    relations, constants = _symbols(f)
    return Signature(tuple(relations.items()), tuple(constants))


def length(f: Formula) -> int:
    """Uniform length: every parenthesis, connective, quantifier, variable, relation
    symbol and constant counts 1. Commas and periods are not counted; binary
    connectives count with the parenthesis pair that encloses them."""
    if isinstance(f, Atom):
        return len(f.args) + 3
    if isinstance(f, Eq):
        return 3
    if isinstance(f, (Top, Bottom)):
        return 1
    if isinstance(f, Not):
        return 1 + length(f.body)
    if isinstance(f, BINARY):
        return 3 + length(f.left) + length(f.right)
    own = 1 + len(f.variables) + 2
    if f.guard is None:
        return own + length(f.body)
    return own + 1 + length(f.guard) + length(f.body)


# --- printing ----------------------------------------------------------------------

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}
_SYMBOL = {Iff: "<->", Implies: "->", Or: "|", And: "&"}


def _term_text(t: Term) -> str:
    return t.name


def _render(f: Formula) -> tuple[str, int]:
    if isinstance(f, Atom):
        return f"{f.rel}({','.join(_term_text(t) for t in f.args)})", 6
    if isinstance(f, Eq):
        return f"{_term_text(f.left)} = {_term_text(f.right)}", 6
    if isinstance(f, Top):
        return "true", 6
    if isinstance(f, Bottom):
        return "false", 6
    if isinstance(f, Not):
        return "!" + _wrap(f.body, 5), 5
    if isinstance(f, BINARY):
        prec = _PREC[type(f)]
        if isinstance(f, Implies):
            left_min, right_min = prec + 1, prec
        else:
            left_min, right_min = prec, prec + 1
        text = f"{_wrap(f.left, left_min)} {_SYMBOL[type(f)]} {_wrap(f.right, right_min)}"
        return text, prec
    head = f"{f.kind.value} {' '.join(f.variables)}"
    if f.guard is None:
        return f"{head} ({_wrap(f.body, 1)})", 6
    guard = _render(f.guard)[0]
    if f.kind is QuantKind.EXISTS:
        if isinstance(f.body, Top):
            return f"{head} ({guard})", 6
        return f"{head} ({guard} & {_wrap(f.body, 4)})", 6
    return f"{head} ({guard} -> {_wrap(f.body, 2)})", 6


def _wrap(f: Formula, minimum: int) -> str:
    text, prec = _render(f)
    return text if prec >= minimum else f"({text})"


def print_formula(f: Formula) -> str:
    return _render(f)[0]


def print_sentence(s: Sentence) -> str:
    lines = []
    if s.constants:
        lines.append(f"const {', '.join(s.constants)}.")
    if s.relations:
        lines.append("rel " + ", ".join(f"{name}/{arity}" for name, arity in s.relations) + ".")
    lines.append(print_formula(s.formula))
    return "\n".join(lines) + "\n"


# --- parsing -----------------------------------------------------------------------

SENTENCE_GRAMMAR = r"""
    start: declaration* formula

    declaration: "const" NAME ("," NAME)* "."               -> const_decl
               | "rel" arity_decl ("," arity_decl)* "."     -> rel_decl
    arity_decl: NAME "/" INT

    ?formula: iff
    ?iff: imp
        | iff "<->" imp                  -> iff
    ?imp: disj
        | disj "->" imp                  -> implies
    ?disj: conj
         | disj "|" conj                 -> disj
    ?conj: unary
         | conj "&" unary                -> conj
    ?unary: "!" unary                    -> neg
          | primary
    ?primary: NAME "(" term ("," term)* ")"   -> atom
            | term "=" term              -> equality
            | term "!=" term             -> inequality
            | "true"                     -> top
            | "false"                    -> bottom
            | "exists" NAME+ "(" formula ")"   -> exists
            | "forall" NAME+ "(" formula ")"   -> forall
            | "(" formula ")"
    term: NAME

    NAME: /[a-zA-Z_][a-zA-Z0-9_]*/
    COMMENT: /#[^\n]*/

    %import common.INT
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_parser = Lark(SENTENCE_GRAMMAR, parser="lalr", propagate_positions=True)


@v_args(inline=True)
class _SentenceBuilder(Transformer):
    def __init__(self, constants: set[str], declared: dict[str, int]):
        super().__init__()
        self.constants = constants
        self.declared = declared

    def term(self, name: Token) -> Term:
        return Const(str(name)) if str(name) in self.constants else Var(str(name))

    def atom(self, name: Token, *terms: Term) -> Atom:
        rel = str(name)
        if rel in self.constants:
            raise GrammarError(f"{rel} is declared as a constant", name.line, name.column)
        expected = self.declared.get(rel)
        if expected is not None and expected != len(terms):
            raise SignatureError(
                f"{rel} declared with arity {expected} but used with {len(terms)} "
                f"(line {name.line}, column {name.column})"
            )
        return Atom(rel, tuple(terms))

    def equality(self, left: Term, right: Term) -> Eq:
        return Eq(left, right)

    def inequality(self, left: Term, right: Term) -> Not:
        return Not(Eq(left, right))

    def top(self) -> Top:
        return TRUE

    def bottom(self) -> Bottom:
        return FALSE

    def neg(self, body: Formula) -> Not:
        return Not(body)

    def conj(self, left: Formula, right: Formula) -> And:
        return And(left, right)

    def disj(self, left: Formula, right: Formula) -> Or:
        return Or(left, right)

    def implies(self, left: Formula, right: Formula) -> Implies:
        return Implies(left, right)

    def iff(self, left: Formula, right: Formula) -> Iff:
        return Iff(left, right)

    def _block(self, kind: QuantKind, items: tuple) -> Quantifier:
        *names, matrix = items
        variables = tuple(str(n) for n in names)
        for token in names:
            if str(token) in self.constants:
                raise GrammarError(f"constant {token} cannot be quantified", token.line, token.column)
        if len(set(variables)) != len(variables):
            first = names[0]
            raise GrammarError(f"repeated variable in block {variables}", first.line, first.column)
        return make_quantifier(kind, variables, matrix)

    def exists(self, *items) -> Quantifier:
        return self._block(QuantKind.EXISTS, items)

    def forall(self, *items) -> Quantifier:
        return self._block(QuantKind.FORALL, items)


def _declarations(tree) -> tuple[list[str], dict[str, int]]:
    constants: list[str] = []
    declared: dict[str, int] = {}
    for decl in tree.children[:-1]:
        if decl.data == "const_decl":
            for token in decl.children:
                if str(token) in constants:
                    raise GrammarError(f"constant {token} declared twice", token.line, token.column)
                constants.append(str(token))
        else:
            for item in decl.children:
                name, arity = item.children
                if str(name) in declared and declared[str(name)] != int(arity):
                    raise SignatureError(f"conflicting arity declarations for {name}")
                declared[str(name)] = int(arity)
    return constants, declared


def parse_sentence(text: str) -> Sentence:
    """Parse sentence text; raises GrammarError or SignatureError."""
    try:
        tree = _parser.parse(text)
    except UnexpectedInput as e:
        raise GrammarError(f"syntax error near {e.get_context(text, span=20)!r}", e.line, e.column) from e
    constants, declared = _declarations(tree)
    builder = _SentenceBuilder(set(constants), declared)
    try:
        formula = builder.transform(tree.children[-1])
    except VisitError as e:
        if isinstance(e.orig_exc, (GrammarError, SignatureError)):
            raise e.orig_exc from e
        raise
    unbound = free_variables(formula)
    if unbound:
        raise GrammarError(f"unbound identifiers {sorted(unbound)}; declare constants with 'const'")
    sentence = Sentence(formula, tuple(constants), tuple(declared.items()))
    sentence.signature  # arity consistency
    logger.debug("parsed sentence of length %s", length(formula))
    return sentence
