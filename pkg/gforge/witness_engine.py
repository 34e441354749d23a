"""
Satisfiability witnesses: per-arity families of atomic types.

A family is a witness for a normal-form sentence when it is closed under
reducts, has exactly one 0-type, and supports every conjunct: universal
bodies hold under every guard-satisfying assignment, Skolem conjuncts find
an extension type in the family, and each existential is satisfied by some
member type. Two routes compute one: greatest-fixpoint type elimination when
the type spaces are small enough to enumerate, and the realized family of a
small model found by grounding into z3 otherwise.
"""
from __future__ import annotations

import logging
import os
import re
from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import permutations, product
from pathlib import Path
from typing import Iterator, Mapping

import z3

from gforge.logic_syntax import (
    And,
    Atom,
    Bottom,
    Const,
    Eq,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Signature,
    SignatureError,
    Top,
    Var,
    atom_terms,
    evaluate,
    term_vars,
)
from gforge.normal_form import Existential, NormalFormSentence, Skolem, Universal
from gforge.structure_lab import FiniteStructure, duplicate, kings
from gforge.type_algebra import (
    AtomicType,
    TypeAlgebraError,
    atom_space,
    count_types,
    enumerate_forced,
    index_sequences,
    is_guarded_type,
    iter_bits,
    reduct_bits,
)

logger = logging.getLogger(__name__)

TYPE_CAP = int(os.environ.get("GFORGE_TYPE_CAP", "65536"))
MODEL_SEARCH_MAX = int(os.environ.get("GFORGE_MODEL_SEARCH_MAX", "6"))
WITNESS_HEADER = "gforge-witness 1"

STRATEGIES = ("auto", "eliminate", "model")


class NoWitnessFound(RuntimeError):
    """Every 0-type branch was eliminated, or no small model exists."""


@dataclass(frozen=True)
class TypeFamily:
    """Sorted type bit-vectors per arity 0..width."""

    signature: Signature
    levels: tuple[tuple[int, ...], ...]
    universal_role: str | None = None

    @property
    def width(self) -> int:
        return len(self.levels) - 1

    @property
    def size(self) -> int:
        return sum(len(level) for level in self.levels)

    def index_of(self, k: int, bits: int) -> int:
        level = self.levels[k]
        i = bisect_left(level, bits)
        if i == len(level) or level[i] != bits:
            raise KeyError(f"type {bits} not in level {k}")
        return i

    def contains(self, k: int, bits: int) -> bool:
        level = self.levels[k]
        i = bisect_left(level, bits)
        return i < len(level) and level[i] == bits

    def types(self, k: int) -> list[AtomicType]:
        return [AtomicType(bits, k, self.signature) for bits in self.levels[k]]

    def replace(self, levels: Mapping[int, set[int]] | list[set[int]]) -> TypeFamily:
        if isinstance(levels, Mapping):
            levels = [levels[k] for k in range(self.width + 1)]
        return TypeFamily(self.signature, tuple(tuple(sorted(level)) for level in levels), self.universal_role)


Witness = TypeFamily


@dataclass
class WitnessReport:
    verdicts: dict[str, bool] = field(default_factory=dict)
    counterexamples: dict[str, list[str]] = field(default_factory=dict)

    def record(self, check: str, ok: bool, example: str | None = None) -> None:
        self.verdicts[check] = self.verdicts.get(check, True) and ok
        if not ok:
            self.counterexamples.setdefault(check, []).append(example or "unspecified")

    def merge(self, other: WitnessReport) -> WitnessReport:
        for check, ok in other.verdicts.items():
            self.verdicts[check] = self.verdicts.get(check, True) and ok
        for check, examples in other.counterexamples.items():
            self.counterexamples.setdefault(check, []).extend(examples)
        return self

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def records(self) -> list[str]:
        lines = [f"{check}={'true' if ok else 'false'}" for check, ok in self.verdicts.items()]
        for check, examples in self.counterexamples.items():
            lines.extend(f"counterexample.{check}={example}" for example in examples[:5])
        return lines


# --- evaluation inside a type ----------------------------------------------------------------


def _type_text(sig: Signature, k: int, bits: int) -> str:
    return str(AtomicType(bits, k, sig))


def _holds_in(sig: Signature, k: int, bits: int):
    space = atom_space(sig, k)

    def holds(rel: str, args: tuple) -> bool:
        return bool(bits >> space.index(rel, [space.term(a) for a in args]) & 1)

    return holds


def _domain(sig: Signature, k: int) -> list:
    return list(range(k)) + list(sig.constants)


def guard_assignments(
    sig: Signature,
    k: int,
    bits: int,
    guard: Atom | Eq,
    variables: tuple[str, ...],
    bound: Mapping[str, object] | None = None,
) -> Iterator[dict]:
    """Assignments of ``variables`` into the canonical domain of a k-type making ``guard`` true."""
    bound = dict(bound or {})
    if isinstance(guard, Eq):
        free = [v for v in variables if v not in bound]
        for values in product(_domain(sig, k), repeat=len(free)):
            env = {**bound, **dict(zip(free, values))}
            if evaluate(guard, env, _holds_in(sig, k, bits)):
                yield env
        return
    space = atom_space(sig, k)
    mask = space.relation_mask(guard.rel)
    for bit in iter_bits(bits & mask):
        _, terms = space.decode(bit)
        env = dict(bound)
        for t, code in zip(guard.args, terms):
            element = code if code < k else sig.constants[code - k]
            if isinstance(t, Const):
                if t.name != element:
                    break
            elif t.name in env:
                if env[t.name] != element:
                    break
            else:
                env[t.name] = element
        else:
            yield env


def _spanning(env: Mapping[str, object], variables: tuple[str, ...], k: int) -> bool:
    return {env[v] for v in variables if isinstance(env[v], int)} == set(range(k))


# --- validation ---------------------------------------------------------------------------------


def validate(family: TypeFamily) -> WitnessReport:
    report = WitnessReport()
    sig = family.signature
    report.record(
        "bounded",
        family.width <= sig.width,
        None if family.width <= sig.width else f"levels up to {family.width} exceed width {sig.width}",
    )
    zero = len(family.levels[0]) if family.levels else 0
    report.record("consistent", zero == 1, f"{zero} 0-types")
    for k, level in enumerate(family.levels):
        report.record("nonempty", bool(level), f"level {k} is empty")
    report.record("closed", True)
    for k, level in enumerate(family.levels):
        for bits in level:
            for seq in index_sequences(k):
                if seq == tuple(range(k)):
                    continue
                red = reduct_bits(sig, k, bits, seq)
                if not family.contains(len(seq), red):
                    report.record(
                        "closed",
                        False,
                        f"reduct {[i + 1 for i in seq]} of {_type_text(sig, k, bits)} = {_type_text(sig, len(seq), red)}",
                    )
    if family.universal_role:
        report.record("universal-role", True)
        for k, level in enumerate(family.levels):
            forced = atom_space(sig, k).relation_mask(family.universal_role)
            for bits in level:
                if bits & forced != forced:
                    report.record("universal-role", False, f"{_type_text(sig, k, bits)} lacks role atoms")
    return report


def realized_family(b: FiniteStructure, width: int | None = None, universal_role: str | None = None) -> TypeFamily:
    """All types realized by tuples of distinct unnamed elements, up to ``width``."""
    width = b.signature.width if width is None else width
    levels = []
    for k in range(width + 1):
        levels.append({b.type_bits(t) for t in permutations(range(b.size), k)})
    return TypeFamily(b.signature, tuple(tuple(sorted(level)) for level in levels), universal_role)


# --- support ------------------------------------------------------------------------------------


class _Support:
    """Support checks of one normal-form sentence against one family."""

    def __init__(self, family: TypeFamily, nf: NormalFormSentence):
        self.family = family
        self.nf = nf
        self.sig = family.signature
        self._ext: dict[tuple[int, int], dict[int, list[int]]] = {}
        self._memo: dict[tuple, bool] = {}

    def extensions(self, j: int, m: int) -> dict[int, list[int]]:
        key = (j, m)
        if key not in self._ext:
            table: dict[int, list[int]] = defaultdict(list)
            for bits in self.family.levels[m]:
                table[reduct_bits(self.sig, m, bits, range(j))].append(bits)
            self._ext[key] = table
        return self._ext[key]

    def universal_ok(self, conj: Universal, k: int, bits: int) -> dict | None:
        holds = _holds_in(self.sig, k, bits)
        for env in guard_assignments(self.sig, k, bits, conj.guard, conj.variables):
            if _spanning(env, conj.variables, k) and not evaluate(conj.body, env, holds):
                return env
        return None

    def skolem_ok(self, conj: Skolem, index: int, k: int, bits: int) -> dict | None:
        beta_vars = set(term_vars(atom_terms(conj.witness_guard)))
        xs = [v for v in conj.variables if v in beta_vars]
        for env in guard_assignments(self.sig, k, bits, conj.guard, conj.variables):
            if not _spanning(env, conj.variables, k):
                continue
            positions = sorted({env[v] for v in xs if isinstance(env[v], int)})
            renamed = {v: positions.index(env[v]) if isinstance(env[v], int) else env[v] for v in xs}
            base = reduct_bits(self.sig, k, bits, positions)
            key = (index, len(positions), base, tuple(sorted(renamed.items(), key=lambda kv: kv[0])))
            ok = self._memo.get(key)
            if ok is None:
                ok = self._extend(conj, len(positions), base, renamed)
                self._memo[key] = ok
            if not ok:
                return env
        return None

    def _extend(self, conj: Skolem, j: int, base: int, renamed: dict) -> bool:
        top = min(self.family.width, j + len(conj.witnesses))
        for m in range(j, top + 1):
            for ext in self.extensions(j, m).get(base, ()):
                holds = _holds_in(self.sig, m, ext)
                for env in guard_assignments(self.sig, m, ext, conj.witness_guard, conj.witnesses, renamed):
                    used = {env[y] for y in conj.witnesses if isinstance(env[y], int)}
                    if not set(range(j, m)) <= used:
                        continue
                    if evaluate(conj.body, env, holds):
                        return True
        return False

    def existential_ok(self, conj: Existential) -> bool:
        for k, level in enumerate(self.family.levels):
            for bits in level:
                holds = _holds_in(self.sig, k, bits)
                for env in guard_assignments(self.sig, k, bits, conj.guard, conj.variables):
                    if evaluate(conj.body, env, holds):
                        return True
        return False


def supports(family: TypeFamily, nf: NormalFormSentence) -> WitnessReport:
    report = WitnessReport({"universal-supported": True, "skolem-supported": True, "existential-supported": True})
    if family.signature != nf.signature:
        report.record("universal-supported", False, f"family over {family.signature}, sentence over {nf.signature}")
        return report
    check = _Support(family, nf)
    sig = family.signature
    for k, level in enumerate(family.levels):
        for bits in level:
            for conj in nf.universals:
                env = check.universal_ok(conj, k, bits)
                if env is not None:
                    report.record("universal-supported", False, f"{_type_text(sig, k, bits)} under {env}")
            for i, conj in enumerate(nf.conjuncts):
                if isinstance(conj, Skolem):
                    env = check.skolem_ok(conj, i, k, bits)
                    if env is not None:
                        report.record("skolem-supported", False, f"{_type_text(sig, k, bits)} under {env}")
    for conj in nf.existentials:
        if not check.existential_ok(conj):
            report.record("existential-supported", False, f"no type satisfies {conj.to_formula()}")
    return report


def certify(family: TypeFamily, nf: NormalFormSentence, guarded: bool = False) -> WitnessReport:
    """validate + supports, plus all-guarded and pair-complete where they apply."""
    report = validate(family)
    if not report.ok:
        return report
    report.merge(supports(family, nf))
    if guarded:
        report.record("all-guarded", True)
        for k in range(family.width + 1):
            for tau in family.types(k):
                if not is_guarded_type(tau):
                    report.record("all-guarded", False, str(tau))
    if family.universal_role:
        ok, missing = pair_complete(family)
        report.record("pair-complete", ok, "; ".join(f"({a}, {b})" for a, b in missing[:5]))
    return report


# --- elimination -------------------------------------------------------------------------------


def _candidates(sig: Signature, k: int, universal_role: str | None, cap: int) -> list[int]:
    space = atom_space(sig, k)
    forced = space.relation_mask(universal_role) if universal_role else 0
    return enumerate_forced(sig, k, forced, cap)


def _close(family: dict[int, set[int]], sig: Signature) -> bool:
    """Delete types with a missing reduct; returns whether anything was deleted."""
    changed = False
    for k in sorted(family):
        for bits in sorted(family[k]):
            for seq in index_sequences(k):
                if len(seq) == k and seq == tuple(range(k)):
                    continue
                if reduct_bits(sig, k, bits, seq) not in family[len(seq)]:
                    family[k].discard(bits)
                    changed = True
                    break
    return changed


def _eliminate_branch(
    nf: NormalFormSentence, levels: list[set[int]], zero: int, universal_role: str | None
) -> TypeFamily | None:
    sig = nf.signature
    width = len(levels) - 1
    family = {0: {zero}}
    for k in range(1, width + 1):
        family[k] = {bits for bits in levels[k] if reduct_bits(sig, k, bits, ()) == zero}
    rounds = 0
    while True:
        rounds += 1
        changed = _close(family, sig)
        current = TypeFamily(sig, tuple(tuple(sorted(family[k])) for k in range(width + 1)), universal_role)
        check = _Support(current, nf)
        for i, conj in enumerate(nf.conjuncts):
            if not isinstance(conj, Skolem):
                continue
            for k in range(width + 1):
                dead = {bits for bits in family[k] if check.skolem_ok(conj, i, k, bits) is not None}
                if dead:
                    family[k] -= dead
                    changed = True
        if not changed:
            break
    logger.debug("branch %s settled after %d rounds: %s", zero, rounds, [len(family[k]) for k in family])
    if any(not family[k] for k in family):
        return None
    if not all(check.existential_ok(conj) for conj in nf.existentials):
        return None
    return current


def eliminate(nf: NormalFormSentence, cap: int = TYPE_CAP) -> TypeFamily:
    """Greatest-fixpoint type elimination, one branch per surviving 0-type."""
    sig = nf.signature
    width = sig.width
    empty = TypeFamily(sig, tuple(() for _ in range(width + 1)), nf.universal_role)
    screen = _Support(empty, nf)
    levels: list[set[int]] = []
    for k in range(width + 1):
        kept = set()
        for bits in _candidates(sig, k, nf.universal_role, cap):
            if all(screen.universal_ok(conj, k, bits) is None for conj in nf.universals):
                kept.add(bits)
        levels.append(kept)
    logger.info("universal filter kept %s types per level", [len(level) for level in levels])
    for zero in sorted(levels[0]):
        found = _eliminate_branch(nf, levels, zero, nf.universal_role)
        if found is not None:
            return found
    raise NoWitnessFound("every 0-type branch was eliminated")


def _fits_cap(nf: NormalFormSentence, cap: int) -> bool:
    return all(count_types(nf.signature, k) <= cap for k in range(nf.width + 1))


def compute_witness(
    nf: NormalFormSentence,
    strategy: str = "auto",
    cap: int = TYPE_CAP,
    max_size: int = MODEL_SEARCH_MAX,
) -> TypeFamily:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown witness strategy {strategy!r}")
    if strategy == "eliminate" or (strategy == "auto" and _fits_cap(nf, cap)):
        try:
            return eliminate(nf, cap)
        except TypeAlgebraError:
            if strategy == "eliminate":
                raise
            logger.warning("type spaces exceed the cap %s; falling back to model search", cap)
    return minimal_witness(nf, max_size=max_size, shrink=False)


# --- small models via z3 ---------------------------------------------------------------------------


def _ground(
    f: Formula,
    env: Mapping[str, object],
    atom_var,
) -> z3.BoolRef:
    def value(t):
        return env[t.name] if isinstance(t, Var) else t.name

    if isinstance(f, Atom):
        return atom_var(f.rel, tuple(value(t) for t in f.args))
    if isinstance(f, Eq):
        return z3.BoolVal(value(f.left) == value(f.right))
    if isinstance(f, Top):
        return z3.BoolVal(True)
    if isinstance(f, Bottom):
        return z3.BoolVal(False)
    if isinstance(f, Not):
        return z3.Not(_ground(f.body, env, atom_var))
    left, right = _ground(f.left, env, atom_var), _ground(f.right, env, atom_var)
    if isinstance(f, And):
        return z3.And(left, right)
    if isinstance(f, Or):
        return z3.Or(left, right)
    if isinstance(f, Implies):
        return z3.Implies(left, right)
    if isinstance(f, Iff):
        return left == right
    raise ValueError("grounding expects quantifier-free bodies")


def _model_at(nf: NormalFormSentence, n: int) -> FiniteStructure | None:
    sig = nf.signature
    domain: list = list(range(n)) + list(sig.constants)
    atoms: dict[tuple[str, tuple], z3.BoolRef] = {}

    def atom_var(rel: str, args: tuple) -> z3.BoolRef:
        key = (rel, args)
        if key not in atoms:
            atoms[key] = z3.Bool(f"{rel}({','.join(map(str, args))})")
        return atoms[key]

    def assignments(variables):
        for values in product(domain, repeat=len(variables)):
            yield dict(zip(variables, values))

    solver = z3.Solver()
    for conj in nf.conjuncts:
        if isinstance(conj, Existential):
            solver.add(
                z3.Or(
                    *[
                        z3.And(_ground(conj.guard, env, atom_var), _ground(conj.body, env, atom_var))
                        for env in assignments(conj.variables)
                    ],
                    z3.BoolVal(False),
                )
            )
        elif isinstance(conj, Universal):
            for env in assignments(conj.variables):
                solver.add(z3.Implies(_ground(conj.guard, env, atom_var), _ground(conj.body, env, atom_var)))
        else:
            for env in assignments(conj.variables):
                options = [
                    z3.And(_ground(conj.witness_guard, inner, atom_var), _ground(conj.body, inner, atom_var))
                    for extra in assignments(conj.witnesses)
                    for inner in [{**env, **extra}]
                ]
                solver.add(z3.Implies(_ground(conj.guard, env, atom_var), z3.Or(*options, z3.BoolVal(False))))
    if nf.universal_role:
        for args in product(domain, repeat=2):
            solver.add(atom_var(nf.universal_role, args))
    if solver.check() != z3.sat:
        return None
    model = solver.model()
    facts = []
    for rel, arity in sig.relations:
        for args in product(domain, repeat=arity):
            var = atoms.get((rel, args))
            if var is not None and z3.is_true(model.eval(var, model_completion=True)):
                facts.append((rel, args))
    return FiniteStructure.from_facts(sig, n, facts)


def find_small_model(
    nf: NormalFormSentence, max_size: int = MODEL_SEARCH_MAX, min_size: int | None = None
) -> FiniteStructure | None:
    """Smallest model with ``min_size..max_size`` unnamed elements, by exhaustive grounding."""
    start = max(1, nf.width) if min_size is None else min_size
    for n in range(start, max_size + 1):
        found = _model_at(nf, n)
        if found is not None:
            logger.info("found a model with %d unnamed elements", n)
            return found
    return None


def minimal_witness(nf: NormalFormSentence, max_size: int = MODEL_SEARCH_MAX, shrink: bool = True) -> TypeFamily:
    model = find_small_model(nf, max_size)
    if model is None:
        raise NoWitnessFound(f"no model with at most {max_size} unnamed elements")
    if nf.universal_role:
        model = duplicate(model)
        logger.debug("duplicated model for king-freeness: %s kings left", len(kings(model).elements))
    family = realized_family(model, nf.width, nf.universal_role)
    return shrink_witness(family, nf) if shrink else family


# --- shrinking, pairs, densifying -------------------------------------------------------------------


def _orbit(sig: Signature, k: int, bits: int) -> frozenset[int]:
    return frozenset(reduct_bits(sig, k, bits, p) for p in permutations(range(k)))


def _cascade(family: TypeFamily, k: int, removed: set[int]) -> TypeFamily | None:
    levels = {i: set(level) for i, level in enumerate(family.levels)}
    levels[k] -= removed
    while _close(levels, family.signature):
        pass
    if any(not levels[i] for i in levels):
        return None
    return family.replace(levels)


def _acceptable(candidate: TypeFamily, nf: NormalFormSentence) -> bool:
    if not supports(candidate, nf).ok:
        return False
    return not candidate.universal_role or pair_complete(candidate)[0]


def shrink_witness(w: TypeFamily, nf: NormalFormSentence) -> TypeFamily:
    """Greedily drop permutation orbits of types while the family stays a witness."""
    current = w
    for k in range(1, w.width + 1):
        seen: set[int] = set()
        for bits in list(current.levels[k]):
            if bits in seen or not current.contains(k, bits):
                continue
            orbit = _orbit(current.signature, k, bits)
            seen |= orbit
            candidate = _cascade(current, k, set(orbit))
            if candidate is not None and _acceptable(candidate, nf):
                current = candidate
    logger.info("shrunk witness from %d to %d types", w.size, current.size)
    return current


def pair_complete(w: TypeFamily) -> tuple[bool, list[tuple[AtomicType, AtomicType]]]:
    """Every ordered pair of 1-types is joined by some 2-type of the family."""
    if w.width < 2:
        return True, []
    sig = w.signature
    joined = {(reduct_bits(sig, 2, bits, (0,)), reduct_bits(sig, 2, bits, (1,))) for bits in w.levels[2]}
    missing = [
        (AtomicType(a, 1, sig), AtomicType(b, 1, sig))
        for a in w.levels[1]
        for b in w.levels[1]
        if (a, b) not in joined
    ]
    return not missing, missing


def repair_pairs(w: TypeFamily, nf: NormalFormSentence, depth: int = 4) -> TypeFamily | None:
    """Experimental: delete 1-types until the family is pair-complete and still a witness."""
    ok, missing = pair_complete(w)
    if ok:
        return w
    if depth == 0:
        return None
    culprits = sorted({t.bits for pair in missing for t in pair})
    for bits in culprits:
        candidate = _cascade(w, 1, {bits})
        if candidate is None or not supports(candidate, nf).ok:
            continue
        repaired = repair_pairs(candidate, nf, depth - 1)
        if repaired is not None:
            return repaired
    return None


def densify(w: TypeFamily) -> TypeFamily:
    """Add a fresh relation of the witness width that holds everywhere in every type.

    The new symbol comes last in the signature, so existing atom indices keep
    their meaning and adding it is a bitwise or.
    """
    width = w.width
    if width == 0:
        return w
    name = w.signature.fresh_name("G")
    sig = w.signature.extend([(name, width)])
    levels = []
    for k, level in enumerate(w.levels):
        mask = atom_space(sig, k).relation_mask(name)
        levels.append(tuple(sorted(bits | mask for bits in level)))
    return TypeFamily(sig, tuple(levels), w.universal_role)


# --- interchange format ------------------------------------------------------------------------------

_ATOM = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\(([^)]*)\)")


def format_witness(w: TypeFamily) -> str:
    lines = [WITNESS_HEADER, f"signature {w.signature}"]
    if w.universal_role:
        lines.append(f"universal-role {w.universal_role}")
    for k, level in enumerate(w.levels):
        lines.append(f"level {k} {len(level)}")
        lines.extend(_type_text(w.signature, k, bits) for bits in level)
    return "\n".join(lines) + "\n"


def _parse_type(sig: Signature, k: int, text: str) -> int:
    atoms = []
    for rel, args in _ATOM.findall(text):
        terms: list[int | str] = []
        for name in (a.strip() for a in args.split(",")):
            if name in sig.constants:
                terms.append(name)
            elif re.fullmatch(r"x\d+", name) and 1 <= int(name[1:]) <= k:
                terms.append(int(name[1:]) - 1)
            else:
                raise SignatureError(f"unknown term {name!r} in a {k}-type")
        atoms.append((rel, terms))
    return AtomicType.from_atoms(sig, k, atoms).bits


def parse_witness(text: str) -> TypeFamily:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != WITNESS_HEADER:
        raise ValueError(f"missing header {WITNESS_HEADER!r}")
    sig: Signature | None = None
    role = None
    levels: list[list[int]] = []
    for line in lines[1:]:
        if line.startswith("signature "):
            sig = Signature.parse(line[len("signature ") :])
        elif line.startswith("universal-role "):
            role = line.split()[1]
        elif line.startswith("level "):
            levels.append([])
        elif line.startswith("{"):
            if sig is None or not levels:
                raise ValueError("type line before signature or level header")
            levels[-1].append(_parse_type(sig, len(levels) - 1, line))
        else:
            raise ValueError(f"unrecognised witness line {line!r}")
    if sig is None:
        raise ValueError("witness document has no signature line")
    return TypeFamily(sig, tuple(tuple(sorted(level)) for level in levels), role)


def write_witness(w: TypeFamily, path: str | Path) -> None:
    Path(path).write_text(format_witness(w), encoding="utf-8")


def read_witness(path: str | Path) -> TypeFamily:
    return parse_witness(Path(path).read_text(encoding="utf-8"))
