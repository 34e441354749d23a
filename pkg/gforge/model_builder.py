"""
Finite models from satisfiability witnesses.

Three constructions share one witness:

- independent sampling: every increasing k-tuple draws a k-type uniformly
  from the witness level and keeps its boundary only when the draw agrees
  with what the smaller sub-tuples already fixed;
- Markovian sampling: the draw is uniform over the witness types that agree
  with the sub-tuples, and a tuple with no such type stays all-negative;
- deterministic hashing: elements are (layer, index) pairs and the type of a
  subset is chosen by a sum-of-indices hash modulo one prime per layer set,
  which makes extension demands solvable by the Chinese remainder theorem.

Sampling draws come from numpy generators keyed by (seed, level); the draw
of a tuple sits at its colexicographic rank, so a structure on n elements is
the restriction of the structure on any larger n built from the same seed.
Threshold arithmetic runs in gmpy2 rationals and 128-bit floats.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import chain, combinations
from typing import Iterable, Sequence

import gmpy2
import numpy as np

from gforge.normal_form import NormalFormSentence
from gforge.structure_lab import (
    FiniteStructure,
    check_extension,
    check_guarded,
    model_check,
)
from gforge.type_algebra import (
    AtomicType,
    atom_space,
    count_types,
    iter_bits,
    lift_bits,
    lift_table,
    reduct_bits,
)
from gforge.witness_engine import TypeFamily

logger = logging.getLogger(__name__)

MATERIALIZE_CAP = int(float(os.environ.get("GFORGE_MATERIALIZE_CAP", "1000000")))
WORKERS = int(os.environ.get("GFORGE_WORKERS", "4"))
TUPLE_BUDGET = int(float(os.environ.get("GFORGE_TUPLE_BUDGET", "5000000")))
PRECISION = 128

ALGORITHMS = ("independent", "markov", "deterministic")
SAMPLERS = ("independent", "markov")


class MaterializationRefused(RuntimeError):
    """The lazy structure has more subset evaluations than the cap allows."""


class SearchExhausted(RuntimeError):
    """auto-n ran past its tuple budget without a successful build."""


# --- randomness -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomSource:
    """A seed plus a spawn path; each path names an independent numpy stream."""

    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def child(self, *key: int) -> RandomSource:
        return RandomSource(self.seed, self.path + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.path))

    def uniform(self, count: int) -> np.ndarray:
        """``count`` doubles in [0, 1); a shorter request is a prefix of a longer one."""
        return self.generator().random(count)


def _source(seed: int | RandomSource) -> RandomSource:
    return seed if isinstance(seed, RandomSource) else RandomSource(int(seed))


# --- tuple bookkeeping ----------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _binomials(n: int, k: int) -> np.ndarray:
    table = np.zeros((max(n, 1), k + 2), dtype=np.int64)
    for c in range(n):
        for j in range(k + 2):
            table[c, j] = math.comb(c, j)
    return table


def _colex_rank(rows: np.ndarray, binom: np.ndarray) -> np.ndarray:
    rank = np.zeros(rows.shape[0], dtype=np.int64)
    for i in range(rows.shape[1]):
        rank += binom[rows[:, i], i + 1]
    return rank


@lru_cache(maxsize=16)
def _combinations(n: int, k: int) -> np.ndarray:
    """All increasing k-tuples over range(n), row r holding the tuple of colex rank r."""
    total = math.comb(n, k)
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    flat = np.fromiter(chain.from_iterable(combinations(range(n), k)), dtype=np.int64, count=total * k)
    rows = flat.reshape(total, k)
    out = np.empty_like(rows)
    out[_colex_rank(rows, _binomials(n, k))] = rows
    out.setflags(write=False)
    return out


def _dtype(width_bits: int):
    return np.int64 if width_bits <= 62 else object


def _lift_array(src: np.ndarray, table: Sequence[int], mask: int, dtype) -> np.ndarray:
    src = src.astype(dtype) if dtype is object else src
    out = np.zeros(src.shape, dtype=dtype)
    for bit in iter_bits(mask):
        out |= ((src >> bit) & 1) << table[bit]
    return out


# --- sampling (independent and Markovian) ---------------------------------------------------------


@dataclass(frozen=True)
class LevelDraw:
    """Recorded choices for every increasing k-tuple, indexed by colex rank.

    ``drawn`` is the index into the witness level (-1 when the compatible set
    was empty) and ``assigned`` tells whether the draw's boundary was kept.
    """

    arity: int
    tuples: np.ndarray
    drawn: np.ndarray
    assigned: np.ndarray
    boundaries: np.ndarray


def _interiors(
    w: TypeFamily,
    k: int,
    rows: np.ndarray,
    draws: list[LevelDraw],
    binom: np.ndarray,
    dtype,
) -> np.ndarray:
    sig = w.signature
    interior = np.full(rows.shape[0], lift_bits(sig, 0, k, int(draws[0].boundaries[0]), ()), dtype=dtype)
    for m in range(1, k):
        mask = atom_space(sig, m).boundary_mask
        for positions in combinations(range(k), m):
            ranks = _colex_rank(rows[:, positions], binom)
            src = draws[m].boundaries[ranks]
            interior |= _lift_array(src, lift_table(sig, m, k, positions), mask, dtype)
    return interior


def _draw_independent(level: np.ndarray, inner: int, interior: np.ndarray, u: np.ndarray):
    drawn = np.minimum((u * len(level)).astype(np.int64), len(level) - 1)
    candidates = level[drawn]
    assigned = (candidates & inner) == interior
    return drawn, assigned


def _draw_markov(level: np.ndarray, inner: int, interior: np.ndarray, u: np.ndarray):
    inners = level & inner
    order = np.argsort(inners, kind="stable")
    groups, starts, counts = np.unique(inners[order], return_index=True, return_counts=True)
    pos = np.searchsorted(groups, interior)
    clipped = np.minimum(pos, len(groups) - 1)
    found = (pos < len(groups)) & (groups[clipped] == interior)
    offset = np.minimum((u * counts[clipped]).astype(np.int64), counts[clipped] - 1)
    drawn = np.where(found, order[starts[clipped] + offset], -1)
    return drawn, found.astype(bool)


def sample_levels(w: TypeFamily, n: int, seed: int | RandomSource, algo: str = "independent") -> list[LevelDraw]:
    """Per-level draws behind both samplers; level 0 always carries the 0-type."""
    if algo not in SAMPLERS:
        raise ValueError(f"unknown sampling algorithm {algo!r}")
    if n < 0:
        raise ValueError(f"domain size must be non-negative, got {n}")
    source = _source(seed)
    sig = w.signature
    zero = np.array(w.levels[0], dtype=_dtype(atom_space(sig, 0).size))
    draws = [LevelDraw(0, np.zeros((1, 0), dtype=np.int64), np.zeros(1, dtype=np.int64), np.ones(1, dtype=bool), zero)]
    binom = _binomials(n, w.width)
    draw = _draw_independent if algo == "independent" else _draw_markov
    for k in range(1, w.width + 1):
        space = atom_space(sig, k)
        dtype = _dtype(space.size)
        rows = _combinations(n, k)
        if rows.shape[0] == 0:
            empty = np.zeros(0, dtype=dtype)
            draws.append(LevelDraw(k, rows, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool), empty))
            continue
        level = np.array(w.levels[k], dtype=dtype)
        inner = space.full_mask ^ space.boundary_mask
        interior = _interiors(w, k, rows, draws, binom, dtype)
        u = source.child(k).uniform(rows.shape[0])
        drawn, assigned = draw(level, inner, interior, u)
        picked = level[np.maximum(drawn, 0)] & space.boundary_mask
        boundaries = np.where(assigned, picked, 0).astype(dtype)
        draws.append(LevelDraw(k, rows, drawn, assigned, boundaries))
        logger.debug("level %s: %s tuples, %s assigned", k, rows.shape[0], int(assigned.sum()))
    return draws


def _assemble(w: TypeFamily, n: int, draws: list[LevelDraw]) -> FiniteStructure:
    sig = w.signature
    facts = []
    for draw in draws:
        k = draw.arity
        space = atom_space(sig, k)
        for r in np.flatnonzero(draw.boundaries != 0):
            row = draw.tuples[r]
            for bit in iter_bits(int(draw.boundaries[r])):
                rel, args = space.decode(bit)
                facts.append((rel, tuple(int(row[a]) if a < k else sig.constants[a - k] for a in args)))
    return FiniteStructure.from_facts(sig, n, facts)


def build_independent(w: TypeFamily, n: int, seed: int | RandomSource) -> FiniteStructure:
    return _assemble(w, n, sample_levels(w, n, seed, "independent"))


def build_markov(w: TypeFamily, n: int, seed: int | RandomSource) -> FiniteStructure:
    return _assemble(w, n, sample_levels(w, n, seed, "markov"))


def build_sampled(w: TypeFamily, n: int, seed: int | RandomSource, algo: str) -> FiniteStructure:
    if algo == "independent":
        return build_independent(w, n, seed)
    if algo == "markov":
        return build_markov(w, n, seed)
    raise ValueError(f"{algo!r} is not a sampling algorithm")


def footnote_model(w: TypeFamily) -> FiniteStructure:
    """Constant-size model for witnesses with fewer than three types.

    Such a witness has width at most one: the constants alone (or a single
    element when there are none) realize it.
    """
    if w.size >= 3:
        raise ValueError("the constant-size construction needs a witness with fewer than three types")
    n = 1 if w.width >= 1 or not w.signature.constants else 0
    return build_markov(w, n, RandomSource(0))


# --- thresholds -----------------------------------------------------------------------------------


def _boundary_counts(w: TypeFamily) -> list[int]:
    counts = []
    for k in range(1, w.width + 1):
        mask = atom_space(w.signature, k).boundary_mask
        counts.append(len({bits & mask for bits in w.levels[k]}))
    return counts


def epsilon(t: int):
    """e^-1 - ((t-1)/t)^t, positive and decreasing for t >= 2."""
    if t < 2:
        raise ValueError(f"epsilon is defined for t >= 2, got {t}")
    with gmpy2.local_context(gmpy2.get_context(), precision=PRECISION):
        return gmpy2.exp(-1) - gmpy2.mpfr(gmpy2.mpq(t - 1, t)) ** t


@dataclass(frozen=True)
class Thresholds:
    total: int
    width: int
    delta: gmpy2.mpq
    delta1: gmpy2.mpq
    k_value: gmpy2.mpfr
    k1_value: gmpy2.mpfr
    n_theory: int
    n_delta1: int
    independent_envelope: int
    markov_envelope: gmpy2.mpfr
    pair_ratio: gmpy2.mpq
    short_circuit: str | None = None

    @property
    def pair_ratio_holds(self) -> bool:
        return self.delta1 >= self.pair_ratio

    def records(self) -> list[str]:
        lines = [
            f"types={self.total}",
            f"width={self.width}",
            f"delta={self.delta}",
            f"delta1={self.delta1}",
            f"K={float(self.k_value):.6g}",
            f"K1={float(self.k1_value):.6g}",
            f"n_theory={self.n_theory}",
            f"n_delta1={self.n_delta1}",
            f"independent_envelope={self.independent_envelope}  # constant-free lower envelope",
            f"markov_envelope={float(self.markov_envelope):.6g}  # constant-free lower envelope",
            f"pair_ratio={self.pair_ratio}",
            f"delta1_above_pair_ratio={'true' if self.pair_ratio_holds else 'false'}",
        ]
        if self.short_circuit:
            lines.append(f"short_circuit={self.short_circuit}")
        return lines


def _k_ln_k(k_value) -> int:
    if k_value <= 1:
        return 1
    return max(1, int(gmpy2.ceil(k_value * gmpy2.log(k_value))))


def thresholds(w: TypeFamily, algo: str = "independent") -> Thresholds:
    """Sample-size formulas for a witness; ``algo`` picks the delta that drives n_theory."""
    if algo not in SAMPLERS:
        raise ValueError(f"thresholds are defined for the sampling algorithms, not {algo!r}")
    total, wd, sig = w.size, w.width, w.signature
    counts = _boundary_counts(w)
    with gmpy2.local_context(gmpy2.get_context(), precision=PRECISION):
        delta = gmpy2.mpq(1, total ** (2 ** (wd - 1))) if wd >= 1 else gmpy2.mpq(1)
        delta1 = gmpy2.mpq(1, math.prod(c ** math.comb(wd - 1, k - 1) for k, c in enumerate(counts, start=1)))
        log_total = gmpy2.log(gmpy2.mpfr(total))
        k_value = 8 / gmpy2.mpfr(delta) * (wd + log_total)
        k1_value = 8 / gmpy2.mpfr(delta1) * (wd + log_total)
        top, below = count_types(sig, wd), count_types(sig, max(wd - 1, 0))
        markov_envelope = gmpy2.mpfr(gmpy2.mpq(top, below)) * gmpy2.log(gmpy2.mpfr(top)) ** 2
        n_theory, n_delta1 = _k_ln_k(k_value), _k_ln_k(k1_value)
    short = None
    if total < 3:
        short = "constant-size model on the constants (plus one element when needed)"
        n_theory = n_delta1 = 1 if wd >= 1 or not sig.constants else 0
    if algo == "markov":
        n_theory, n_delta1 = n_delta1, n_theory
    return Thresholds(
        total=total,
        width=wd,
        delta=delta,
        delta1=delta1,
        k_value=k_value,
        k1_value=k1_value,
        n_theory=n_theory,
        n_delta1=n_delta1,
        independent_envelope=total ** (2**wd),
        markov_envelope=markov_envelope,
        pair_ratio=gmpy2.mpq(below, top),
        short_circuit=short,
    )


def delta_gap_log2(w: int) -> tuple[int, float]:
    """log2 of the level-product and of the power bound for a single w-ary relation.

    With |tau_k| = 2**(k**w) the product over k of |tau_k|**C(w-1, k-1) has
    log2 equal to sum C(w-1, i) * (i+1)**w; the power |tau_w|**(2**(w/10) / (w+1)**2)
    has log2 w**w * 2**(w/10) / (w+1)**2. The first is the larger for every w.
    """
    if w < 1:
        raise ValueError("arity must be positive")
    lhs = sum(math.comb(w - 1, i) * (i + 1) ** w for i in range(w))
    rhs = w**w * 2 ** (w / 10) / (w + 1) ** 2
    return lhs, rhs


# --- primes ---------------------------------------------------------------------------------------


@dataclass(frozen=True)
class PrimeLadder:
    """One prime per nonempty layer set; layer set with code i uses primes[i - 1]."""

    primes: tuple[int, ...]
    floor: int

    @cached_property
    def modulus(self) -> int:
        return math.prod(self.primes)

    @property
    def width(self) -> int:
        return (len(self.primes) + 1).bit_length() - 1

    def prime_for(self, layers: Iterable[int]) -> int:
        return self.primes[sum(1 << a for a in set(layers)) - 1]

    def measured_constant(self, top: int):
        """wd * M / top ** (2 ** wd), the factor by which M beats the a-priori bound."""
        return gmpy2.mpq(self.width * self.modulus, top ** (2**self.width))


def find_primes(sig_or_width, floor: int | None = None) -> PrimeLadder:
    """2**wd - 1 increasing primes, the smallest at least ``floor``.

    ``floor`` defaults to the number of wd-types of the signature. The first
    argument is a signature, or a bare width when ``floor`` is given.
    """
    if isinstance(sig_or_width, int):
        if floor is None:
            raise ValueError("a bare width needs an explicit floor")
        wd = sig_or_width
    else:
        wd = sig_or_width.width
        if floor is None:
            floor = count_types(sig_or_width, wd)
    primes = []
    p = gmpy2.next_prime(max(floor, 2) - 1)
    for _ in range(2**wd - 1):
        primes.append(int(p))
        p = gmpy2.next_prime(p)
    logger.debug("prime ladder from %s: %s", floor, primes)
    return PrimeLadder(tuple(primes), max(floor, 2))


def witness_ladder(w: TypeFamily) -> PrimeLadder:
    """Primes only as large as the biggest witness level, keeping M small."""
    return find_primes(w.width, max(len(level) for level in w.levels))


# --- deterministic construction -------------------------------------------------------------------

LazyElement = tuple[int, int]


class LazyStructure:
    """Elements (layer, index) with types computed on demand from the hash."""

    def __init__(self, witness: TypeFamily, ladder: PrimeLadder, cache_size: int = 65536):
        if ladder.width != witness.width:
            raise ValueError(f"ladder for width {ladder.width} used with a width-{witness.width} witness")
        smallest = ladder.primes[0] if ladder.primes else 0
        if any(len(level) > smallest for level in witness.levels[1:]):
            raise ValueError("witness levels larger than the smallest prime")
        self.witness = witness
        self.ladder = ladder
        self.signature = witness.signature
        self.width = witness.width
        self.modulus = ladder.modulus
        self._boundary = lru_cache(maxsize=cache_size)(self._compute_boundary)

    @property
    def size(self) -> int:
        return self.width * self.modulus

    def element_id(self, element: LazyElement) -> int:
        alpha, beta = element
        return alpha * self.modulus + beta

    def _check(self, elements: Sequence[LazyElement]) -> tuple[LazyElement, ...]:
        out = []
        for alpha, beta in elements:
            if not (0 <= alpha < self.width and 0 <= beta < self.modulus):
                raise ValueError(f"element ({alpha},{beta}) outside [0,{self.width - 1}] x [0,{self.modulus - 1}]")
            out.append((int(alpha), int(beta)))
        if len(set(out)) != len(out):
            raise ValueError(f"tuple {out} repeats an element")
        return tuple(out)

    def hash_index(self, layers: Sequence[int], betas: Sequence[int]) -> int:
        m = len(layers)
        return (sum(betas) % self.ladder.prime_for(layers)) % len(self.witness.levels[m])

    def _compute_boundary(self, layers: tuple[int, ...], betas: tuple[int, ...]) -> int:
        """Boundary bits of a subset listed in increasing layer order."""
        m = len(layers)
        if len(set(layers)) < m:
            return 0
        sig = self.signature
        interior = lift_bits(sig, 0, m, self.witness.levels[0][0], ())
        for size in range(1, m):
            for positions in combinations(range(m), size):
                sub = self._boundary(tuple(layers[p] for p in positions), tuple(betas[p] for p in positions))
                interior |= lift_bits(sig, size, m, sub, positions)
        space = atom_space(sig, m)
        candidate = self.witness.levels[m][self.hash_index(layers, betas)]
        if candidate & ~space.boundary_mask & space.full_mask == interior:
            return candidate & space.boundary_mask
        return 0

    def type_of(self, elements: Sequence[LazyElement]) -> AtomicType:
        elements = self._check(elements)
        k = len(elements)
        if k > self.width:
            raise ValueError(f"tuples longer than the width {self.width} have no witness type")
        sig = self.signature
        bits = lift_bits(sig, 0, k, self.witness.levels[0][0], ())
        for size in range(1, k + 1):
            for positions in combinations(range(k), size):
                ordered = sorted(positions, key=lambda p: elements[p])
                layers = tuple(elements[p][0] for p in ordered)
                if len(set(layers)) < size:
                    continue
                sub = self._boundary(layers, tuple(elements[p][1] for p in ordered))
                bits |= lift_bits(sig, size, k, sub, ordered)
        return AtomicType(bits, k, sig)

    def evaluations(self) -> int:
        return sum(math.comb(self.width, m) * self.modulus**m for m in range(1, self.width + 1))

    def materialize(self, cap: int | None = None) -> FiniteStructure:
        """Every element and fact; element (a, b) becomes a * M + b."""
        cap = MATERIALIZE_CAP if cap is None else cap
        needed = self.evaluations()
        if needed > cap:
            logger.warning("materialization needs %s evaluations, cap is %s", needed, cap)
            raise MaterializationRefused(
                f"{needed} boundary evaluations exceed the cap {cap}; query the lazy structure instead"
            )
        sig, M = self.signature, self.modulus
        betas = np.arange(M, dtype=np.int64)
        boundaries: dict[tuple[int, ...], np.ndarray] = {}
        facts = []
        zero = self.witness.levels[0][0]
        for bit in iter_bits(zero):
            rel, args = atom_space(sig, 0).decode(bit)
            facts.append((rel, tuple(sig.constants[a] for a in args)))
        for m in range(1, self.width + 1):
            space = atom_space(sig, m)
            dtype = _dtype(space.size)
            level = np.array(self.witness.levels[m], dtype=dtype)
            inner = space.full_mask ^ space.boundary_mask
            shape = (M,) * m
            for layers in combinations(range(self.width), m):
                sums = np.zeros(shape, dtype=np.int64)
                for axis in range(m):
                    sums = sums + betas.reshape([M if a == axis else 1 for a in range(m)])
                hashed = (sums % self.ladder.prime_for(layers)) % len(level)
                interior = np.full(shape, lift_bits(sig, 0, m, zero, ()), dtype=dtype)
                for size in range(1, m):
                    mask = atom_space(sig, size).boundary_mask
                    for positions in combinations(range(m), size):
                        src = boundaries[tuple(layers[p] for p in positions)]
                        lifted = _lift_array(src, lift_table(sig, size, m, positions), mask, dtype)
                        missing = [a for a in range(m) if a not in positions]
                        interior |= np.expand_dims(lifted, tuple(missing)) if missing else lifted
                candidates = level[hashed]
                boundary = np.where((candidates & inner) == interior, candidates & space.boundary_mask, 0).astype(dtype)
                boundaries[layers] = boundary
                for index in zip(*np.nonzero(boundary != 0)):
                    ids = [layers[j] * M + int(index[j]) for j in range(m)]
                    for bit in iter_bits(int(boundary[index])):
                        rel, args = space.decode(bit)
                        facts.append((rel, tuple(ids[a] if a < m else sig.constants[a - m] for a in args)))
        logger.info("materialized %s elements, %s facts", self.size, len(facts))
        return FiniteStructure.from_facts(sig, self.size, facts)


def parse_lazy_tuple(text: str) -> list[LazyElement]:
    """"0:3,1:5" -> [(0, 3), (1, 5)]; commas or blanks separate elements."""
    out = []
    for item in text.replace(",", " ").split():
        alpha, sep, beta = item.partition(":")
        if not sep:
            raise ValueError(f"element {item!r} is not written layer:index")
        try:
            out.append((int(alpha), int(beta)))
        except ValueError as e:
            raise ValueError(f"element {item!r} is not written layer:index") from e
    return out


def format_lazy_tuple(elements: Sequence[LazyElement]) -> str:
    return ",".join(f"{a}:{b}" for a, b in elements)


def build_deterministic(w_dense: TypeFamily, ladder: PrimeLadder | None = None) -> LazyStructure:
    return LazyStructure(w_dense, ladder or witness_ladder(w_dense))


def _ordered_subsets(layers: Sequence[int], new_layer: int) -> Iterable[tuple[tuple[int, ...], tuple[int, ...]]]:
    """(old positions T, positions of T + new in layer order) for every T."""
    k = len(layers)
    for size in range(k + 1):
        for subset in combinations(range(k), size):
            ordered = sorted(subset + (k,), key=lambda p: new_layer if p == k else layers[p])
            yield subset, tuple(ordered)


def solve_extension(
    lazy: LazyStructure,
    elements: Sequence[LazyElement],
    new_layer: int,
    tau2: AtomicType,
) -> int:
    """Index beta such that (new_layer, beta) extends ``elements`` to type ``tau2``.

    One congruence per subset containing the new element, each modulo its own
    prime; the answer is their CRT combination.
    """
    elements = lazy._check(elements)
    k = len(elements)
    layers = [a for a, _ in elements]
    if len(set(layers)) < k:
        raise ValueError("the tuple repeats a layer and cannot be extended")
    if new_layer in layers or not 0 <= new_layer < lazy.width:
        raise ValueError(f"layer {new_layer} is not a fresh layer for {list(elements)}")
    if tau2.arity != k + 1 or not lazy.witness.contains(k + 1, tau2.bits):
        raise ValueError(f"{tau2} is not a witness {k + 1}-type")
    residues, moduli = [], []
    for subset, ordered in _ordered_subsets(layers, new_layer):
        m = len(ordered)
        h = lazy.witness.index_of(m, reduct_bits(lazy.signature, k + 1, tau2.bits, ordered))
        p = lazy.ladder.prime_for([layers[r] for r in subset] + [new_layer])
        residues.append((h - sum(elements[r][1] for r in subset)) % p)
        moduli.append(p)
    product = math.prod(moduli)
    beta = 0
    for a, p in zip(residues, moduli):
        rest = product // p
        beta += a * rest * int(gmpy2.invert(rest, p))
    return beta % product


def extension_residuals(
    lazy: LazyStructure,
    elements: Sequence[LazyElement],
    new: LazyElement,
    tau2: AtomicType,
) -> list[tuple[tuple[int, ...], int, int]]:
    """Subsets through ``new`` whose hash misses tau2's reduct: (positions, wanted, got)."""
    k = len(elements)
    layers = [a for a, _ in elements]
    misses = []
    for subset, ordered in _ordered_subsets(layers, new[0]):
        full = list(elements) + [new]
        wanted = lazy.witness.index_of(len(ordered), reduct_bits(lazy.signature, k + 1, tau2.bits, ordered))
        got = lazy.hash_index([full[p][0] for p in ordered], [full[p][1] for p in ordered])
        if wanted != got:
            misses.append((ordered, wanted, got))
    return misses


# --- Monte Carlo harness --------------------------------------------------------------------------


@dataclass(frozen=True)
class SuccessEstimate:
    n: int
    trials: int
    successes: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    def row(self) -> dict[str, object]:
        return {"n": self.n, "trials": self.trials, "successes": self.successes, "rate": f"{self.rate:.4f}"}


def passes(b: FiniteStructure, w: TypeFamily, nf: NormalFormSentence) -> bool:
    if check_guarded(b, w):
        return False
    if check_extension(b, w, first_only=True):
        return False
    return model_check(b, nf.to_sentence())


def estimate_success(
    w: TypeFamily,
    nf: NormalFormSentence,
    n: int,
    trials: int,
    seed: int,
    algo: str = "independent",
    workers: int | None = None,
) -> SuccessEstimate:
    """Fraction of child-seeded builds that pass every check; trial j uses child(j)."""
    if trials < 1:
        raise ValueError("at least one trial is needed")
    root = RandomSource(seed)

    def trial(j: int) -> bool:
        return passes(build_sampled(w, n, root.child(j), algo), w, nf)

    workers = WORKERS if workers is None else workers
    if workers > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(trial, range(trials)))
    else:
        outcomes = [trial(j) for j in range(trials)]
    estimate = SuccessEstimate(n, trials, sum(outcomes))
    logger.debug("n=%s %s: %s/%s", n, algo, estimate.successes, trials)
    return estimate


def sweep_success(
    w: TypeFamily,
    nf: NormalFormSentence,
    sizes: Iterable[int],
    trials: int,
    seed: int,
    algo: str = "independent",
    workers: int | None = None,
) -> list[SuccessEstimate]:
    return [estimate_success(w, nf, n, trials, seed, algo, workers) for n in sizes]


@dataclass
class AutoN:
    n: int
    seed: RandomSource
    structure: FiniteStructure
    attempts: list[tuple[int, int]] = field(default_factory=list)


def auto_n(
    w: TypeFamily,
    nf: NormalFormSentence,
    algo: str = "independent",
    seed: int = 0,
    seeds: int = 10,
    budget: int | None = None,
) -> AutoN:
    """Doubling search for the smallest n at which one of ``seeds`` child seeds succeeds.

    The search starts at an eighth of the proven threshold, or at wd + 1 when
    that start would already exceed the tuple budget.
    """
    budget = TUPLE_BUDGET if budget is None else budget
    wd = w.width
    if w.size < 3:
        b = footnote_model(w)
        return AutoN(b.size, RandomSource(0), b, [(b.size, 1)])
    start = max(wd + 1, thresholds(w, algo).n_theory // 8)
    if math.comb(start, wd) > budget:
        logger.warning("threshold start %s exceeds the tuple budget; starting at %s", start, wd + 1)
        start = wd + 1
    root = RandomSource(seed)
    attempts: list[tuple[int, int]] = []
    n = start
    while math.comb(n, wd) <= budget:
        for s in range(seeds):
            b = build_sampled(w, n, root.child(s), algo)
            if passes(b, w, nf):
                attempts.append((n, s))
                logger.info("auto-n: n=%s succeeded with child seed %s", n, s)
                return AutoN(n, root.child(s), b, attempts)
        attempts.append((n, -1))
        logger.debug("auto-n: n=%s failed for %s seeds", n, seeds)
        n *= 2
    raise SearchExhausted(f"no successful build up to n={n // 2} within the tuple budget {budget}")


def domain_bounds(w: TypeFamily) -> list[str]:
    """key=value lines bounding the domain size of each construction."""
    lines = []
    for algo in SAMPLERS:
        t = thresholds(w, algo)
        lines.append(f"{algo}.n_theory={t.n_theory}")
    t = thresholds(w)
    lines.append(f"independent.envelope={t.independent_envelope}")
    lines.append(f"markov.envelope={float(t.markov_envelope):.6g}")
    if w.width >= 1:
        full = find_primes(w.signature)
        tight = witness_ladder(w)
        lines.append(f"deterministic.primes={','.join(map(str, full.primes))}")
        lines.append(f"deterministic.domain={w.width * full.modulus}")
        lines.append(f"deterministic.constant={float(full.measured_constant(count_types(w.signature, w.width))):.6g}")
        lines.append(f"deterministic.witness_primes={','.join(map(str, tight.primes))}")
        lines.append(f"deterministic.witness_domain={w.width * tight.modulus}")
    return lines
