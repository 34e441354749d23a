from __future__ import annotations

import math
from collections import Counter
from dataclasses import replace
from itertools import product

import gmpy2
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gforge.logic_syntax import Signature
from gforge.model_builder import (
    SAMPLERS,
    MaterializationRefused,
    RandomSource,
    auto_n,
    build_deterministic,
    build_independent,
    build_markov,
    build_sampled,
    delta_gap_log2,
    domain_bounds,
    epsilon,
    estimate_success,
    extension_residuals,
    find_primes,
    footnote_model,
    format_lazy_tuple,
    parse_lazy_tuple,
    passes,
    sample_levels,
    solve_extension,
    thresholds,
    witness_ladder,
)
from gforge.structure_lab import FiniteStructure
from gforge.type_algebra import atom_space, count_types, reduct_bits
from gforge.witness_engine import TypeFamily, densify, minimal_witness, realized_family


@pytest.fixture
def edge_out(normal_form):
    """Witness realized by P(0), Q(1), R(0,1): every P element needs an R-edge to a Q element."""
    _, nf = normal_form("edge-out")
    b = FiniteStructure.from_facts(nf.signature, 2, [("P", (0,)), ("Q", (1,)), ("R", (0, 1))])
    return realized_family(b), nf


@pytest.fixture
def lazy(edge_out):
    w, _ = edge_out
    return build_deterministic(densify(w))


def _induced(b: FiniteStructure, n: int) -> set:
    return {(rel, args) for rel, args in b.facts if all(a < n for a in args)}


def _stream(seed: int, k: int, count: int) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,))).random(count)


@st.composite
def realized_witnesses(draw, signature: Signature, max_size: int = 3):
    size = draw(st.integers(min_value=signature.width, max_value=max_size))
    facts = []
    for rel, arity in signature.relations:
        for args in product(range(size), repeat=arity):
            if draw(st.booleans()):
                facts.append((rel, args))
    return realized_family(FiniteStructure.from_facts(signature, size, facts))


@pytest.mark.parametrize("build", [build_independent, build_markov])
def test_sampling_is_deterministic_per_seed(build, edge_out):
    w, _ = edge_out
    assert build(w, 12, 3) == build(w, 12, 3)


@pytest.mark.parametrize("algo", SAMPLERS)
@pytest.mark.parametrize("seed", [0, 5])
def test_samplers_follow_the_seeded_stream(algo, seed, edge_out):
    w, _ = edge_out
    sig = w.signature
    assert w.levels == ((0,), (1, 4), (82, 137))
    n = 6
    b = build_sampled(w, n, seed, algo)
    ones, twos = w.levels[1], w.levels[2]
    one_type = [ones[int(u * len(ones))] for u in _stream(seed, 1, n)]
    assert [b.type_bits((i,)) for i in range(n)] == one_type
    boundary = atom_space(sig, 2).boundary_mask
    # pairs are drawn in colex order
    pairs = [(i, j) for j in range(n) for i in range(j)]
    for (i, j), u in zip(pairs, _stream(seed, 2, len(pairs))):
        fits = [
            t
            for t in twos
            if reduct_bits(sig, 2, t, (0,)) == one_type[i] and reduct_bits(sig, 2, t, (1,)) == one_type[j]
        ]
        if algo == "independent":
            pick = twos[int(u * len(twos))]
            expected = pick if pick in fits else None
        else:
            expected = fits[int(u * len(fits))] if fits else None
        bits = b.type_bits((i, j))
        if expected is None:
            assert bits & boundary == 0
        else:
            assert bits == expected


@pytest.mark.parametrize("build", [build_independent, build_markov])
@pytest.mark.parametrize("seed", [0, 1, 7])
def test_smaller_domain_is_a_restriction(build, seed, edge_out):
    w, _ = edge_out
    small, big = build(w, 7, seed), build(w, 12, seed)
    assert set(small.facts) == _induced(big, 7)


@pytest.mark.parametrize("algo", ["independent", "markov"])
@pytest.mark.parametrize("seed", range(5))
def test_draws_agree_with_the_structure(algo, seed, edge_out):
    w, _ = edge_out
    n = 9
    draws = sample_levels(w, n, seed, algo)
    b = build_markov(w, n, seed) if algo == "markov" else build_independent(w, n, seed)
    assert draws[0].assigned.all()
    for draw in draws[1:]:
        k = draw.arity
        space = atom_space(w.signature, k)
        inner = space.full_mask ^ space.boundary_mask
        level = w.levels[k]
        for r, row in enumerate(draw.tuples):
            bits = b.type_bits(tuple(int(e) for e in row))
            assert bits & space.boundary_mask == int(draw.boundaries[r])
            if algo == "markov":
                assert bool(draw.assigned[r]) == (int(draw.drawn[r]) != -1)
            else:
                assert int(draw.drawn[r]) >= 0
                assert bool(draw.assigned[r]) == (level[draw.drawn[r]] & inner == bits & inner)
            if draw.assigned[r]:
                assert int(draw.boundaries[r]) == level[draw.drawn[r]] & space.boundary_mask
                assert bits == level[draw.drawn[r]]


def test_empty_domain(edge_out):
    w, _ = edge_out
    assert build_markov(w, 0, 1).size == 0
    with pytest.raises(ValueError):
        sample_levels(w, -1, 1)
    with pytest.raises(ValueError):
        sample_levels(w, 3, 1, "deterministic")


def test_success_rate_grows_with_n(edge_out):
    w, nf = edge_out
    assert estimate_success(w, nf, 1, 20, 0, "markov").rate == 0
    assert estimate_success(w, nf, 12, 20, 0, "markov").rate >= 0.9


def test_auto_n_finds_a_passing_structure(edge_out):
    w, nf = edge_out
    found = auto_n(w, nf, "markov", seed=0, budget=5000)
    assert found.n >= w.width + 1
    assert passes(found.structure, w, nf)
    assert found.attempts[-1][0] == found.n


def test_tiny_witness_short_circuits():
    w = TypeFamily(Signature((("P", 1),)), ((0,), (1,)))
    b = footnote_model(w)
    assert b.size == 1
    assert b.holds("P", (0,))
    t = thresholds(w)
    assert t.short_circuit is not None
    assert t.n_theory == 1


def test_thresholds_of_a_three_type_witness():
    w = TypeFamily(Signature((("R", 2),)), ((0,), (0,), (6,)))
    t = thresholds(w)
    assert t.delta == gmpy2.mpq(1, 9)
    assert t.delta1 == 1
    assert t.pair_ratio == gmpy2.mpq(1, 8)
    assert t.pair_ratio_holds
    assert t.independent_envelope == 3**4
    assert "delta1_above_pair_ratio=true" in t.records()


@settings(max_examples=20, deadline=None)
@given(
    st.one_of(
        realized_witnesses(Signature((("R", 2), ("P", 1)))),
        realized_witnesses(Signature((("T", 3), ("P", 1)))),
    )
)
def test_delta1_dominates_the_pair_ratio(w):
    t = thresholds(w)
    sig, wd = w.signature, w.width
    assert t.pair_ratio == gmpy2.mpq(count_types(sig, wd - 1), count_types(sig, wd))
    assert t.pair_ratio_holds


def test_markov_threshold_uses_the_level_product(edge_out):
    w, _ = edge_out
    independent, markov = thresholds(w, "independent"), thresholds(w, "markov")
    assert independent.delta1 == gmpy2.mpq(1, 4)
    assert markov.n_theory == independent.n_delta1
    assert markov.n_theory <= independent.n_theory
    with pytest.raises(ValueError):
        thresholds(w, "deterministic")


def test_epsilon():
    assert float(epsilon(2)) == pytest.approx(math.exp(-1) - 0.25)
    values = [float(epsilon(t)) for t in range(2, 65)]
    assert all(v > 0 for v in values)
    assert all(a > b for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        epsilon(1)


def test_delta_gap():
    lhs, rhs = delta_gap_log2(5)
    assert lhs == 8808
    assert lhs > rhs
    assert all(a > b for a, b in map(delta_gap_log2, range(1, 30)))


def test_prime_ladders():
    binary = find_primes(Signature((("R", 2),)))
    assert binary.primes == (17, 19, 23)
    assert binary.modulus == 7429
    assert binary.width == 2
    assert binary.prime_for([1, 0]) == 23
    assert find_primes(Signature((("P", 1),))).primes == (2,)
    with pytest.raises(ValueError):
        find_primes(2)


def test_witness_ladder_uses_the_largest_level(edge_out):
    w, _ = edge_out
    assert witness_ladder(w).primes == (2, 3, 5)
    lines = domain_bounds(w)
    assert "deterministic.primes=2,3,5" not in lines
    assert "deterministic.witness_primes=2,3,5" in lines
    assert "deterministic.witness_domain=60" in lines
    # the signature-level ladder is reported next to it
    assert "deterministic.primes=257,263,269" in lines
    assert f"deterministic.domain={2 * 257 * 263 * 269}" in lines


def test_deterministic_structure_passes(edge_out, lazy):
    w, nf = edge_out
    dense = lazy.witness
    assert lazy.size == 60
    b = lazy.materialize()
    assert b.size == 60
    assert passes(b, dense, replace(nf, signature=dense.signature))


def test_lazy_types_match_the_materialized_structure(lazy):
    b = lazy.materialize()
    M = lazy.modulus
    for pair in [((0, 0), (1, 0)), ((0, 4), (1, 17)), ((0, 29), (1, 29)), ((0, 3), (0, 8))]:
        ids = tuple(lazy.element_id(e) for e in pair)
        assert lazy.type_of(pair).bits == b.type_bits(ids)
    assert lazy.element_id((1, 0)) == M


def test_deterministic_hash_layout(lazy):
    M = lazy.modulus
    assert M == 30
    view = lazy.materialize().relation_view()
    # layer 0 hashes mod 2, layer 1 mod 3, cross-layer pairs mod 5
    p_elements = {b for b in range(M) if b % 2 == 0} | {M + b for b in range(M) if b % 3 != 1}
    assert {args[0] for args in view["P"]} == p_elements
    assert {args[0] for args in view["Q"]} == set(range(2 * M)) - p_elements
    forward = {
        (b0, M + b1)
        for b0, b1 in product(range(M), repeat=2)
        if (b0 + b1) % 5 % 2 == 1 and b0 % 2 == 0 and b1 % 3 == 1
    }
    backward = {
        (M + b1, b0)
        for b0, b1 in product(range(M), repeat=2)
        if (b0 + b1) % 5 % 2 == 0 and b0 % 2 == 1 and b1 % 3 != 1
    }
    assert set(view["R"]) == forward | backward


def test_materialization_is_capped(lazy):
    with pytest.raises(MaterializationRefused):
        lazy.materialize(cap=10)


def test_extension_of_the_empty_tuple(lazy):
    for index, tau in enumerate(lazy.witness.types(1)):
        assert solve_extension(lazy, [], 0, tau) == index
        assert lazy.type_of([(0, index)]) == tau


def test_extension_matches_exhaustive_scan(lazy):
    sig = lazy.signature
    for beta0 in range(lazy.modulus):
        e = (0, beta0)
        one = lazy.type_of([e]).bits
        for tau2 in lazy.witness.types(2):
            if reduct_bits(sig, 2, tau2.bits, (0,)) != one:
                continue
            beta = solve_extension(lazy, [e], 1, tau2)
            assert lazy.type_of([e, (1, beta)]) == tau2
            assert extension_residuals(lazy, [e], (1, beta), tau2) == []
            first = next(
                b for b in range(lazy.modulus) if not extension_residuals(lazy, [e], (1, b), tau2)
            )
            # the CRT answer is the least solution of the exact congruences
            assert first <= beta < lazy.ladder.prime_for([1]) * lazy.ladder.prime_for([0, 1])


def test_extension_rejects_bad_requests(lazy):
    tau2 = lazy.witness.types(2)[0]
    with pytest.raises(ValueError):
        solve_extension(lazy, [(0, 1)], 0, tau2)
    with pytest.raises(ValueError):
        solve_extension(lazy, [(0, 1)], 1, lazy.witness.types(1)[0])
    with pytest.raises(ValueError):
        lazy.type_of([(0, 1), (0, 1)])
    with pytest.raises(ValueError):
        lazy.type_of([(2, 0)])


def test_lazy_tuple_text():
    assert parse_lazy_tuple("0:3,1:5") == [(0, 3), (1, 5)]
    assert parse_lazy_tuple(" 0:3  1:5 ") == [(0, 3), (1, 5)]
    assert format_lazy_tuple([(0, 3), (1, 5)]) == "0:3,1:5"
    for bad in ["03", "a:b", "0:"]:
        with pytest.raises(ValueError):
            parse_lazy_tuple(bad)


@pytest.mark.slow
def test_incremental_extensions_at_width_three(normal_form):
    _, nf = normal_form("ternary-exists")
    lazy = build_deterministic(densify(minimal_witness(nf)))
    sig, width = lazy.signature, lazy.width
    rng = np.random.default_rng(0)
    elements: list = []
    for _ in range(1000):
        if len(elements) == width:
            elements = []
        k = len(elements)
        current = lazy.type_of(elements).bits
        options = [t for t in lazy.witness.types(k + 1) if reduct_bits(sig, k + 1, t.bits, range(k)) == current]
        tau = options[rng.integers(len(options))]
        used = {a for a, _ in elements}
        layer = int(rng.choice([a for a in range(width) if a not in used]))
        beta = solve_extension(lazy, elements, layer, tau)
        assert extension_residuals(lazy, elements, (layer, beta), tau) == []
        extended = elements + [(layer, beta)]
        # type_of lists the tuple as given; tau names the new element last
        assert lazy.type_of(extended).bits == tau.bits
        elements = extended


@pytest.mark.slow
def test_markov_succeeds_at_the_proven_size(edge_out):
    w, nf = edge_out
    n = thresholds(w, "markov").n_theory
    assert estimate_success(w, nf, n, 20, 0, "markov").rate >= 0.9


@pytest.mark.slow
@pytest.mark.parametrize("algo", SAMPLERS)
def test_fresh_element_reaches_each_pair_type(algo, edge_out):
    w, _ = edge_out
    sig = w.signature
    t = thresholds(w, algo)
    bound = float(t.delta if algo == "independent" else t.delta1)
    root = RandomSource(11)
    given_one: Counter = Counter()
    hits: Counter = Counter()
    for j in range(10_000):
        b = build_sampled(w, 2, root.child(j), algo)
        one = b.type_bits((0,))
        given_one[one] += 1
        hits[(one, b.type_bits((0, 1)))] += 1
    for tau2 in w.levels[2]:
        tau1 = reduct_bits(sig, 2, tau2, (0,))
        trials = given_one[tau1]
        p = hits[(tau1, tau2)] / trials
        assert p >= bound - 3 * math.sqrt(p * (1 - p) / trials)
