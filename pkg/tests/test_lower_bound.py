from __future__ import annotations

import pytest

from gforge.logic_syntax import FragmentTag, classify, length
from gforge.lower_bound import (
    PermutationPack,
    apply_permutation,
    compose,
    decompose_perm,
    emit_phi_n,
    inverse,
    power,
    recompose,
    standard_model,
    verify_lower_bound,
)
from gforge.model_builder import MaterializationRefused
from gforge.structure_lab import FiniteStructure, merge_elements


def test_permutation_conventions():
    pack = PermutationPack(3)
    assert pack.cyc == (1, 2, 0)
    assert apply_permutation(pack.cyc, "abc") == ("c", "a", "b")
    assert compose(pack.cyc, inverse(pack.cyc)) == pack.identity
    assert power(pack.cyc, 3) == pack.identity
    assert power(pack.cyc, -1) == inverse(pack.cyc)
    assert apply_permutation(compose(pack.swp, pack.cyc), "abc") == apply_permutation(
        pack.swp, apply_permutation(pack.cyc, "abc")
    )


@pytest.mark.parametrize("n", [3, 4, 5])
def test_generators(n):
    pack = PermutationPack(n)
    assert pack.generated([pack.cyc, pack.swp]) == frozenset(pack.all)
    fixing_last = frozenset(p for p in pack.all if p[-1] == n - 1)
    assert pack.generated([pack.cyc_prime, pack.swp]) == fixing_last


@pytest.mark.parametrize("n", [3, 4, 5])
def test_every_other_permutation_is_one_counter_run_away(n):
    perms = PermutationPack(n).all
    for pi in perms:
        for pi2 in perms:
            found = decompose_perm(pi, pi2)
            if pi2 == pi:
                assert found is None
                continue
            j, k, rho = found
            assert 0 <= j < k < n
            assert rho[n - 1] == n - 1
            assert recompose(pi, j, k, rho) == pi2


def test_decompose_rejects_mismatched_sizes():
    with pytest.raises(ValueError):
        decompose_perm((0, 1, 2), (0, 1))


def test_phi_is_guarded():
    s = emit_phi_n(3)
    assert classify(s.formula) is FragmentTag.GF
    assert s.signature.width == 7
    with pytest.raises(ValueError):
        emit_phi_n(2)


def test_phi_length_is_linear():
    lengths = [length(emit_phi_n(n).formula) for n in range(3, 8)]
    steps = [b - a for a, b in zip(lengths, lengths[1:])]
    assert len(set(steps)) == 1
    assert steps[0] > 0


def test_standard_model_meets_the_bound():
    b = standard_model(3)
    assert b.size == 3 + 2**6
    report = verify_lower_bound(3, b)
    assert report.satisfied
    assert report.distinct_profiles == 64
    assert report.toggles_single
    assert report.ok
    assert "ok=true" in report.records()


def test_broken_model_is_caught():
    b = standard_model(3)
    broken = FiniteStructure.from_facts(b.signature, b.size, [f for f in b.facts if f[0] != "Adj"])
    report = verify_lower_bound(3, broken)
    assert not report.satisfied
    assert not report.ok


def test_merged_witnesses_lose_a_profile():
    # witnesses for the empty set and for the first permutation alone
    merged = merge_elements(standard_model(3), 3, 4)
    report = verify_lower_bound(3, merged)
    assert report.distinct_profiles == report.bound - 1
    assert not report.ok
    assert "ok=false" in report.records()


def test_standard_model_limits():
    with pytest.raises(MaterializationRefused):
        standard_model(4)
    with pytest.raises(ValueError):
        standard_model(2)
