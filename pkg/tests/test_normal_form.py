from __future__ import annotations

import pytest

from gforge.corpus import corpus, entry, normal_form_entries, roles_model
from gforge.logic_syntax import (
    FALSE,
    TRUE,
    Atom,
    Const,
    Eq,
    FragmentError,
    Implies,
    Not,
    Var,
    parse_sentence,
)
from gforge.normal_form import (
    Existential,
    Skolem,
    Universal,
    case_splits,
    closed_subsentences,
    constant_partitions,
    count_case_splits,
    expansion_factor,
    from_normal_sentence,
    identity_split,
    normalize,
    reinterpret_model,
    serialize_normal_form,
    simplify,
)
from gforge.structure_lab import FiniteStructure, model_check, tgf_to_gfu
from gforge.witness_engine import NoWitnessFound, eliminate, find_small_model

X, Y, Z, U, V, W = (Var(n) for n in "xyzuvw")


def test_roles_normal_form_shape(normal_form):
    _, nf = normal_form("roles")
    assert nf.fresh == ("R_chi_1", "R_chi_2")
    assert nf.signature.relations == (("U", 1), ("P", 3), ("R_chi_1", 1), ("R_chi_2", 1))
    assert set(nf.conjuncts) == {
        Existential(("x",), Atom("U", (X,)), Atom("R_chi_1", (X,))),
        Skolem(("x",), Atom("R_chi_1", (X,)), ("y", "z"), Atom("P", (X, Y, Z)), Not(Atom("U", (Y,)))),
        Existential(("u",), Atom("U", (U,)), Atom("R_chi_2", (U,))),
        Universal(("u", "v", "w"), Atom("P", (U, V, W)), Implies(Atom("R_chi_2", (U,)), Atom("U", (V,)))),
    }


def test_nested_blocks_number_fresh_symbols_innermost_first():
    s = parse_sentence("exists x (P(x) & exists y (R(x,y) & exists z (R(y,z) & P(z))))")
    nf, sigma = normalize(s, identity_split(s))
    assert nf.fresh == ("R_chi_1", "R_chi_2")
    assert sigma.relations == (("P", 1), ("R", 2), ("R_chi_1", 1), ("R_chi_2", 1))
    assert nf.conjuncts == (
        Skolem(("y",), Atom("R_chi_1", (Y,)), ("z",), Atom("R", (Y, Z)), Atom("P", (Z,))),
        Skolem(("x",), Atom("R_chi_2", (X,)), ("y",), Atom("R", (X, Y)), Atom("R_chi_1", (Y,))),
        Existential(("x",), Atom("P", (X,)), Atom("R_chi_2", (X,))),
    )


def test_roles_expansion_satisfies_the_normal_form(normal_form):
    _, nf = normal_form("roles")
    base = roles_model()
    expanded = FiniteStructure.from_facts(
        nf.signature, 3, list(base.facts) + [("R_chi_1", (0,)), ("R_chi_2", (2,))]
    )
    assert model_check(expanded, nf.to_sentence())
    wrong = FiniteStructure.from_facts(
        nf.signature, 3, list(base.facts) + [("R_chi_1", (0,)), ("R_chi_2", (0,))]
    )
    assert not model_check(wrong, nf.to_sentence())


def test_split_counts():
    assert count_case_splits(entry("constant-pair").sentence()) == 2
    assert count_case_splits(entry("constant-mark").sentence()) == 1
    s = parse_sentence("exists x (P(x) & P(x)) | exists x (Q(x) & Q(x))")
    assert len(closed_subsentences(s)) == 2
    assert count_case_splits(s) == 4
    assert len(list(case_splits(s))) == 4


def test_constant_partitions_finest_first():
    parts = constant_partitions(("d", "c"))
    assert parts == [(("c",), ("d",)), (("c", "d"),)]
    assert len(constant_partitions(("a", "b", "c"))) == 5


def test_split_description():
    s = entry("constant-pair").sentence()
    first, second = case_splits(s)
    assert first.describe() == "split=0 partition={c} {d} truth=-"
    assert second.aliases == {"d": "c"}


@pytest.mark.parametrize(
    "e",
    [e for e in normal_form_entries() if not e.sentence().signature.constants],
    ids=lambda e: e.name,
)
def test_normal_input_keeps_its_formula(e, normal_form):
    s, nf = normal_form(e.name)
    assert nf.fresh == ()
    assert nf.to_sentence().formula == s.formula


def test_ground_conjunct_becomes_a_residual_universal(normal_form):
    _, nf = normal_form("constant-mark")
    assert Universal(("x",), Eq(X, X), Atom("P", (Const("c"),))) in nf.conjuncts
    assert len(nf.skolems) == 1


def test_merged_constants_decide_equalities():
    s = parse_sentence("const c, d. forall x (P(x) -> (c = d | Q(x))) & exists x (P(x) & P(x))")
    finest, merged = case_splits(s)
    nf, sigma = normalize(s, finest)
    assert sigma.constants == ("c", "d")
    # distinct blocks denote distinct elements
    assert nf.universals == [Universal(("x",), Atom("P", (X,)), Atom("Q", (X,)))]
    nf, sigma = normalize(s, merged)
    assert sigma.constants == ("c",)
    assert nf.universals == []


@pytest.mark.parametrize(
    "e", [e for e in corpus() if e.fragment == "GF"], ids=lambda e: e.name
)
def test_expansion_is_linear(e, normal_form):
    s, nf = normal_form(e.name)
    assert expansion_factor(s, nf) <= 10


def test_triguarded_input_is_rejected_until_translated():
    s = entry("better-than").sentence()
    with pytest.raises(FragmentError):
        normalize(s, identity_split(s))
    translated = tgf_to_gfu(s)
    nf, _ = normalize(translated, identity_split(translated))
    assert nf.universal_role == "U"
    assert len(nf.skolems) == 1


def test_unsatisfiable_split_has_a_false_tail():
    s = parse_sentence("exists x (P(x) & Q(x)) | exists x (P(x) & !Q(x))")
    split = identity_split(s)
    assert split.truth == (False, False)
    nf, _ = normalize(s, split)
    assert Existential(("x",), Eq(X, X), FALSE) in nf.conjuncts


@pytest.mark.parametrize("name", ["constant-mark", "constant-pair", "roles", "supervision"])
def test_small_model_reinterprets_to_a_model(name):
    s = entry(name).sentence()
    for split in case_splits(s):
        nf, _ = normalize(s, split)
        b = find_small_model(nf)
        if b is None:
            continue
        assert model_check(b, nf.to_sentence())
        assert model_check(reinterpret_model(b, split, s.signature), s)
        return
    pytest.fail("no split produced a model")


def test_serialized_normal_form_parses_back(normal_form):
    _, nf = normal_form("roles")
    text = serialize_normal_form(nf)
    assert "# kind: skolem" in text
    again = from_normal_sentence(parse_sentence(text))
    assert again.conjuncts == nf.conjuncts
    assert again.signature == nf.signature


def test_from_normal_sentence_rejects_other_shapes():
    with pytest.raises(FragmentError):
        from_normal_sentence(parse_sentence("exists x (P(x) & P(x)) | exists x (Q(x) & Q(x))"))


def test_simplify_folds_constants():
    p = Atom("P", (X,))
    t = TRUE
    f = FALSE
    assert simplify(Implies(t, p)) == p
    assert simplify(Implies(p, f)) == Not(p)
    assert simplify(Not(Not(p))) == p


@pytest.mark.slow
@pytest.mark.parametrize(
    "e",
    [e for e in corpus() if e.fragment == "GF" and e.sentence().signature.width <= 2],
    ids=lambda e: e.name,
)
def test_small_models_and_witnesses_agree(e):
    s = e.sentence()
    small_any = witnessed_any = False
    for split in case_splits(s):
        nf, _ = normalize(s, split)
        small = find_small_model(nf, max_size=6) is not None
        try:
            eliminate(nf)
            witnessed = True
        except NoWitnessFound:
            witnessed = False
        # a model realizes a witness
        assert witnessed or not small, split.describe()
        small_any |= small
        witnessed_any |= witnessed
    assert small_any == witnessed_any == e.satisfiable
