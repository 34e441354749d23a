from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gforge.corpus import corpus, entry
from gforge.logic_syntax import (
    And,
    Atom,
    Eq,
    FragmentTag,
    GrammarError,
    Iff,
    Implies,
    Not,
    Or,
    QuantKind,
    Quantifier,
    Signature,
    SignatureError,
    Var,
    classify,
    free_variables,
    length,
    make_quantifier,
    parse_sentence,
    print_formula,
    print_sentence,
    signature_of,
)

X, Y = Var("x"), Var("y")

_leaves = st.sampled_from(
    [
        Atom("P", (X,)),
        Atom("P", (Y,)),
        Atom("R", (X, Y)),
        Atom("R", (Y, X)),
        Atom("R", (X, X)),
        Eq(X, Y),
    ]
)

quantifier_free = st.recursive(
    _leaves,
    lambda inner: st.one_of(
        inner.map(Not),
        st.tuples(inner, inner).map(lambda p: And(*p)),
        st.tuples(inner, inner).map(lambda p: Or(*p)),
        st.tuples(inner, inner).map(lambda p: Implies(*p)),
        st.tuples(inner, inner).map(lambda p: Iff(*p)),
    ),
    max_leaves=8,
)


def test_classifies_the_three_fragments():
    assert classify(entry("supervision").sentence().formula) is FragmentTag.GF
    assert classify(entry("better-than").sentence().formula) is FragmentTag.TGF
    assert classify(parse_sentence("forall x y z (R(x,y) -> S(y,z))").formula) is FragmentTag.FO


def test_guard_is_recognised():
    s = parse_sentence("forall x y (R(x,y) -> P(x))")
    assert isinstance(s.formula, Quantifier)
    assert s.formula.kind is QuantKind.FORALL
    assert s.formula.guard == Atom("R", (X, Y))
    assert s.formula.body == Atom("P", (X,))


def test_unguarded_block_keeps_its_matrix():
    s = entry("unique-zero").sentence()
    assert s.formula.guard is None
    assert classify(s.formula) is FragmentTag.TGF


@pytest.mark.parametrize("e", corpus(), ids=lambda e: e.name)
def test_corpus_round_trips_through_the_printer(e):
    s = e.sentence()
    assert parse_sentence(print_sentence(s)) == s


@settings(max_examples=200, deadline=None)
@given(quantifier_free)
def test_guarded_bodies_round_trip(body):
    formula = make_quantifier(QuantKind.FORALL, ("x", "y"), Implies(Atom("R", (X, Y)), body))
    assert formula.guard is not None
    parsed = parse_sentence(print_formula(formula))
    assert parsed.formula == formula


def test_inequality_prints_as_negated_equality():
    s = entry("guarded-inequality").sentence()
    assert "!x = y" in print_formula(s.formula)


def test_syntax_error_carries_position():
    with pytest.raises(GrammarError) as info:
        parse_sentence("exists x (P(x) & & Q(x))")
    assert info.value.line == 1
    assert info.value.column is not None


def test_undeclared_constant_is_rejected():
    with pytest.raises(GrammarError, match="unbound"):
        parse_sentence("exists x (P(x) & Q(c))")


def test_declared_constant_is_accepted():
    s = parse_sentence("const c. exists x (P(x) & Q(c))")
    assert s.constants == ("c",)
    assert s.signature.constants == ("c",)


def test_inconsistent_arity_is_rejected():
    with pytest.raises(SignatureError):
        parse_sentence("exists x y (R(x,y) & R(x))")


def test_declared_arity_is_enforced():
    with pytest.raises(SignatureError):
        parse_sentence("rel R/2. exists x (R(x) & P(x))")


def test_constant_cannot_be_quantified():
    with pytest.raises(GrammarError):
        parse_sentence("const c. exists c (P(c))")


def test_repeated_block_variable_is_rejected():
    with pytest.raises(GrammarError):
        parse_sentence("exists x x (R(x,x))")


def test_signature_order_is_first_occurrence():
    sig = entry("roles").sentence().signature
    assert sig.relations == (("U", 1), ("P", 3))
    assert sig.width == 3


def test_signature_of_a_formula():
    f = parse_sentence("const d, c. R(c,d) & exists x (P(x) & R(x,c))").formula
    sig = signature_of(f)
    assert sig.relations == (("R", 2), ("P", 1))
    assert sig.constants == ("c", "d")
    with pytest.raises(SignatureError):
        signature_of(And(Atom("R", (X,)), Atom("R", (X, Y))))


def test_length_counts_symbols():
    s = parse_sentence("exists x (P(x) & Q(x))")
    assert length(s.formula) == 13


def test_free_variables_of_open_block():
    s = entry("supervision").sentence()
    inner = s.formula.body.right
    assert free_variables(inner) == {"s"}


def test_signature_text_round_trip():
    sig = Signature((("R", 2), ("P", 1)), ("c", "d"))
    assert str(sig) == "rel R/2, P/1; const c, d"
    assert Signature.parse(str(sig)) == sig


def test_signature_rejects_duplicates_and_nullary_relations():
    with pytest.raises(SignatureError):
        Signature((("R", 2), ("R", 1)))
    with pytest.raises(SignatureError):
        Signature((("R", 0),))
    with pytest.raises(SignatureError):
        Signature((), ("c",))
    with pytest.raises(SignatureError):
        parse_sentence("true")
    assert parse_sentence("rel P/1. true").signature == Signature((("P", 1),))


def test_fresh_name_avoids_existing_symbols():
    sig = Signature((("R_chi", 1), ("R_chi_1", 1)))
    assert sig.fresh_name("R_chi") == "R_chi_2"
    assert sig.fresh_name("G") == "G"
