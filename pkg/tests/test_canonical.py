from fractions import Fraction

import pytest
from hypothesis import given, settings

from kbgen import VOCAB1, closed_formula_strategy, random_kb
from randworlds.canonical import (
    VACUOUS, ZeroLit, desugar, flatten, format_literal, is_flat, rename_apart, to_canonical,
)
from randworlds.parser import parse_formula
from randworlds.semantics import count_worlds
from randworlds.syntax import And, Vocabulary


def same_worlds(a, b, vocab, N, tau):
    """|A| = |B| = |A and B| means the two world sets coincide."""
    na = count_worlds(vocab, N, tau, a).total
    nb = count_worlds(vocab, N, tau, b).total
    nab = count_worlds(vocab, N, tau, And((a, b))).total
    return na == nb == nab


@pytest.mark.parametrize("seed", range(20))
def test_canonical_form_has_the_same_worlds(seed):
    kb = random_kb(2000 + seed)
    canon = to_canonical(kb, VOCAB1).to_formula()
    for tau in (Fraction(1, 10), Fraction(3, 10)):
        t = {1: tau, 2: tau}
        for N in (1, 2, 3):
            assert same_worlds(kb, canon, VOCAB1, N, t), (seed, N, tau)


@settings(max_examples=25)
@given(closed_formula_strategy(max_leaves=6))
def test_canonicalization_is_idempotent(f):
    cf = to_canonical(f, VOCAB1)
    again = to_canonical(cf.to_formula(), VOCAB1)
    assert again.same_as(cf)


@settings(max_examples=40)
@given(closed_formula_strategy(max_leaves=6))
def test_flatten_output_is_flat(f):
    assert is_flat(flatten(rename_apart(desugar(f))))


def test_example_with_weighted_term():
    v = Vocabulary(("P1", "P2"))
    kb = parse_formula("forall x P1(x) & 3 * ||P1(x) & P2(x)||_{x} <~[1] 1", v)
    cf = to_canonical(kb, v)
    assert len(cf.disjuncts) == 1
    lits = [format_literal(l, v) for l in cf.disjuncts[0]]
    assert lits == ["!exists x A3(x)", "!exists x A4(x)", "-1 + 3*u1 <= e1"]


def test_true_is_one_vacuous_disjunct():
    v = Vocabulary(("P",))
    cf = to_canonical(parse_formula("true", v), v)
    assert cf.disjuncts == ((VACUOUS,),)
    assert isinstance(VACUOUS, ZeroLit)


def test_contradiction_has_no_disjuncts():
    v = Vocabulary(("P",), ("c",))
    cf = to_canonical(parse_formula("P(c) & forall x !P(x)", v), v)
    assert cf.is_false()


def test_hepatitis_structure(hep):
    cf = to_canonical(hep.kb_formula, hep.vocab)
    assert cf.tolerance_indices() == {1, 2}
    assert cf.constants() == {"Eric"}
    # Eric's atom splits the form by which jaundiced atom he falls in
    assert len(cf.disjuncts) >= 1
    assert same_worlds(hep.kb_formula, cf.to_formula(), hep.vocab, 2,
                       {1: Fraction(1, 10), 2: Fraction(1, 10)})


def test_conditional_is_multiplied_out():
    v = Vocabulary(("P", "Q"))
    kb = parse_formula("||P(x) | Q(x)||_{x} ~=[1] 1/2", v)
    text = " ".join(format_literal(l, v) for d in to_canonical(kb, v).disjuncts for l in d)
    assert "||" not in text and "u" in text


def test_undeclared_constant_rejected():
    from randworlds.syntax import RandWorldsError
    v = Vocabulary(("P",))
    with pytest.raises(RandWorldsError):
        to_canonical(parse_formula("P(c)", Vocabulary(("P",), ("c",))), v)
