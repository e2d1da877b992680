from fractions import Fraction

import pytest

from conftest import data_text
from randworlds.embeddings import (
    FALSE_VERDICT, TRUE_VERDICT, UNDEFINED, DefaultRuleSet, PropConstraintSet, defaults_translate,
    me_plausible, nilsson_believe, nilsson_translate, parse_constraint,
)
from randworlds.engine import DEFINED, INAPPLICABLE
from randworlds.parser import ParseError, format_formula
from randworlds.syntax import TRUE


def test_constraint_forms():
    c = parse_constraint("Pr(Fly | Bird) >= 0.7")
    assert (c.beta, c.given, c.lo, c.hi) == ("Fly", "Bird", Fraction(7, 10), None)
    c = parse_constraint("Pr((a | b) given c) in [1/4, 1/2]")
    assert (c.beta, c.given) == ("(a | b)", "c")
    assert (c.lo, c.hi) == (Fraction(1, 4), Fraction(1, 2))
    with pytest.raises(ParseError):
        parse_constraint("Pr(a) = 1.5")
    with pytest.raises(ParseError):
        parse_constraint("Pr(a) in [0.6, 0.2]")


def test_translation_examples():
    lam = PropConstraintSet.parse("Pr(Fly | Bird) >= 0.7; Pr(Yellow) <= 0.2")
    kb, phi, psi, vocab = nilsson_translate(lam, ("Fly", "Bird"))
    assert format_formula(kb) == "7/10 <~[1] ||Fly(x) | Bird(x)||_{x} & ||Yellow(x)||_{x} <~[2] 1/5"
    assert format_formula(phi) == "Fly(c)" and format_formula(psi) == "Bird(c)"
    assert vocab.constants == ("c",)


def test_interval_constraint_uses_two_indices():
    lam = PropConstraintSet.parse("Pr(p) in [0.2, 0.4]")
    kb, *_ = nilsson_translate(lam, ("p", None))
    assert format_formula(kb) == "||p(x)||_{x} <~[1] 2/5 & 1/5 <~[2] ||p(x)||_{x}"


def test_empty_constraint_set():
    kb, *_ = nilsson_translate(PropConstraintSet(), ("p", None))
    assert kb == TRUE


@pytest.mark.parametrize("text, beta, given, value", [
    ("Pr(p) <= 0.3", "p", None, 0.3),
    ("", "p", None, 0.5),
    ("Pr(p) = 0.3; Pr(q) = 0.25", "p & q", None, 0.075),
    ("Pr(q | p) = 0.9; Pr(p) = 0.4", "q", "p", 0.9),
    ("Pr(p) = 0.3", "p | q", None, 0.65),
])
def test_nilsson_values(text, beta, given, value):
    lam = PropConstraintSet.parse(text, ["p", "q"] if "q" in beta + (given or "") else ["p"])
    r = nilsson_believe(lam, beta, given)
    assert r.status == DEFINED
    assert r.value == pytest.approx(value, abs=1e-6)


def test_nilsson_zero_condition():
    lam = PropConstraintSet.parse("Pr(p) = 0")
    r = nilsson_believe(lam, "q", "p")
    assert r.status == INAPPLICABLE


def test_defaults_translation():
    rules = DefaultRuleSet.parse("Bird -> Fly; Penguin => Bird;")
    text = format_formula(defaults_translate(rules))
    assert text == "||Fly(x) | Bird(x)||_{x} ~=[1] 1 & forall x (Penguin(x) -> Bird(x))"
    assert defaults_translate(DefaultRuleSet()) == TRUE


def test_specificity():
    rules = DefaultRuleSet.parse(data_text("birds.rules"))
    p = me_plausible(rules, "Penguin -> !Fly")
    assert p.verdict == TRUE_VERDICT
    assert p.monotone
    assert [row["tau"] for row in p.trace] == [1e-1, 1e-2, 1e-3, 1e-4]


def test_irrelevance():
    rules = DefaultRuleSet.parse("Bird -> Fly;")
    assert me_plausible(rules, "Bird & Yellow -> Fly").verdict == TRUE_VERDICT


def test_no_rules_gives_one_half():
    p = me_plausible(DefaultRuleSet(), "B -> C")
    assert p.verdict == FALSE_VERDICT
    assert p.limit == pytest.approx(0.5, abs=1e-9)


def test_unrelated_conclusion_is_not_endorsed():
    rules = DefaultRuleSet.parse(data_text("birds.rules"))
    assert me_plausible(rules, "Penguin -> Fly").verdict == FALSE_VERDICT


def test_inconsistent_body_is_undefined():
    rules = DefaultRuleSet.parse("P => !P;")
    p = me_plausible(rules, "P -> Q")
    assert p.verdict == UNDEFINED
    assert all(row["status"] != "defined" for row in p.trace)
