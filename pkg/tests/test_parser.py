from fractions import Fraction

import pytest
from hypothesis import given

from conftest import data_text
from kbgen import VOCAB1, closed_formula_strategy, corpus
from randworlds.parser import ParseError, format_formula, parse, parse_formula, parse_kb, to_text
from randworlds.syntax import Compare, Num, Prop, Vocabulary


@given(closed_formula_strategy())
def test_print_then_parse_is_identity(f):
    assert parse_formula(format_formula(f), VOCAB1) == f


def test_seeded_corpus_round_trips():
    for f in corpus(50):
        assert parse_formula(format_formula(f), VOCAB1) == f


def test_rational_literal():
    src = parse("vocab { predicates P; } kb { ||P(x)||_{x} ~=[1] 3/10; }")
    (f,) = src.kb
    assert isinstance(f, Compare) and f.op == "~=" and f.index == 1
    assert isinstance(f.left, Prop)
    assert f.right == Num(Fraction(3, 10))


def test_decimal_is_exact():
    f = parse_kb("||P(x)||_{x} ~=[1] 0.1", Vocabulary(("P",)))
    assert f.right == Num(Fraction(1, 10))


def test_weighted_comparison_prints_without_extra_parentheses():
    v = Vocabulary(("P1", "P2"))
    text = "forall x P1(x) & 3 * ||P1(x) & P2(x)||_{x} <~[1] 1"
    assert format_formula(parse_formula(text, v)) == text


def test_equality_in_kb_rejected():
    with pytest.raises(ParseError, match="equality"):
        parse("vocab { predicates P; constants Eric; } kb { Eric = Eric; }")


def test_relation_in_kb_rejected_but_allowed_in_query():
    head = "vocab { predicates P; constants a, b; relations R/2; }"
    with pytest.raises(ParseError, match="relation R"):
        parse(head + " kb { ||R(x, a)||_{x} ~=[1] 0.5; }")
    src = parse(head + " kb { P(a); } query { R(a, b); }")
    assert len(src.query) == 1


def test_undeclared_symbol_reports_position():
    with pytest.raises(ParseError) as e:
        parse("vocab { predicates P; }\nkb {\n  Q(x);\n}")
    assert e.value.line == 3
    assert e.value.col is not None


def test_hepatitis_file():
    src = parse(data_text("hepatitis.rwkb"))
    assert src.vocab.predicates == ("Hepatitis", "Jaundice", "BlueEyed")
    assert src.vocab.constants == ("Eric",)
    assert len(src.kb) == 4
    assert format_formula(src.query[0]) == "Hepatitis(Eric)"
    # the printed file parses back to the same thing
    assert parse(to_text(src)) == src


@pytest.mark.parametrize("name", ["coin.rwkb", "ex4_3.rwkb", "ex4_16.rwkb", "ex4_19.rwkb",
                                  "penguin.rwkb", "upper_bound.rwkb"])
def test_bundled_files_round_trip(name):
    src = parse(data_text(name))
    assert parse(to_text(src)) == src
