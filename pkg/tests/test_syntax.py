import itertools

import pytest
from hypothesis import given, strategies as st

from kbgen import qf_strategy
from randworlds.syntax import (
    And, Const, Not, Pred, RandWorldsError, ToleranceVector, Var, Vocabulary, atom_holds, atom_set,
    atom_set_of_constant, atoms_of, conjuncts, constants_of, eval_at_atom, free_vars,
    is_essentially_propositional, rename_apart, substitute,
)
from randworlds.parser import parse_formula

V3 = Vocabulary(("P", "Q", "R"), ("c",))


def test_atom_order_puts_first_predicate_most_significant():
    v = Vocabulary(("Hepatitis", "Jaundice", "BlueEyed"))
    atoms = atoms_of(v)
    assert len(atoms) == 8
    # A1 has every predicate true, A8 has every predicate false
    assert all(atom_holds(0, 3, i) for i in range(3))
    assert not any(atom_holds(7, 3, i) for i in range(3))
    # A2 differs from A1 only in the last predicate
    assert [atom_holds(1, 3, i) for i in range(3)] == [True, True, False]


def test_atoms_are_exclusive_and_exhaustive():
    for k in (1, 2, 3):
        v = Vocabulary(tuple("PQR"[:k]))
        for truth in itertools.product((False, True), repeat=k):
            hits = [m for m in range(v.K) if all(atom_holds(m, k, i) == truth[i] for i in range(k))]
            assert len(hits) == 1


@given(qf_strategy(("P", "Q", "R")), qf_strategy(("P", "Q", "R")))
def test_atom_sets_respect_connectives(a, b):
    A, B = atom_set(a, V3), atom_set(b, V3)
    assert atom_set(And((a, b)), V3) == A & B
    assert atom_set(Not(a), V3) == frozenset(range(1, V3.K + 1)) - A


def test_atom_set_examples():
    v = Vocabulary(("P",))
    assert atom_set(parse_formula("P(x)", v, ("x",)), v) == {1}
    assert atom_set(parse_formula("P(x) | !P(x)", v, ("x",)), v) == {1, 2}


def test_atom_set_of_constant():
    f = parse_formula("P(c) & !Q(c)", V3)
    assert atom_set_of_constant(f, "c", V3) == {3, 4}


def test_essentially_propositional():
    assert is_essentially_propositional(parse_formula("P(x) -> Q(x)", V3, ("x",)))
    assert not is_essentially_propositional(parse_formula("exists y P(y)", V3))
    assert not is_essentially_propositional(parse_formula("P(c)", V3))


def test_eval_at_atom_agrees_with_atom_holds():
    f = parse_formula("P(x) & !R(x)", V3, ("x",))
    for m in range(8):
        assert eval_at_atom(f, m, V3) == (atom_holds(m, 3, 0) and not atom_holds(m, 3, 2))


def test_tolerance_vector_rejects_nonpositive():
    with pytest.raises(RandWorldsError):
        ToleranceVector({1: 0})
    with pytest.raises(RandWorldsError):
        ToleranceVector({0: 0.1})
    t = ToleranceVector.uniform("0.05", [1, 2])
    assert t[7] == t[1]


def test_vocabulary_rejects_duplicates_and_unary_relations():
    with pytest.raises(RandWorldsError):
        Vocabulary(("P", "P"))
    with pytest.raises(RandWorldsError):
        Vocabulary(("P",), (), (("R", 1),))


def test_substitute_and_free_vars():
    f = parse_formula("P(x) & exists x Q(x)", V3, ("x",))
    g = substitute(f, {"x": Const("c")})
    assert free_vars(g) == frozenset()
    assert constants_of(g) == {"c"}
    assert g.args[0] == Pred("P", (Const("c"),))
    assert g.args[1] == f.args[1]   # the bound occurrence is untouched


@given(st.lists(qf_strategy(max_leaves=3), min_size=1, max_size=4))
def test_conjuncts_flatten(fs):
    f = And(tuple(fs))
    assert all(not isinstance(c, And) for c in conjuncts(f))


def test_rename_apart_separates_binders():
    f = parse_formula("(exists x P(x)) & (exists x Q(x))", V3)
    g = rename_apart(f)
    a, b = conjuncts(g)
    assert a.var != b.var


def test_unary_pred_shape():
    assert Pred("P", (Var("x"),)).args == (Var("x"),)
