from fractions import Fraction

import numpy as np
import pytest

from kbgen import VOCAB1, random_kb
from randworlds.canonical import to_canonical
from randworlds.constraints import (
    check_eventual_consistency, construct_world, gamma, gamma_weakened, is_essentially_positive,
    lattice_point, solution_space, space_of, weakened_space,
)
from randworlds.maxent import maximize
from randworlds.parser import parse_formula
from randworlds.semantics import evaluate, iter_worlds
from randworlds.syntax import Vocabulary

TENTH = {1: Fraction(1, 10), 2: Fraction(1, 10)}


def test_hepatitis_gamma_lines(hep):
    g = gamma(to_canonical(hep.kb_formula, hep.vocab))
    # one disjunct per jaundiced atom Eric can occupy
    assert len(g.disjuncts) == 4
    lines = [str(c) for c in g.disjuncts[0]]
    assert lines == [
        "u1 > 0",
        "u3 = 0",
        "u4 = 0",
        "u1 + u2 + u5 + u6 > 0",
        "(0.8 - e1)*(u1 + u2 + u5 + u6) <= u1 + u2",
        "u1 + u2 <= (0.8 + e1)*(u1 + u2 + u5 + u6)",
        "u1 + u3 + u5 + u7 <= (0.25 + e2)",
        "(0.25 - e2) <= u1 + u3 + u5 + u7",
    ]
    assert [str(c) for c in g.disjuncts[1]][0] == "u2 > 0"


@pytest.mark.parametrize("seed", range(12))
def test_gamma_holds_at_every_satisfying_world(seed):
    kb = random_kb(3000 + seed)
    cf = to_canonical(kb, VOCAB1)
    g = gamma(cf)
    for N in (2, 3):
        for w in iter_worlds(VOCAB1, N):
            sat = evaluate(w, None, TENTH, kb, VOCAB1)
            if sat:
                assert g.holds(w.point(VOCAB1.K), TENTH)


@pytest.mark.parametrize("seed", range(12))
def test_lattice_points_are_realized(seed):
    kb = random_kb(3100 + seed)
    cf = to_canonical(kb, VOCAB1)
    for N in (3, 4):
        pt = lattice_point(cf, TENTH, N)
        if pt is None:
            continue
        w = construct_world(pt, N, cf, TENTH)
        assert w is not None
        assert evaluate(w, None, TENTH, kb, VOCAB1)
        assert w.point(VOCAB1.K) == pt


def test_example_region_with_weighted_term():
    v = Vocabulary(("P1", "P2"))
    cf = to_canonical(parse_formula("forall x P1(x) & 3 * ||P1(x) & P2(x)||_{x} <~[1] 1", v), v)
    tau = Fraction(3, 100)
    r = space_of(cf, {1: tau})
    edge = float(Fraction(1, 3) + tau / 3)
    assert r.contains([edge, 1 - edge, 0, 0])
    assert not r.contains([edge + 1e-3, 1 - edge - 1e-3, 0, 0])
    assert not r.contains([0.2, 0.7, 0.1, 0])


def test_weakened_space_drops_strictness():
    v = Vocabulary(("P",))
    cf = to_canonical(parse_formula("exists x P(x)", v), v)
    edge = [Fraction(0), Fraction(1)]
    assert not gamma(cf).holds(edge)
    assert gamma_weakened(cf).holds(edge)
    # regions are closed relaxations, so both contain the edge
    assert solution_space(gamma(cf)).contains(edge)
    assert weakened_space(gamma_weakened(cf)).contains(edge)


def test_essential_positivity():
    v = Vocabulary(("P",))
    pos = to_canonical(parse_formula("||P(x)||_{x} ~=[1] 0.3", v), v)
    assert is_essentially_positive(pos).positive
    # the weakened maximum sits on u1 = 0, where the strict constraint fails
    neg = to_canonical(parse_formula("exists x P(x) & ||P(x)||_{x} ~=[1] 0", v), v)
    assert not is_essentially_positive(neg).positive


def test_maxima_converge_as_tolerance_shrinks(hep):
    cf = to_canonical(hep.kb_formula, hep.vocab)
    limit = maximize(weakened_space(gamma_weakened(cf).instantiate({1: 0, 2: 0})))
    target = limit.maxima[0].point
    gaps = []
    for t in (0.1, 0.01, 0.001, 0.0001):
        res = maximize(space_of(cf, {1: t, 2: t}))
        gaps.append(np.abs(res.maxima[0].point - target).max())
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < 1e-3


def test_eventual_consistency_report(hep):
    rep = check_eventual_consistency(to_canonical(hep.kb_formula, hep.vocab))
    assert rep.consistent
    N, pt = rep.lattice
    assert sum(pt) == 1 and all((x * N).denominator == 1 for x in pt)
    v = Vocabulary(("P",))
    bad = to_canonical(parse_formula("exists x P(x) & forall x !P(x)", v), v)
    assert not check_eventual_consistency(bad).consistent
