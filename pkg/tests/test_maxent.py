import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import load
from kbgen import VOCAB1, random_kb
from oracles import grid_max, perturbation_gain
from randworlds.canonical import to_canonical
from randworlds.constraints import gamma_weakened, space_of, weakened_space
from randworlds.maxent import MaxEntConfig, bound_statistic, entropy, maximize, same_maxima
from randworlds.parser import parse_formula
from randworlds.syntax import Vocabulary

V1 = Vocabulary(("P",))


def region(text, vocab=V1, tau=Fraction(1, 100)):
    cf = to_canonical(parse_formula(text, vocab), vocab)
    return space_of(cf, {i: tau for i in cf.tolerance_indices()})


def test_hepatitis_closed_form(hep):
    cf = to_canonical(hep.kb_formula, hep.vocab)
    res = maximize(weakened_space(gamma_weakened(cf).instantiate({1: 0, 2: 0})))
    assert res.unique == "proven-unique"
    h = -(0.8 * math.log(0.8) + 0.2 * math.log(0.2))
    j = 1 / (1 + math.exp(-h))
    expect = np.array([0.2 * j, 0.6 * j, 0, 0, 0.05 * j, 0.15 * j, 0.25 * (1 - j), 0.75 * (1 - j)])
    assert np.abs(res.point - expect).max() < 1e-7


def test_two_symmetric_maxima():
    src = load("ex4_16.rwkb")
    g = gamma_weakened(to_canonical(src.kb_formula, src.vocab))
    res = maximize(weakened_space(g.instantiate({1: 0, 2: 0})))
    assert res.unique == "multiple"
    pts = sorted(round(float(p[0]), 6) for p in res.points)
    assert pts == [0.3, 0.7]


@pytest.mark.parametrize("text", [
    "||P(x)||_{x} ~=[1] 0.3",
    "||P(x)||_{x} <~[1] 0.2",
    "||P(x)||_{x} >~[1] 0.6",
    "||P(x)||_{x} <~[1] 0.3 | ||P(x)||_{x} >~[2] 0.8",
])
def test_grid_oracle_k2(text):
    r = region(text)
    res = maximize(r)
    best, _ = grid_max(r, step=1e-4)
    assert res.entropy >= best - 1e-9
    assert res.entropy - best < 1e-3
    for p in res.points:
        assert r.contains(p)


def test_polynomial_cell_is_heuristic():
    v = Vocabulary(("P", "Q"))
    r = region("||P(x)||_{x} * ||Q(x)||_{x} ~=[1] 0.1", v)
    res = maximize(r)
    assert res.unique == "heuristically-unique"
    u = res.point
    p, q = u[0] + u[1], u[0] + u[2]
    assert abs(p * q - 0.1) <= 0.01 + 1e-7
    # symmetric in P and Q
    assert abs(p - q) < 1e-4


@pytest.mark.parametrize("seed", range(15))
def test_no_feasible_move_improves_entropy(seed):
    cf = to_canonical(random_kb(4000 + seed), VOCAB1)
    r = space_of(cf, {1: Fraction(1, 20), 2: Fraction(1, 20)})
    res = maximize(r)
    if not res.feasible or not r.linear:
        return
    for p in res.points:
        assert r.contains(p, tol=1e-8)
        gain, _ = perturbation_gain(r, p, n=200, seed=seed)
        assert gain <= 1e-9


@settings(max_examples=30)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=8))
def test_entropy_bounds(xs):
    s = sum(xs)
    if s <= 0:
        return
    u = np.array(xs) / s
    h = entropy(u)
    assert -1e-12 <= h <= math.log(len(u)) + 1e-12


def test_seed_determinism():
    v = Vocabulary(("P", "Q"))
    r = region("||P(x)||_{x} * ||Q(x)||_{x} ~=[1] 0.1", v)
    a = maximize(r, MaxEntConfig(seed=3))
    b = maximize(r, MaxEntConfig(seed=3))
    assert np.array_equal(a.point, b.point)
    assert same_maxima(a, maximize(r, MaxEntConfig(seed=11)), tol=1e-5)


def test_infeasible_region():
    v = Vocabulary(("P",))
    r = region("||P(x)||_{x} ~=[1] 0.3 & ||P(x)||_{x} ~=[2] 0.9", v)
    res = maximize(r)
    assert not res.feasible and res.maxima == []


def test_bound_statistic():
    from randworlds.canonical import term_poly
    v = Vocabulary(("P1", "P2"))
    cf = to_canonical(parse_formula("forall x P1(x) & 3 * ||P1(x) & P2(x)||_{x} <~[1] 1", v), v)
    tau = 0.03
    r = space_of(cf, {1: tau})
    num = term_poly(parse_formula("||P1(x) & P2(x)||_{x} = 0", v).left, v)
    one = term_poly(parse_formula("1 = 0", v).left, v)
    lo, hi = bound_statistic(r, num, one)
    assert abs(lo) < 1e-9 and abs(hi - (1 / 3 + tau / 3)) < 1e-9
