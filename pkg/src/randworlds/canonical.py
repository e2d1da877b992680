"""Translation to the exact language, flattening, and canonical form.

The pipeline for a knowledge base is::

    desugar -> rename_apart -> flatten -> to_exact -> to_canonical

``to_canonical`` returns a :class:`CanonicalForm`: a disjunction of
conjunctions of literals over atoms.  Literal kinds:

* ``ConstAtom(c, j)``      A_j(c)
* ``ExistsAtom(j, pos)``   exists x A_j(x), or its negation
* ``ZeroLit(t)``           t = 0 for a positive polynomial t
* ``PosLit(t)``            t > 0 for a positive polynomial t
* ``TolLit(t, tp, i, neg)`` t <= tp * eps_i (negated when ``neg``);
  with ``i=None`` it reads t <= 0.

The guard t' > 0 of a tolerance constraint is kept as a separate ``PosLit``
so that printing and re-parsing a canonical form gives it back unchanged.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .polynomial import Poly, format_poly
from .syntax import (
    APPROX_EQ, APPROX_LEQ, EXACT_EQ, EXACT_LEQ, FALSE, ONE, TRUE, ZERO,
    Add, And, CondProp, Compare, Const, Eps, Equals, Exists, Forall, Formula,
    Implies, Mul, Not, Num, Or, PExpr, Pred, Prop, RandWorldsError,
    SyntaxRestrictionError, Truth, Var, Vocabulary, atom_holds, atoms_of,
    children, conj, constants_of, disj, free_vars, neg, pexpr_terms,
    rename_apart,
)


# ---------------------------------------------------------------------------
# desugaring


def desugar(f):
    """Remove implication and universal quantification."""
    if isinstance(f, Implies):
        return Or((Not(desugar(f.left)), desugar(f.right)))
    if isinstance(f, Forall):
        return Not(Exists(f.var, Not(desugar(f.body))))
    if isinstance(f, Exists):
        return Exists(f.var, desugar(f.body))
    if isinstance(f, Not):
        return Not(desugar(f.arg))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(desugar(a) for a in f.args))
    if isinstance(f, Compare):
        return Compare(desugar(f.left), f.op, desugar(f.right), f.index)
    if isinstance(f, Prop):
        return Prop(desugar(f.body), f.vars)
    if isinstance(f, CondProp):
        return CondProp(desugar(f.body), desugar(f.given), f.vars)
    if isinstance(f, (Add, Mul)):
        return type(f)(tuple(desugar(a) for a in f.args))
    return f


# ---------------------------------------------------------------------------
# L~ -> L=


def _mk_add(args: Sequence[PExpr]) -> PExpr:
    flat = []
    const = Fraction(0)
    for a in args:
        if isinstance(a, Add):
            flat.extend(a.args)
        else:
            flat.append(a)
    out = []
    for a in flat:
        if isinstance(a, Num):
            const += a.value
        else:
            out.append(a)
    if const != 0 or not out:
        out.append(Num(const))
    return out[0] if len(out) == 1 else Add(tuple(out))


def _mk_mul(args: Sequence[PExpr]) -> PExpr:
    coef = Fraction(1)
    out = []
    for a in args:
        if isinstance(a, Num):
            coef *= a.value
        elif isinstance(a, Mul) and isinstance(a.args[0], Num):
            coef *= a.args[0].value
            out.extend(a.args[1:])
        else:
            out.append(a)
    if coef == 0:
        return ZERO
    if coef != 1 or not out:
        out.insert(0, Num(coef))
    return out[0] if len(out) == 1 else Mul(tuple(out))


def _ratform(e: PExpr) -> tuple[PExpr, tuple[PExpr, ...]]:
    """Numerator and denominator factors of a proportion expression."""
    if isinstance(e, (Num, Eps)):
        return e, ()
    if isinstance(e, Prop):
        return Prop(to_exact(e.body), e.vars), ()
    if isinstance(e, CondProp):
        body, given = to_exact(e.body), to_exact(e.given)
        return Prop(And((body, given)), e.vars), (Prop(given, e.vars),)
    if isinstance(e, Add):
        n, D = _ratform(e.args[0])
        for a in e.args[1:]:
            n2, D2 = _ratform(a)
            if D == D2:
                n = _mk_add([n, n2])
            else:
                n = _mk_add([_mk_mul([n, *D2]), _mk_mul([n2, *D])])
                D = D + D2
        return n, D
    if isinstance(e, Mul):
        n, D = ONE, ()
        for a in e.args:
            n2, D2 = _ratform(a)
            n = _mk_mul([n, n2])
            D = D + D2
        return n, D
    raise TypeError(f"not a proportion expression: {e!r}")


def _has_conditional(e: PExpr) -> bool:
    return any(isinstance(t, CondProp) for t in pexpr_terms(e))


def to_exact(chi):
    """chi -> chi*: approximate comparisons become exact ones over eps_i."""
    if isinstance(chi, Compare):
        if chi.op in (EXACT_EQ, EXACT_LEQ) and not (_has_conditional(chi.left) or _has_conditional(chi.right)):
            return Compare(_exact_pexpr(chi.left), chi.op, _exact_pexpr(chi.right))
        n, D = _ratform(Add((chi.left, neg(chi.right))))
        if chi.op in (EXACT_EQ, EXACT_LEQ):
            return Compare(n, chi.op, ZERO)
        slack = _mk_mul([Eps(chi.index), *D])
        upper = Compare(n, EXACT_LEQ, slack)
        if chi.op == APPROX_LEQ:
            return upper
        return And((upper, Compare(_mk_mul([Num(-1), n]), EXACT_LEQ, slack)))
    if isinstance(chi, Not):
        return Not(to_exact(chi.arg))
    if isinstance(chi, (And, Or)):
        return type(chi)(tuple(to_exact(a) for a in chi.args))
    if isinstance(chi, Implies):
        return Implies(to_exact(chi.left), to_exact(chi.right))
    if isinstance(chi, (Exists, Forall)):
        return type(chi)(chi.var, to_exact(chi.body))
    return chi


def _exact_pexpr(e: PExpr) -> PExpr:
    if isinstance(e, Prop):
        return Prop(to_exact(e.body), e.vars)
    if isinstance(e, (Add, Mul)):
        return type(e)(tuple(_exact_pexpr(a) for a in e.args))
    return e


def substitute_tau(chi, tau: Mapping[int, object]):
    """Replace every eps_i by the value tau[i] (zero allowed)."""
    if isinstance(chi, Eps):
        if chi.index not in tau:
            raise RandWorldsError(f"no tolerance given for index {chi.index}")
        return Num(Fraction(tau[chi.index]))
    if isinstance(chi, Compare):
        if chi.op in (APPROX_EQ, APPROX_LEQ):
            raise RandWorldsError("translate approximate comparisons with to_exact first")
        return Compare(substitute_tau(chi.left, tau), chi.op, substitute_tau(chi.right, tau))
    if isinstance(chi, Not):
        return Not(substitute_tau(chi.arg, tau))
    if isinstance(chi, (And, Or)):
        return type(chi)(tuple(substitute_tau(a, tau) for a in chi.args))
    if isinstance(chi, Implies):
        return Implies(substitute_tau(chi.left, tau), substitute_tau(chi.right, tau))
    if isinstance(chi, (Exists, Forall)):
        return type(chi)(chi.var, substitute_tau(chi.body, tau))
    if isinstance(chi, Prop):
        return Prop(substitute_tau(chi.body, tau), chi.vars)
    if isinstance(chi, CondProp):
        return CondProp(substitute_tau(chi.body, tau), substitute_tau(chi.given, tau), chi.vars)
    if isinstance(chi, (Add, Mul)):
        return type(chi)(tuple(substitute_tau(a, tau) for a in chi.args))
    return chi


# ---------------------------------------------------------------------------
# flattening


def _check_unary(f, vocab: Vocabulary | None):
    if isinstance(f, Equals):
        raise SyntaxRestrictionError("equality cannot be flattened")
    if isinstance(f, Pred) and len(f.args) != 1:
        raise SyntaxRestrictionError(f"non-unary symbol {f.name}")


def _basics(f: Formula, out: list) -> None:
    """Maximal non-Boolean subformulas, in order of first appearance."""
    if isinstance(f, Truth):
        return
    if isinstance(f, (Not, And, Or)):
        for c in children(f):
            _basics(c, out)
        return
    if f not in out:
        out.append(f)


def _replace(f: Formula, values: Mapping[Formula, bool]) -> Formula:
    if f in values:
        return TRUE if values[f] else FALSE
    if isinstance(f, Not):
        a = _replace(f.arg, values)
        if isinstance(a, Truth):
            return Truth(not a.value)
        return Not(a)
    if isinstance(f, And):
        return conj(_replace(a, values) for a in f.args)
    if isinstance(f, Or):
        return disj(_replace(a, values) for a in f.args)
    return f


def _simplify_exists(var: str, body: Formula) -> Formula:
    if isinstance(body, Truth):
        return body  # domains are nonempty
    return Exists(var, body)


def _cases(basics: list[Formula]):
    for bits in itertools.product((True, False), repeat=len(basics)):
        yield dict(zip(basics, bits))


def _case_formula(values: Mapping[Formula, bool]) -> list[Formula]:
    return [b if v else Not(b) for b, v in values.items()]


def flatten(xi: Formula) -> Formula:
    """Case-split so no binder sees a constant or a variable it does not bind.

    Expects a desugared formula whose binders are renamed apart.
    """
    if isinstance(xi, (Truth,)):
        return xi
    if isinstance(xi, (Pred, Equals)):
        _check_unary(xi, None)
        return xi
    if isinstance(xi, Not):
        return Not(flatten(xi.arg))
    if isinstance(xi, (And, Or)):
        return type(xi)(tuple(flatten(a) for a in xi.args))
    if isinstance(xi, (Implies, Forall)):
        return flatten(desugar(xi))
    if isinstance(xi, Exists):
        body = flatten(xi.body)
        found: list = []
        _basics(body, found)
        outer = [b for b in found if xi.var not in free_vars(b)]
        if not outer:
            return _simplify_exists(xi.var, body)
        out = []
        for values in _cases(outer):
            inner = _simplify_exists(xi.var, _replace(body, values))
            if inner == FALSE:
                continue
            out.append(conj(_case_formula(values) + [inner]))
        return disj(out)
    if isinstance(xi, Compare):
        left, right = _flatten_terms(xi.left), _flatten_terms(xi.right)
        return _split_compare(Compare(left, xi.op, right, xi.index))
    raise TypeError(f"cannot flatten {xi!r}")


def _flatten_terms(e: PExpr) -> PExpr:
    if isinstance(e, Prop):
        return Prop(flatten(e.body), e.vars)
    if isinstance(e, CondProp):
        return CondProp(flatten(e.body), flatten(e.given), e.vars)
    if isinstance(e, (Add, Mul)):
        return type(e)(tuple(_flatten_terms(a) for a in e.args))
    return e


def _term_outer_basics(t) -> list[Formula]:
    found: list = []
    _basics(t.body, found)
    if isinstance(t, CondProp):
        _basics(t.given, found)
    return [b for b in found if not (free_vars(b) & set(t.vars))]


def _split_compare(c: Compare) -> Formula:
    for side in ("left", "right"):
        for t in pexpr_terms(getattr(c, side)):
            outer = _term_outer_basics(t)
            if not outer:
                continue
            out = []
            for values in _cases(outer):
                if isinstance(t, Prop):
                    t2 = Prop(_replace(t.body, values), t.vars)
                else:
                    t2 = CondProp(_replace(t.body, values), _replace(t.given, values), t.vars)
                c2 = _replace_term(c, t, t2)
                out.append(conj(_case_formula(values) + [_split_compare(c2)]))
            return disj(out)
    return c


def _replace_term(c: Compare, old, new) -> Compare:
    def go(e):
        if e is old:
            return new
        if isinstance(e, (Add, Mul)):
            return type(e)(tuple(go(a) for a in e.args))
        return e
    return Compare(go(c.left), c.op, go(c.right), c.index)


def is_flat(f) -> bool:
    """Scope audit: every binder mentions only its own variables and no constants."""
    if isinstance(f, Exists) or isinstance(f, Forall):
        if free_vars(f.body) - {f.var} or constants_of(f.body):
            return False
        return is_flat(f.body)
    if isinstance(f, Compare):
        for side in (f.left, f.right):
            for t in pexpr_terms(side):
                parts = [t.body] + ([t.given] if isinstance(t, CondProp) else [])
                for p in parts:
                    if free_vars(p) - set(t.vars) or constants_of(p) or not is_flat(p):
                        return False
        return True
    if isinstance(f, Formula):
        return all(is_flat(c) for c in children(f))
    return True


# ---------------------------------------------------------------------------
# canonical literals


@dataclass(frozen=True)
class ConstAtom:
    const: str
    atom: int  # 0-based


@dataclass(frozen=True)
class ExistsAtom:
    atom: int  # 0-based
    positive: bool = True


@dataclass(frozen=True)
class ZeroLit:
    t: Poly


@dataclass(frozen=True)
class PosLit:
    t: Poly


@dataclass(frozen=True)
class TolLit:
    t: Poly
    tp: Poly
    index: int | None
    negated: bool = False


Literal = Union[ConstAtom, ExistsAtom, ZeroLit, PosLit, TolLit]

_ZERO_POLY = Poly()
VACUOUS = ZeroLit(_ZERO_POLY)


def literal_key(l: Literal):
    if isinstance(l, ConstAtom):
        return (0, l.const, l.atom)
    if isinstance(l, ExistsAtom):
        return (1, l.atom, not l.positive)
    if isinstance(l, ZeroLit):
        return (2, l.t.sort_key())
    if isinstance(l, PosLit):
        return (3, l.t.sort_key())
    return (4, -1 if l.index is None else l.index, l.t.sort_key(), l.tp.sort_key(), l.negated)


def _linear_zero_vars(t: Poly) -> set[int] | None:
    if t.is_positive() and t.constant() == 0 and t.degree() == 1:
        return t.atom_vars()
    return None


def consistent(lits: Iterable[Literal]) -> bool:
    """The minimal consistency requirements plus a few cheap syntactic ones."""
    const_at: dict[str, int] = {}
    exists: dict[int, bool] = {}
    zeros: set = set()
    pos: set = set()
    tols: set = set()
    forced_zero: set[int] = set()
    lits = list(lits)
    for l in lits:
        if isinstance(l, ConstAtom):
            if const_at.setdefault(l.const, l.atom) != l.atom:
                return False
        elif isinstance(l, ExistsAtom):
            if exists.setdefault(l.atom, l.positive) != l.positive:
                return False
            if not l.positive:
                forced_zero.add(l.atom)
        elif isinstance(l, ZeroLit):
            zeros.add(l.t)
            zv = _linear_zero_vars(l.t)
            if zv:
                forced_zero |= zv
        elif isinstance(l, PosLit):
            pos.add(l.t)
        else:
            tols.add((l.t, l.tp, l.index, l.negated))
    if zeros & pos:
        return False
    if any((t, tp, i, not n) in tols for t, tp, i, n in tols):
        return False
    if any(a in forced_zero for a in const_at.values()):
        return False
    if any(p and a in forced_zero for a, p in exists.items()):
        return False
    for t in pos:
        if t.atom_vars() and t.constant() == 0 and t.atom_vars() <= forced_zero:
            return False
    return True


DNF = list  # list of frozensets of literals
_TRUE_DNF: DNF = [frozenset()]
_FALSE_DNF: DNF = []


def _absorb(ds: Iterable[frozenset]) -> DNF:
    uniq = sorted(set(ds), key=len)
    out: list[frozenset] = []
    for d in uniq:
        if not any(o <= d for o in out):
            out.append(d)
    return out


def _dnf_and(a: DNF, b: DNF) -> DNF:
    out = []
    for x in a:
        for y in b:
            z = x | y
            if consistent(z):
                out.append(z)
    return _absorb(out)


def _dnf_or(a: DNF, b: DNF) -> DNF:
    return _absorb(list(a) + list(b))


# ---------------------------------------------------------------------------
# proportion expressions -> polynomials over atoms


def _eval_qf(f: Formula, assign: Mapping[str, int], vocab: Vocabulary) -> bool:
    if isinstance(f, Truth):
        return f.value
    if isinstance(f, Pred):
        (arg,) = f.args
        if not isinstance(arg, Var):
            raise SyntaxRestrictionError("constant inside a proportion term after flattening")
        return atom_holds(assign[arg.name], vocab.k, vocab.pred_index(f.name))
    if isinstance(f, Not):
        return not _eval_qf(f.arg, assign, vocab)
    if isinstance(f, And):
        return all(_eval_qf(a, assign, vocab) for a in f.args)
    if isinstance(f, Or):
        return any(_eval_qf(a, assign, vocab) for a in f.args)
    if isinstance(f, Implies):
        return (not _eval_qf(f.left, assign, vocab)) or _eval_qf(f.right, assign, vocab)
    raise SyntaxRestrictionError(f"unexpected {type(f).__name__} inside a flat binder")


def term_poly(e: PExpr, vocab: Vocabulary) -> Poly:
    """Polynomial over u (and eps) of a conditional-free flat proportion expression."""
    if isinstance(e, Num):
        return Poly.const(e.value)
    if isinstance(e, Eps):
        return Poly.eps(e.index)
    if isinstance(e, Prop):
        fv = free_vars(e.body)
        used = [v for v in e.vars if v in fv]
        total = Poly()
        for tup in itertools.product(range(vocab.K), repeat=len(used)):
            if _eval_qf(e.body, dict(zip(used, tup)), vocab):
                mono = Poly.const(1)
                for j in tup:
                    mono = mono * Poly.u(j)
                total = total + mono
        return _collapse(total, vocab)
    if isinstance(e, CondProp):
        raise RandWorldsError("conditional proportions must be multiplied out first")
    if isinstance(e, Add):
        out = Poly()
        for a in e.args:
            out = out + term_poly(a, vocab)
        return out
    if isinstance(e, Mul):
        out = Poly.const(1)
        for a in e.args:
            out = out * term_poly(a, vocab)
        return out
    raise TypeError(f"not a proportion expression: {e!r}")


def _collapse(p: Poly, vocab: Vocabulary) -> Poly:
    # with a single atom the simplex is one point and u1 = 1
    if vocab.K == 1 and 0 in p.variables():
        return p.subs({0: 1})
    return p


# polynomial sign conditions as DNFs


def _norm_pos(p: Poly) -> Poly:
    return p if p.all_nonneg() else -p


def _leq0(p: Poly) -> DNF:
    if p.is_zero() or p.all_nonpos():
        return _TRUE_DNF
    if p.all_nonneg():
        return _FALSE_DNF if p.constant() > 0 else [frozenset([ZeroLit(p)])]
    return [frozenset([TolLit(p, Poly.const(1), None, False)])]


def _gt0(p: Poly) -> DNF:
    if p.is_zero() or p.all_nonpos():
        return _FALSE_DNF
    if p.all_nonneg():
        return _TRUE_DNF if p.constant() > 0 else [frozenset([PosLit(p)])]
    return [frozenset([TolLit(p, Poly.const(1), None, True)])]


def _eq0(p: Poly) -> DNF:
    if p.is_zero():
        return _TRUE_DNF
    if p.all_nonneg() or p.all_nonpos():
        if p.constant() != 0:
            return _FALSE_DNF
        return [frozenset([ZeroLit(_norm_pos(p))])]
    return _dnf_and(_leq0(p), _leq0(-p))


def _neq0(p: Poly) -> DNF:
    if p.is_zero():
        return _FALSE_DNF
    if p.all_nonneg() or p.all_nonpos():
        if p.constant() != 0:
            return _TRUE_DNF
        return [frozenset([PosLit(_norm_pos(p))])]
    return _dnf_or(_gt0(p), _gt0(-p))


def _zero_hitting_sets(tp: Poly, cap: int = 64) -> list[set[int]] | None:
    """Variable sets whose vanishing makes every monomial of tp vanish."""
    monos = [frozenset(v for v, _ in m) for m in tp.terms]
    sets: list[set[int]] = [set()]
    for m in monos:
        nxt = []
        for s in sets:
            if s & m:
                nxt.append(s)
            else:
                nxt.extend(s | {v} for v in m)
        sets = [s for s in nxt if not any(o < s for o in nxt)]
        if len(sets) > cap:
            return None
    return sets


def _vanishes_with(t: Poly, tp: Poly) -> bool:
    sets = _zero_hitting_sets(tp)
    if sets is None:
        return False
    return all(t.subs({v: 0 for v in s}).is_zero() for s in sets)


def _tolerance_dnf(p: Poly, negated: bool) -> DNF:
    """Literal(s) for p <= 0 (or its negation), p possibly mentioning eps."""
    eps = p.eps_indices()
    if not eps:
        return _gt0(p) if negated else _leq0(p)
    if len(eps) == 1:
        (i,) = eps
        split = p.split_eps(i)
        if split is not None:
            t, minus_tp = split
            tp = -minus_tp
            if tp.is_positive() and not t.eps_indices() and not tp.eps_indices():
                return _guarded(t, tp, i, negated)
    lit = TolLit(p, Poly.const(1), None, negated)
    return [frozenset([lit])]


def _guarded(t: Poly, tp: Poly, i: int, negated: bool) -> DNF:
    if tp.is_constant():
        if not negated and t.all_nonpos():
            return _TRUE_DNF
        if negated and t.all_nonpos():
            return _FALSE_DNF
        return [frozenset([TolLit(t, tp, i, negated)])]
    guard = PosLit(tp)
    main = [frozenset([guard, TolLit(t, tp, i, negated)])]
    if t.all_nonpos():
        main = _TRUE_DNF if not negated else _FALSE_DNF
        main = _dnf_and([frozenset([guard])], main)
    # the t' = 0 branch: the comparison then reads t <= 0
    if _vanishes_with(t, tp):
        at_zero = _FALSE_DNF if negated else _TRUE_DNF
    else:
        at_zero = _gt0(t) if negated else _leq0(t)
    zero_branch = _dnf_and([frozenset([ZeroLit(tp)])], at_zero)
    return _dnf_or(zero_branch, main)


# ---------------------------------------------------------------------------
# canonical form


@dataclass(frozen=True)
class CanonicalForm:
    vocab: Vocabulary
    disjuncts: tuple[tuple[Literal, ...], ...]

    @classmethod
    def from_dnf(cls, vocab: Vocabulary, dnf: DNF) -> "CanonicalForm":
        ds = []
        for d in dnf:
            lits = tuple(sorted(d, key=literal_key)) if d else (VACUOUS,)
            ds.append(lits)
        ds.sort(key=lambda lits: [literal_key(l) for l in lits])
        return cls(vocab, tuple(ds))

    def as_set(self) -> frozenset:
        return frozenset(frozenset(l for l in d if l != VACUOUS) for d in self.disjuncts)

    def same_as(self, other: "CanonicalForm") -> bool:
        return self.as_set() == other.as_set()

    def is_false(self) -> bool:
        return not self.disjuncts

    def tolerance_indices(self) -> set[int]:
        out = set()
        for d in self.disjuncts:
            for l in d:
                if isinstance(l, TolLit):
                    if l.index is not None:
                        out.add(l.index)
                    out |= l.t.eps_indices()
        return out

    def constants(self) -> set[str]:
        return {l.const for d in self.disjuncts for l in d if isinstance(l, ConstAtom)}

    def conjoin(self, other: "CanonicalForm") -> "CanonicalForm":
        a = [frozenset(l for l in d if l != VACUOUS) for d in self.disjuncts]
        b = [frozenset(l for l in d if l != VACUOUS) for d in other.disjuncts]
        return CanonicalForm.from_dnf(self.vocab, _dnf_and(a, b))

    def to_formula(self) -> Formula:
        return disj(conj(literal_formula(l, self.vocab) for l in d) for d in self.disjuncts) \
            if self.disjuncts else FALSE

    def __str__(self):
        from .parser import format_formula
        return format_formula(self.to_formula())

    def size(self) -> int:
        return sum(len(d) for d in self.disjuncts)


def atom_formula(j: int, term, vocab: Vocabulary) -> Formula:
    return atoms_of(vocab)[j].formula(term, vocab)


def poly_pexpr(p: Poly, vocab: Vocabulary, var: str = "x") -> PExpr:
    """Proportion expression denoting ``p`` with u_j read as ||A_j(x)||_x."""
    if p.is_zero():
        return ZERO
    terms = []
    from .polynomial import _mono_key
    for m, c in sorted(p.terms.items(), key=lambda mc: _mono_key(mc[0])):
        factors: list[PExpr] = []
        for v, e in m:
            if v >= 0:
                f = Prop(atom_formula(v, Var(var), vocab), (var,))
            else:
                f = Eps(-v)
            factors.extend([f] * e)
        if c != 1 or not factors:
            factors.insert(0, Num(c))
        terms.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
    return terms[0] if len(terms) == 1 else Add(tuple(terms))


def literal_formula(l: Literal, vocab: Vocabulary) -> Formula:
    if isinstance(l, ConstAtom):
        return atom_formula(l.atom, Const(l.const), vocab)
    if isinstance(l, ExistsAtom):
        f = Exists("x", atom_formula(l.atom, Var("x"), vocab))
        return f if l.positive else Not(f)
    if isinstance(l, ZeroLit):
        return Compare(poly_pexpr(l.t, vocab), EXACT_EQ, ZERO)
    if isinstance(l, PosLit):
        return Not(Compare(poly_pexpr(l.t, vocab), EXACT_LEQ, ZERO))
    if l.index is None:
        rhs = ZERO
    elif l.tp == Poly.const(1):
        rhs = Eps(l.index)
    else:
        tp = poly_pexpr(l.tp, vocab)
        rhs = Mul(((tp,) if not isinstance(tp, Mul) else tp.args) + (Eps(l.index),))
    c = Compare(poly_pexpr(l.t, vocab), EXACT_LEQ, rhs)
    return Not(c) if l.negated else c


def format_literal(l: Literal, vocab: Vocabulary) -> str:
    if isinstance(l, ConstAtom):
        return f"A{l.atom + 1}({l.const})"
    if isinstance(l, ExistsAtom):
        return ("" if l.positive else "!") + f"exists x A{l.atom + 1}(x)"
    if isinstance(l, ZeroLit):
        return f"{format_poly(l.t)} = 0"
    if isinstance(l, PosLit):
        return f"{format_poly(l.t)} > 0"
    rhs = "0" if l.index is None else (
        f"e{l.index}" if l.tp == Poly.const(1) else f"({format_poly(l.tp)})*e{l.index}")
    op = ">" if l.negated else "<="
    return f"{format_poly(l.t)} {op} {rhs}"


# ---------------------------------------------------------------------------
# driver


def _nnf(f: Formula, positive: bool = True) -> Formula:
    if isinstance(f, Truth):
        return f if positive else Truth(not f.value)
    if isinstance(f, Not):
        return _nnf(f.arg, not positive)
    if isinstance(f, And):
        parts = tuple(_nnf(a, positive) for a in f.args)
        return And(parts) if positive else Or(parts)
    if isinstance(f, Or):
        parts = tuple(_nnf(a, positive) for a in f.args)
        return Or(parts) if positive else And(parts)
    if isinstance(f, Implies):
        return _nnf(Or((Not(f.left), f.right)), positive)
    return f if positive else Not(f)


def _leaf_dnf(f: Formula, positive: bool, vocab: Vocabulary) -> DNF:
    if isinstance(f, Pred):
        (arg,) = f.args
        if not isinstance(arg, Const):
            raise SyntaxRestrictionError("free variable at the top level of a knowledge base")
        pi = vocab.pred_index(f.name)
        return [frozenset([ConstAtom(arg.name, j)]) for j in range(vocab.K)
                if atom_holds(j, vocab.k, pi) == positive]
    if isinstance(f, Exists):
        atoms = [j for j in range(vocab.K) if _eval_qf(f.body, {f.var: j}, vocab)]
        if positive:
            return [frozenset([ExistsAtom(j, True)]) for j in atoms]
        return [frozenset(ExistsAtom(j, False) for j in atoms)]
    if isinstance(f, Compare):
        p = term_poly(f.left, vocab) - term_poly(f.right, vocab)
        if f.op == EXACT_LEQ:
            return _tolerance_dnf(p, not positive)
        if f.op == EXACT_EQ:
            if p.eps_indices():
                both = _dnf_and(_tolerance_dnf(p, False), _tolerance_dnf(-p, False))
                if positive:
                    return both
                return _dnf_or(_tolerance_dnf(p, True), _tolerance_dnf(-p, True))
            return _eq0(p) if positive else _neq0(p)
        raise RandWorldsError("approximate comparison left after translation")
    raise SyntaxRestrictionError(f"unexpected {type(f).__name__} in a knowledge base")


def _to_dnf(f: Formula, vocab: Vocabulary) -> DNF:
    if isinstance(f, Truth):
        return _TRUE_DNF if f.value else _FALSE_DNF
    if isinstance(f, And):
        out = _TRUE_DNF
        for a in f.args:
            out = _dnf_and(out, _to_dnf(a, vocab))
            if not out:
                break
        return out
    if isinstance(f, Or):
        out = _FALSE_DNF
        for a in f.args:
            out = _dnf_or(out, _to_dnf(a, vocab))
        return out
    if isinstance(f, Not):
        return _leaf_dnf(f.arg, False, vocab)
    return _leaf_dnf(f, True, vocab)


def prepare(kb: Formula) -> Formula:
    """desugar, rename apart, flatten and translate to the exact language."""
    f = rename_apart(desugar(kb))
    f = flatten(f)
    return to_exact(f)


def to_canonical(kb: Formula, vocab: Vocabulary) -> CanonicalForm:
    if constants_of(kb) - set(vocab.constants):
        raise RandWorldsError("knowledge base mentions undeclared constants")
    exact = prepare(kb)
    return CanonicalForm.from_dnf(vocab, _to_dnf(_nnf(exact), vocab))


def size_description_formula(sigma: Sequence[bool], vocab: Vocabulary) -> CanonicalForm:
    """Canonical form of the size description with the given existence bits."""
    return CanonicalForm.from_dnf(vocab, [frozenset(ExistsAtom(j, b) for j, b in enumerate(sigma))])


def negated_size_description(sigma: Sequence[bool], vocab: Vocabulary) -> CanonicalForm:
    return CanonicalForm.from_dnf(vocab, [frozenset([ExistsAtom(j, not b)]) for j, b in enumerate(sigma)])
