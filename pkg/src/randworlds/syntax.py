"""Vocabularies, the formula / proportion-expression AST, and atoms.

Formulas are immutable dataclasses. Variables and constants are kept apart at
the term level (``Var`` vs ``Const``) so that later passes never have to
consult the vocabulary to tell them apart.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count
from typing import Iterable, Iterator, Mapping, Union


class RandWorldsError(Exception):
    """Base class for user-facing errors raised by this package."""


class SyntaxRestrictionError(RandWorldsError):
    pass


# ---------------------------------------------------------------------------
# vocabulary


@dataclass(frozen=True)
class Vocabulary:
    predicates: tuple[str, ...] = ()
    constants: tuple[str, ...] = ()
    relations: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "predicates", tuple(self.predicates))
        object.__setattr__(self, "constants", tuple(self.constants))
        object.__setattr__(self, "relations", tuple((n, int(a)) for n, a in self.relations))
        names = list(self.predicates) + list(self.constants) + [n for n, _ in self.relations]
        if len(set(names)) != len(names):
            raise RandWorldsError(f"duplicate symbol in vocabulary: {names}")
        for name, arity in self.relations:
            if arity < 2:
                raise RandWorldsError(f"relation {name} must have arity >= 2")

    @property
    def k(self) -> int:
        return len(self.predicates)

    @property
    def K(self) -> int:
        return 1 << len(self.predicates)

    def pred_index(self, name: str) -> int:
        return self.predicates.index(name)

    def arity(self, name: str) -> int | None:
        if name in self.predicates:
            return 1
        for n, a in self.relations:
            if n == name:
                return a
        return None

    def with_constants(self, extra: Iterable[str]) -> "Vocabulary":
        consts = list(self.constants)
        for c in extra:
            if c not in consts:
                consts.append(c)
        return Vocabulary(self.predicates, tuple(consts), self.relations)


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


Term = Union[Var, Const]


# ---------------------------------------------------------------------------
# formulas


class Formula:
    """Marker base class for formula nodes."""

    __slots__ = ()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Truth(Formula):
    value: bool


TRUE = Truth(True)
FALSE = Truth(False)


@dataclass(frozen=True)
class Pred(Formula):
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Equals(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


# comparison operators
APPROX_EQ = "~="
APPROX_LEQ = "<~"
EXACT_EQ = "="
EXACT_LEQ = "<="
APPROX_OPS = (APPROX_EQ, APPROX_LEQ)
EXACT_OPS = (EXACT_EQ, EXACT_LEQ)


@dataclass(frozen=True)
class Compare(Formula):
    left: "PExpr"
    op: str
    right: "PExpr"
    index: int | None = None

    def __post_init__(self):
        if self.op in APPROX_OPS:
            if self.index is None or int(self.index) < 1:
                raise RandWorldsError("approximate comparison needs a positive tolerance index")
        elif self.op in EXACT_OPS:
            if self.index is not None:
                raise RandWorldsError("exact comparison carries no tolerance index")
        else:
            raise RandWorldsError(f"unknown comparison operator {self.op!r}")


# ---------------------------------------------------------------------------
# proportion expressions


class PExpr:
    __slots__ = ()


@dataclass(frozen=True)
class Num(PExpr):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Prop(PExpr):
    """Unconditional proportion term ||body||_vars."""

    body: Formula
    vars: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        if not self.vars:
            raise RandWorldsError("proportion term needs at least one bound variable")
        if len(set(self.vars)) != len(self.vars):
            raise RandWorldsError("repeated variable in proportion subscript")


@dataclass(frozen=True)
class CondProp(PExpr):
    """Conditional proportion term ||body | given||_vars."""

    body: Formula
    given: Formula
    vars: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        if not self.vars:
            raise RandWorldsError("proportion term needs at least one bound variable")
        if len(set(self.vars)) != len(self.vars):
            raise RandWorldsError("repeated variable in proportion subscript")


@dataclass(frozen=True)
class Add(PExpr):
    args: tuple[PExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Mul(PExpr):
    args: tuple[PExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Eps(PExpr):
    index: int


ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))


def neg(e: PExpr) -> PExpr:
    if isinstance(e, Num):
        return Num(-e.value)
    return Mul((Num(Fraction(-1)), e))


def sub(a: PExpr, b: PExpr) -> PExpr:
    return Add((a, neg(b)))


# ---------------------------------------------------------------------------
# tolerance vectors


class ToleranceVector(Mapping[int, Fraction]):
    """Immutable map from tolerance index to a positive rational."""

    def __init__(self, values: Mapping[int, object] | None = None, *, default=None):
        vals = {}
        for i, t in dict(values or {}).items():
            vals[int(i)] = _to_fraction(t)
        for i, t in vals.items():
            if i < 1:
                raise RandWorldsError(f"tolerance index must be positive, got {i}")
            if t <= 0:
                raise RandWorldsError(f"tolerance tau_{i} must be positive, got {t}")
        self._vals = vals
        self._default = None if default is None else _to_fraction(default)
        if self._default is not None and self._default <= 0:
            raise RandWorldsError("default tolerance must be positive")

    @classmethod
    def uniform(cls, value, indices: Iterable[int] = ()) -> "ToleranceVector":
        return cls({i: value for i in indices}, default=value)

    def __getitem__(self, i):
        if i in self._vals:
            return self._vals[i]
        if self._default is not None:
            return self._default
        raise RandWorldsError(f"no tolerance given for index {i}")

    def __contains__(self, i):
        return i in self._vals or self._default is not None

    def __iter__(self):
        return iter(sorted(self._vals))

    def __len__(self):
        return len(self._vals)

    def require(self, indices: Iterable[int]) -> None:
        missing = [i for i in indices if i not in self]
        if missing:
            raise RandWorldsError(f"missing tolerance values for indices {sorted(missing)}")

    def restrict(self, indices: Iterable[int]) -> dict[int, Fraction]:
        return {i: self[i] for i in indices}

    def __repr__(self):
        inner = ", ".join(f"{i}: {v}" for i, v in sorted(self._vals.items()))
        if self._default is not None:
            inner += f"; default {self._default}"
        return f"ToleranceVector({inner})"


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # decimal reading, so that 0.05 means 1/20 rather than its binary expansion
        return Fraction(repr(x))
    return Fraction(x)


# ---------------------------------------------------------------------------
# atoms


@dataclass(frozen=True)
class Atom:
    """Atom A_j over the unary predicates.

    ``mask`` has bit ``k-1-i`` set when predicate ``i`` is negated, so
    ``index - 1 == mask``.
    """

    index: int
    mask: int
    k: int

    def holds(self, pred_i: int) -> bool:
        return not (self.mask >> (self.k - 1 - pred_i)) & 1

    def literals(self, vocab: Vocabulary) -> list[tuple[str, bool]]:
        return [(p, self.holds(i)) for i, p in enumerate(vocab.predicates)]

    def formula(self, term: Term, vocab: Vocabulary) -> Formula:
        lits = []
        for name, pos in self.literals(vocab):
            a = Pred(name, (term,))
            lits.append(a if pos else Not(a))
        if not lits:
            return TRUE
        if len(lits) == 1:
            return lits[0]
        return And(tuple(lits))

    def label(self, vocab: Vocabulary) -> str:
        if vocab.k == 0:
            return "T"
        return "&".join(p if pos else "!" + p for p, pos in self.literals(vocab))


def atom_holds(mask: int, k: int, pred_i: int) -> bool:
    return not (mask >> (k - 1 - pred_i)) & 1


def atoms_of(vocab: Vocabulary) -> list[Atom]:
    k = vocab.k
    return [Atom(m + 1, m, k) for m in range(1 << k)]


# ---------------------------------------------------------------------------
# traversal helpers


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, Implies):
        return (f.left, f.right)
    if isinstance(f, (Exists, Forall)):
        return (f.body,)
    return ()


def pexpr_terms(e: PExpr) -> Iterator[PExpr]:
    """Yield every proportion term (conditional or not) in ``e``, outermost only."""
    if isinstance(e, (Prop, CondProp)):
        yield e
    elif isinstance(e, (Add, Mul)):
        for a in e.args:
            yield from pexpr_terms(a)


def free_vars(f) -> frozenset[str]:
    if isinstance(f, Formula):
        return _fv_formula(f)
    return _fv_pexpr(f)


def _fv_terms(args) -> set[str]:
    return {t.name for t in args if isinstance(t, Var)}


def _fv_formula(f: Formula) -> frozenset[str]:
    if isinstance(f, Truth):
        return frozenset()
    if isinstance(f, Pred):
        return frozenset(_fv_terms(f.args))
    if isinstance(f, Equals):
        return frozenset(_fv_terms((f.left, f.right)))
    if isinstance(f, (Exists, Forall)):
        return _fv_formula(f.body) - {f.var}
    if isinstance(f, Compare):
        return _fv_pexpr(f.left) | _fv_pexpr(f.right)
    out = frozenset()
    for c in children(f):
        out |= _fv_formula(c)
    return out


def _fv_pexpr(e: PExpr) -> frozenset[str]:
    if isinstance(e, Prop):
        return _fv_formula(e.body) - set(e.vars)
    if isinstance(e, CondProp):
        return (_fv_formula(e.body) | _fv_formula(e.given)) - set(e.vars)
    if isinstance(e, (Add, Mul)):
        out = frozenset()
        for a in e.args:
            out |= _fv_pexpr(a)
        return out
    return frozenset()


def constants_of(f) -> frozenset[str]:
    out: set[str] = set()
    _collect(f, out, "const")
    return frozenset(out)


def predicates_of(f) -> frozenset[str]:
    out: set[str] = set()
    _collect(f, out, "pred")
    return frozenset(out)


def tolerance_indices(f) -> frozenset[int]:
    out: set[int] = set()
    _collect(f, out, "tol")
    return frozenset(out)


def _collect(node, out: set, what: str) -> None:
    if isinstance(node, Pred):
        if what == "pred":
            out.add(node.name)
        elif what == "const":
            out.update(t.name for t in node.args if isinstance(t, Const))
    elif isinstance(node, Equals):
        if what == "const":
            out.update(t.name for t in (node.left, node.right) if isinstance(t, Const))
    elif isinstance(node, Compare):
        if what == "tol" and node.index is not None:
            out.add(node.index)
        _collect(node.left, out, what)
        _collect(node.right, out, what)
    elif isinstance(node, Formula):
        for c in children(node):
            _collect(c, out, what)
    elif isinstance(node, Prop):
        _collect(node.body, out, what)
    elif isinstance(node, CondProp):
        _collect(node.body, out, what)
        _collect(node.given, out, what)
    elif isinstance(node, (Add, Mul)):
        for a in node.args:
            _collect(a, out, what)
    elif isinstance(node, Eps):
        if what == "tol":
            out.add(node.index)


def has_quantifier(f: Formula) -> bool:
    if isinstance(f, (Exists, Forall)):
        return True
    return any(has_quantifier(c) for c in children(f))


def has_proportion(f: Formula) -> bool:
    if isinstance(f, Compare):
        return True
    return any(has_proportion(c) for c in children(f))


def has_equality(f) -> bool:
    if isinstance(f, Equals):
        return True
    if isinstance(f, Compare):
        return any(has_equality(t.body) or (isinstance(t, CondProp) and has_equality(t.given))
                   for side in (f.left, f.right) for t in pexpr_terms(side))
    return any(has_equality(c) for c in children(f))


def relations_of(f, vocab: Vocabulary) -> frozenset[str]:
    rels = {n for n, _ in vocab.relations}
    return frozenset(p for p in predicates_of(f) if p in rels)


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out = []
        for a in f.args:
            out.extend(conjuncts(a))
        return out
    if f == TRUE:
        return []
    return [f]


def conj(fs: Iterable[Formula]) -> Formula:
    fs = [f for f in fs if f != TRUE]
    if any(f == FALSE for f in fs):
        return FALSE
    if not fs:
        return TRUE
    if len(fs) == 1:
        return fs[0]
    return And(tuple(fs))


def disj(fs: Iterable[Formula]) -> Formula:
    fs = [f for f in fs if f != FALSE]
    if any(f == TRUE for f in fs):
        return TRUE
    if not fs:
        return FALSE
    if len(fs) == 1:
        return fs[0]
    return Or(tuple(fs))


# ---------------------------------------------------------------------------
# substitution and renaming


def substitute(f, mapping: Mapping[str, Term]):
    """Replace free occurrences of variables by terms (capture is not checked)."""
    if not mapping:
        return f
    if isinstance(f, Truth):
        return f
    if isinstance(f, Pred):
        return Pred(f.name, tuple(_sub_term(t, mapping) for t in f.args))
    if isinstance(f, Equals):
        return Equals(_sub_term(f.left, mapping), _sub_term(f.right, mapping))
    if isinstance(f, Not):
        return Not(substitute(f.arg, mapping))
    if isinstance(f, And):
        return And(tuple(substitute(a, mapping) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(substitute(a, mapping) for a in f.args))
    if isinstance(f, Implies):
        return Implies(substitute(f.left, mapping), substitute(f.right, mapping))
    if isinstance(f, (Exists, Forall)):
        inner = {v: t for v, t in mapping.items() if v != f.var}
        return type(f)(f.var, substitute(f.body, inner))
    if isinstance(f, Compare):
        return Compare(substitute(f.left, mapping), f.op, substitute(f.right, mapping), f.index)
    if isinstance(f, Prop):
        inner = {v: t for v, t in mapping.items() if v not in f.vars}
        return Prop(substitute(f.body, inner), f.vars)
    if isinstance(f, CondProp):
        inner = {v: t for v, t in mapping.items() if v not in f.vars}
        return CondProp(substitute(f.body, inner), substitute(f.given, inner), f.vars)
    if isinstance(f, Add):
        return Add(tuple(substitute(a, mapping) for a in f.args))
    if isinstance(f, Mul):
        return Mul(tuple(substitute(a, mapping) for a in f.args))
    return f


def _sub_term(t: Term, mapping) -> Term:
    if isinstance(t, Var) and t.name in mapping:
        return mapping[t.name]
    return t


def bound_names(f) -> list[str]:
    out: list[str] = []

    def walk(n):
        if isinstance(n, (Exists, Forall)):
            out.append(n.var)
            walk(n.body)
        elif isinstance(n, Compare):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, Formula):
            for c in children(n):
                walk(c)
        elif isinstance(n, Prop):
            out.extend(n.vars)
            walk(n.body)
        elif isinstance(n, CondProp):
            out.extend(n.vars)
            walk(n.body)
            walk(n.given)
        elif isinstance(n, (Add, Mul)):
            for a in n.args:
                walk(a)

    walk(f)
    return out


def all_var_names(f) -> set[str]:
    names = set(bound_names(f)) | set(free_vars(f))
    return names


@dataclass
class _Renamer:
    taken: set[str]
    seen: set[str] = field(default_factory=set)

    def fresh(self, base: str) -> str:
        root = base.split("_")[0] if "_" in base else base
        for n in count(1):
            cand = f"{root}_{n}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand
        raise AssertionError

    def binder(self, v: str) -> tuple[str, dict]:
        if v in self.seen:
            new = self.fresh(v)
            self.seen.add(new)
            return new, {v: Var(new)}
        self.seen.add(v)
        return v, {}


def rename_apart(f):
    """Rename binders so that no two of them share a variable name.

    Free variables are treated as already used, so a binder never captures them.
    """
    r = _Renamer(taken=all_var_names(f), seen=set(free_vars(f)))
    return _rename(f, r)


def _rename(f, r: _Renamer):
    if isinstance(f, (Exists, Forall)):
        v, m = r.binder(f.var)
        body = substitute(f.body, m) if m else f.body
        return type(f)(v, _rename(body, r))
    if isinstance(f, Not):
        return Not(_rename(f.arg, r))
    if isinstance(f, And):
        return And(tuple(_rename(a, r) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_rename(a, r) for a in f.args))
    if isinstance(f, Implies):
        return Implies(_rename(f.left, r), _rename(f.right, r))
    if isinstance(f, Compare):
        return Compare(_rename(f.left, r), f.op, _rename(f.right, r), f.index)
    if isinstance(f, (Prop, CondProp)):
        new_vars, m = [], {}
        for v in f.vars:
            nv, mv = r.binder(v)
            new_vars.append(nv)
            m.update(mv)
        body = _rename(substitute(f.body, m), r)
        if isinstance(f, Prop):
            return Prop(body, tuple(new_vars))
        given = _rename(substitute(f.given, m), r)
        return CondProp(body, given, tuple(new_vars))
    if isinstance(f, (Add, Mul)):
        return type(f)(tuple(_rename(a, r) for a in f.args))
    return f


# ---------------------------------------------------------------------------
# essentially propositional formulas


def is_essentially_propositional(xi: Formula, var: str | None = None) -> bool:
    """Quantifier-free, proportion-free, no constants, at most one free variable."""
    if has_quantifier(xi) or has_proportion(xi) or constants_of(xi):
        return False
    fv = free_vars(xi)
    if len(fv) > 1 or (var is not None and fv - {var}):
        return False
    return _only_unary(xi)


def _only_unary(f: Formula) -> bool:
    if isinstance(f, Pred):
        return len(f.args) == 1
    if isinstance(f, Equals):
        return False
    return all(_only_unary(c) for c in children(f))


def eval_at_atom(xi: Formula, mask: int, vocab: Vocabulary) -> bool:
    """Truth of a quantifier-free unary formula at an element of atom ``mask``.

    Every predicate application is read as applying to that element, so this
    also serves for formulas about a single constant.
    """
    if isinstance(xi, Truth):
        return xi.value
    if isinstance(xi, Pred):
        if len(xi.args) != 1:
            raise SyntaxRestrictionError(f"non-unary predicate {xi.name} in propositional context")
        return atom_holds(mask, vocab.k, vocab.pred_index(xi.name))
    if isinstance(xi, Not):
        return not eval_at_atom(xi.arg, mask, vocab)
    if isinstance(xi, And):
        return all(eval_at_atom(a, mask, vocab) for a in xi.args)
    if isinstance(xi, Or):
        return any(eval_at_atom(a, mask, vocab) for a in xi.args)
    if isinstance(xi, Implies):
        return (not eval_at_atom(xi.left, mask, vocab)) or eval_at_atom(xi.right, mask, vocab)
    raise SyntaxRestrictionError(f"formula is not essentially propositional: {type(xi).__name__}")


def atom_set(xi: Formula, vocab: Vocabulary) -> frozenset[int]:
    """Return the set of 1-based atom indices A with A(x) |= xi."""
    if not is_essentially_propositional(xi):
        raise SyntaxRestrictionError("atom_set needs an essentially propositional formula")
    return frozenset(m + 1 for m in range(vocab.K) if eval_at_atom(xi, m, vocab))


def atom_set_of_constant(xi: Formula, const: str, vocab: Vocabulary) -> frozenset[int]:
    """Atoms in which placing ``const`` makes the quantifier-free ``xi`` true."""
    if has_quantifier(xi) or has_proportion(xi) or has_equality(xi):
        raise SyntaxRestrictionError("expected a quantifier-free unary formula about one constant")
    if constants_of(xi) - {const} or free_vars(xi):
        raise SyntaxRestrictionError(f"formula mentions more than the constant {const}")
    return frozenset(m + 1 for m in range(vocab.K) if eval_at_atom(xi, m, vocab))
