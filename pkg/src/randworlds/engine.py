"""Degrees of belief from maximum-entropy points.

``believe`` classifies the query and picks a route:

* simple queries about one constant use F[phi|psi] at the maxent point of
  the zero-tolerance space, guarded by essential positivity;
* separable and unary quantified queries weight complete descriptions of
  the named constants by F[D] and decide each class with a 0/1 limit,
  guarded by a stability check at probe tolerances;
* everything else either runs tolerance probes (to expose nonrobustness) or
  is refused.

With explicit tolerances the engine computes the fixed-tau value instead of
the limit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .canonical import CanonicalForm, ConstAtom, to_canonical
from .constraints import (
    _tau_dict, check_stability, format_size_description, gamma, is_essentially_positive,
    size_description_of, solution_space,
)
from .maxent import DEFAULT as MAXENT_DEFAULT, MaxEntConfig, bound_statistic, maximize
from .polynomial import Poly
from .semantics import World, evaluate
from .syntax import (
    And, Const, Equals, Exists, Forall, Formula, Implies, Not, Or, Pred,
    RandWorldsError, SyntaxRestrictionError, Var, Vocabulary,
    conj, conjuncts, constants_of, eval_at_atom, has_equality,
    has_proportion, has_quantifier, is_essentially_propositional, relations_of,
)

DEFINED = "defined"
INTERVAL = "interval"
NONROBUST = "nonrobust"
INAPPLICABLE = "maxent-inapplicable"
UNSUPPORTED = "unsupported"


@dataclass(frozen=True)
class BeliefConfig:
    maxent: MaxEntConfig = MAXENT_DEFAULT
    probe_scales: tuple[float, ...] = (1e-1, 1e-2, 1e-3)
    max_permutations: int = 6
    spread_factor: float = 10.0
    direct_taus: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    stability_taus: tuple[float, ...] = (1e-1, 1e-2, 1e-3)
    zero_threshold: float = 1e-9
    point_tol: float = 1e-6
    description_budget: int = 100_000

    def as_dict(self):
        d = dict(self.__dict__)
        d["maxent"] = self.maxent.as_dict()
        return d


DEFAULT = BeliefConfig()


# ---------------------------------------------------------------------------
# query classes


@dataclass(frozen=True)
class SimpleQuery:
    phi: Formula
    const: str
    phi_x: Formula
    psi_x: Formula
    kb_rest: Formula


@dataclass(frozen=True)
class SeparableQuery:
    phi: Formula
    psi: Formula
    kb_rest: Formula
    Z: tuple[str, ...]


@dataclass(frozen=True)
class UnaryQuantified(SeparableQuery):
    pass


@dataclass(frozen=True)
class NonSeparable:
    phi: Formula
    kb: Formula
    reason: str


@dataclass(frozen=True)
class Unsupported:
    reason: str


QueryClass = Union[SimpleQuery, SeparableQuery, UnaryQuantified, NonSeparable, Unsupported]


def class_name(q) -> str:
    return {SimpleQuery: "simple", SeparableQuery: "separable", UnaryQuantified: "unary-quantified",
            NonSeparable: "not-separable", Unsupported: "unsupported"}[type(q)]


def _qf_pf(f: Formula) -> bool:
    return not has_quantifier(f) and not has_proportion(f)


def split_kb(phi: Formula, kb: Formula) -> tuple[Formula, Formula, tuple[str, ...]]:
    """Pull out the quantifier- and proportion-free conjuncts tied to phi's constants."""
    Z = set(constants_of(phi))
    parts = conjuncts(kb)
    psi, rest = [], list(parts)
    changed = True
    while changed:
        changed = False
        for f in list(rest):
            if _qf_pf(f) and constants_of(f) & Z:
                rest.remove(f)
                psi.append(f)
                Z |= constants_of(f)
                changed = True
    return conj(psi), conj(rest), tuple(sorted(Z))


def _to_x(f: Formula, c: str) -> Formula:
    """Replace the constant c by the variable x."""
    if isinstance(f, Pred):
        return Pred(f.name, tuple(Var("x") if isinstance(t, Const) and t.name == c else t for t in f.args))
    if isinstance(f, Not):
        return Not(_to_x(f.arg, c))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_to_x(a, c) for a in f.args))
    if isinstance(f, Implies):
        return Implies(_to_x(f.left, c), _to_x(f.right, c))
    return f


def classify(phi: Formula, kb: Formula, vocab: Vocabulary) -> QueryClass:
    if has_proportion(phi):
        return Unsupported("queries with proportion expressions depend on how the tolerances shrink")
    psi, rest, Z = split_kb(phi, kb)
    if constants_of(rest) & set(Z):
        return NonSeparable(phi, kb, "the statistical part of the knowledge base mentions "
                                     + ", ".join(sorted(constants_of(rest) & set(Z))))
    rels = relations_of(phi, vocab)
    if has_quantifier(phi):
        if rels:
            return Unsupported("quantified queries over non-unary relations are not handled")
        return UnaryQuantified(phi, psi, rest, Z)
    if (len(Z) == 1 and not rels and not has_equality(phi) and not has_equality(psi)
            and not any(vocab.arity(p) != 1 for p in _preds(phi) | _preds(psi))):
        (c,) = Z
        px, sx = _to_x(phi, c), _to_x(psi, c)
        if is_essentially_propositional(px) and is_essentially_propositional(sx):
            return SimpleQuery(phi, c, px, sx, rest)
    return SeparableQuery(phi, psi, rest, Z)


def _preds(f) -> set[str]:
    from .syntax import predicates_of
    return set(predicates_of(f))


# ---------------------------------------------------------------------------
# F functions


def atoms_satisfying(xi: Formula, vocab: Vocabulary) -> list[int]:
    """0-based atoms of an essentially propositional formula."""
    return [j for j in range(vocab.K) if eval_at_atom(xi, j, vocab)]


def f_formula(xi: Formula, u, vocab: Vocabulary) -> float:
    u = np.asarray(u, dtype=float)
    return float(sum(u[j] for j in atoms_satisfying(xi, vocab)))


def f_cond(phi: Formula, psi: Formula, u, vocab: Vocabulary, zero: float = 0.0) -> float | None:
    den = f_formula(psi, u, vocab)
    if den <= zero:
        return None
    return f_formula(And((phi, psi)), u, vocab) / den


def f_description(D: "CompleteDescription", u) -> float:
    u = np.asarray(u, dtype=float)
    out = 1.0
    for block in D.blocks:
        out *= u[D.unary[block[0]]]
    return out


def f_poly(xi: Formula, vocab: Vocabulary) -> Poly:
    out = Poly()
    for j in atoms_satisfying(xi, vocab):
        out = out + Poly.u(j)
    return out


# ---------------------------------------------------------------------------
# complete descriptions and 0/1 limits


@dataclass(frozen=True)
class CompleteDescription:
    """Atoms, equalities and relation facts for a finite set of constants.

    ``blocks`` partitions the constants into equal groups; ``unary`` gives an
    atom per constant (equal constants share it); ``relations`` maps each
    relation name to the set of block-index tuples where it holds.
    """

    unary: Mapping[str, int]
    blocks: tuple[tuple[str, ...], ...]
    relations: Mapping[str, frozenset] = field(default_factory=dict)

    def world(self, vocab: Vocabulary, extra: Sequence[int] = ()) -> World:
        atoms = [self.unary[b[0]] for b in self.blocks] + list(extra)
        if not atoms:
            atoms = [0]  # an arbitrary element; only closed constant-free formulas get here
        consts = {c: i for i, b in enumerate(self.blocks) for c in b}
        for c in vocab.constants:
            consts.setdefault(c, 0)
        return World(len(atoms), tuple(atoms), consts, dict(self.relations))

    def distinct(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def label(self) -> str:
        parts = [f"A{self.unary[b[0]] + 1}({b[0]})" for b in self.blocks]
        parts += [f"{b[0]} = {c}" for b in self.blocks for c in b[1:]]
        for name, ts in sorted(self.relations.items()):
            parts += [f"{name}({', '.join(self.blocks[i][0] for i in t)})" for t in sorted(ts)]
        return " & ".join(parts) or "true"


def _partitions(items):
    from .semantics import set_partitions
    return set_partitions(list(items))


def enumerate_descriptions(Z: Sequence[str], vocab: Vocabulary, constraint: Formula | None = None,
                           relations: Sequence[str] | None = None, distinct_only: bool = False,
                           budget: int = 100_000) -> list[CompleteDescription]:
    """Every consistent complete description over Z satisfying ``constraint``."""
    Z = list(Z)
    rel_names = list(vocab.relations) if relations is None else [(n, vocab.arity(n)) for n in relations]
    out = []
    count = 0
    partitions = [[(c,) for c in Z]] if distinct_only else list(_partitions(Z))
    for blocks in partitions:
        blocks = tuple(tuple(b) for b in blocks)
        m = len(blocks)
        tuples = {name: list(itertools.product(range(m), repeat=a)) for name, a in rel_names}
        n_rel = sum(len(t) for t in tuples.values())
        for atoms in itertools.product(range(vocab.K), repeat=m):
            unary = {c: atoms[i] for i, b in enumerate(blocks) for c in b}
            for bits in itertools.product((False, True), repeat=n_rel):
                count += 1
                if count > budget:
                    raise RandWorldsError("too many complete descriptions for the configured budget")
                rels, pos = {}, 0
                for name, _ in rel_names:
                    ts = tuples[name]
                    rels[name] = frozenset(t for t, b in zip(ts, bits[pos:pos + len(ts)]) if b)
                    pos += len(ts)
                D = CompleteDescription(unary, blocks, rels)
                if constraint is None or evaluate(D.world(vocab), {}, None, constraint, vocab):
                    out.append(D)
    return out


def quantifier_rank(f) -> int:
    if isinstance(f, (Exists, Forall)):
        return 1 + quantifier_rank(f.body)
    if isinstance(f, Not):
        return quantifier_rank(f.arg)
    if isinstance(f, (And, Or)):
        return max((quantifier_rank(a) for a in f.args), default=0)
    if isinstance(f, Implies):
        return max(quantifier_rank(f.left), quantifier_rank(f.right))
    return 0


def zero_one_limit(phi: Formula, sigma: Sequence[bool], D: CompleteDescription, vocab: Vocabulary) -> int:
    """Limit probability (0 or 1) of phi given the size description and D."""
    if has_proportion(phi):
        raise RandWorldsError("proportion expressions have no 0/1 law here")
    if not has_quantifier(phi):
        return int(evaluate(D.world(vocab), {}, None, phi, vocab))
    if relations_of(phi, vocab):
        raise SyntaxRestrictionError("quantified queries over non-unary relations are not handled")
    if any(not sigma[D.unary[b[0]]] for b in D.blocks):
        return 0  # D contradicts the size description
    n = quantifier_rank(phi) + len(D.blocks) + 1
    extra = [j for j, on in enumerate(sigma) if on for _ in range(n)]
    return int(evaluate(D.world(vocab, extra), {}, None, phi, vocab))


def _value_given(phi: Formula, sigma, descriptions, weights, vocab) -> float | None:
    den = sum(weights)
    if den <= 0:
        return None
    num = 0.0
    for D, w in zip(descriptions, weights):
        if w > 0:
            num += w * _relation_average(phi, sigma, D, vocab)
    return num / den


def _relation_average(phi, sigma, D: CompleteDescription, vocab) -> float:
    """Average 0/1 limit over the relation facts phi mentions (each equally likely)."""
    rels = sorted(relations_of(phi, vocab))
    if not rels:
        return float(zero_one_limit(phi, sigma, D, vocab))
    m = len(D.blocks)
    tuples = [(name, t) for name in rels for t in itertools.product(range(m), repeat=vocab.arity(name))]
    if len(tuples) > 16:
        raise RandWorldsError("too many relation facts to enumerate")
    total = 0
    for bits in itertools.product((False, True), repeat=len(tuples)):
        rel = {name: frozenset(t for (n2, t), b in zip(tuples, bits) if n2 == name and b) for name in rels}
        total += zero_one_limit(phi, sigma, CompleteDescription(D.unary, D.blocks, rel), vocab)
    return total / 2 ** len(tuples)


# ---------------------------------------------------------------------------
# results


@dataclass
class BeliefResult:
    query: str
    status: str
    value: float | None = None
    interval: tuple[float, float] | None = None
    maxent_points: list[list[float]] = field(default_factory=list)
    entropy: float | None = None
    flags: dict = field(default_factory=dict)
    probes: list[dict] = field(default_factory=list)
    oracle: list[dict] = field(default_factory=list)
    query_class: str = ""
    reason: str = ""
    tau: dict | None = None

    def as_dict(self) -> dict:
        return {
            "query": self.query,
            "status": self.status,
            "value": _num(self.value),
            "interval": None if self.interval is None else [_num(x) for x in self.interval],
            "maxent_point": [[_num(x) for x in p] for p in self.maxent_points],
            "entropy": _num(self.entropy),
            "flags": self.flags,
            "probes": self.probes,
            "oracle": self.oracle,
            "class": self.query_class,
            "reason": self.reason,
            "tau": None if self.tau is None else {str(k): float(v) for k, v in sorted(self.tau.items())},
        }


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return str(x)
    return round(x, 12)


# ---------------------------------------------------------------------------
# fixed-tolerance value


@dataclass
class TauValue:
    tau: dict
    status: str              # defined | interval | undefined | infeasible
    lo: float | None = None
    hi: float | None = None
    points: list = field(default_factory=list)

    def as_dict(self):
        return {"tau": {str(k): float(v) for k, v in sorted(self.tau.items())}, "status": self.status,
                "lo": _num(self.lo), "hi": _num(self.hi),
                "points": [[_num(x) for x in p] for p in self.points]}


def _active_disjuncts(cf: CanonicalForm, region, cluster) -> list:
    idx = sorted({region.cells[i].source for i in cluster.cells})
    return [cf.disjuncts[i] for i in idx]


def value_near(phi: Formula, cf: CanonicalForm, disjuncts, v, vocab: Vocabulary,
               zero: float = 1e-12) -> float | None:
    """Probability of phi among worlds near v that satisfy one of ``disjuncts``."""
    Z = sorted(set(constants_of(phi)) | {l.const for d in disjuncts for l in d if isinstance(l, ConstAtom)})
    sigma = size_description_of(v)
    descs = enumerate_descriptions(Z, vocab, relations=(), distinct_only=True)
    allowed = []
    for d in disjuncts:
        fixed = {l.const: l.atom for l in d if isinstance(l, ConstAtom)}
        allowed.append(fixed)
    chosen, weights = [], []
    for D in descs:
        if any(all(D.unary[c] == j for c, j in fixed.items()) for fixed in allowed):
            w = f_description(D, v)
            chosen.append(D)
            weights.append(w if w > zero else 0.0)
    return _value_given(phi, sigma, chosen, weights, vocab)


def value_at(phi: Formula, cf: CanonicalForm, tau, vocab: Vocabulary,
             config: BeliefConfig = DEFAULT) -> TauValue:
    """Pr^tau_infinity(phi | KB) read off the maxent points of S^tau[KB]."""
    g = gamma(cf)
    tau_d = _tau_dict(tau, g.eps_indices())
    region = solution_space(g, tau_d)
    res = maximize(region, config.maxent)
    if not res.feasible:
        return TauValue(tau_d, "infeasible")
    vals = []
    for m in res.maxima:
        val = value_near(phi, cf, _active_disjuncts(cf, region, m), m.point, vocab)
        vals.append(val)
    pts = [list(m.point) for m in res.maxima]
    if any(v is None for v in vals):
        return TauValue(tau_d, "undefined", points=pts)
    lo, hi = min(vals), max(vals)
    status = DEFINED if len(vals) == 1 else INTERVAL
    return TauValue(tau_d, status, lo, hi, pts)


def probe_vectors(indices: Sequence[int], scales: Sequence[float], max_perms: int = 6):
    """Equal tolerances plus geometric orderings tau_pi(k) = s / 2^k."""
    idx = sorted(indices)
    out = []
    for s in scales:
        if not idx:
            out.append((s, {}))
            continue
        out.append((s, {i: s for i in idx}))
        if len(idx) > 1:
            for perm in itertools.islice(itertools.permutations(idx), max_perms):
                out.append((s, {i: s / 2 ** k for k, i in enumerate(perm)}))
    return out


@dataclass
class ProbeReport:
    values: list[TauValue]
    spread: float | None
    scale: float | None
    nonrobust: bool

    def as_list(self):
        return [v.as_dict() for v in self.values]


def probe_tau(phi: Formula, cf: CanonicalForm, vocab: Vocabulary, config: BeliefConfig = DEFAULT,
              scales: Sequence[float] | None = None) -> ProbeReport:
    scales = tuple(scales or config.probe_scales)
    idx = gamma(cf).eps_indices()
    vals = []
    for s, tau in probe_vectors(idx, scales, config.max_permutations):
        vals.append(value_at(phi, cf, tau, vocab, config))
    finest = min(scales)
    fin = [v for v, (s, _) in zip(vals, probe_vectors(idx, scales, config.max_permutations)) if s == finest]
    got = [v for v in fin if v.lo is not None]
    spread = None
    nonrobust = False
    if got:
        spread = max(v.hi for v in got) - min(v.lo for v in got)
        nonrobust = spread > config.spread_factor * finest + 1e-6
    if any(v.status == "undefined" for v in fin) and got:
        nonrobust = True
    return ProbeReport(vals, spread, finest, nonrobust)


# ---------------------------------------------------------------------------
# direct inference


def direct_inference(phi_x: Formula, psi_x: Formula, kb_rest_cf: CanonicalForm, vocab: Vocabulary,
                     config: BeliefConfig = DEFAULT):
    """Bounds on ||phi|psi|| over S^tau[KB'] extrapolated to tau = 0, or None."""
    num = f_poly(And((phi_x, psi_x)), vocab)
    den = f_poly(psi_x, vocab)
    if den.is_zero():
        return None
    g = gamma(kb_rest_cf)
    idx = g.eps_indices()
    pts = []
    for t in config.direct_taus:
        region = solution_space(g, {i: t for i in idx})
        if region.empty:
            return None
        try:
            lo, hi = bound_statistic(region, num, den, config.maxent)
        except RandWorldsError:
            return None
        pts.append((t, lo, hi))
    if not idx:
        return pts[-1][1], pts[-1][2], pts
    (t1, l1, h1), (t2, l2, h2) = pts[-2], pts[-1]
    lo0 = l2 - (l1 - l2) * t2 / (t1 - t2)
    hi0 = h2 - (h1 - h2) * t2 / (t1 - t2)
    return max(0.0, lo0), min(1.0, hi0), pts


# ---------------------------------------------------------------------------
# routes


def _flags(ep=None, unique=None, stable=None, **more):
    d = {"essentially_positive": ep, "unique": unique, "stable": stable}
    d.update(more)
    return d


def _probe_result(query, phi, cf, vocab, config, reason, cls, ep=None, unique=None, stable=None,
                  maxres=None, interval=None):
    rep = probe_tau(phi, cf, vocab, config)
    status = NONROBUST if rep.nonrobust else UNSUPPORTED
    if not rep.nonrobust:
        reason += "; probes did not separate, no limit result applies"
    r = BeliefResult(query, status, None, interval, [], None,
                     _flags(ep, unique, stable, probe_spread=rep.spread, probe_scale=rep.scale),
                     rep.as_list(), [], cls, reason)
    if maxres is not None and maxres.feasible:
        r.maxent_points = [list(m.point) for m in maxres.maxima]
        r.entropy = maxres.entropy
    return r


def believe_simple(q: SimpleQuery, kb: Formula, vocab: Vocabulary, config: BeliefConfig = DEFAULT,
                   query: str = "") -> BeliefResult:
    cf_rest = to_canonical(q.kb_rest, vocab)
    cf_full = to_canonical(kb, vocab)
    pos = is_essentially_positive(cf_rest, config.maxent)
    res = pos.strict
    cls = "simple"
    if not res.feasible:
        if not pos.weak.feasible:
            g = gamma(cf_rest)
            probe = solution_space(g, {i: min(config.probe_scales) for i in g.eps_indices()})
            if probe.empty:
                raise RandWorldsError("knowledge base is inconsistent at small tolerances")
        return _probe_result(query, q.phi, cf_full, vocab, config,
                             "the zero-tolerance space is empty", cls, ep=pos.positive)
    if not pos.positive:
        return _probe_result(query, q.phi, cf_full, vocab, config,
                             "knowledge base is not essentially positive", cls, ep=False, maxres=res)
    F = [f_cond(q.phi_x, q.psi_x, m.point, vocab, config.zero_threshold) for m in res.maxima]
    pts = [list(m.point) for m in res.maxima]
    if res.unique == "multiple":
        got = [x for x in F if x is not None]
        interval = (min(got), max(got)) if len(got) == len(F) else None
        return _probe_result(query, q.phi, cf_full, vocab, config,
                             f"{len(res.maxima)} maximum-entropy points", cls, ep=True, unique=False,
                             maxres=res, interval=interval)
    flags = _flags(True, True, None, uniqueness=res.unique, kkt_residual=res.maxima[0].residual)
    if F[0] is None:
        r = BeliefResult(query, INAPPLICABLE, None, None, pts, res.entropy, flags, [], [], cls,
                         "F[psi] vanishes at the maximum-entropy point")
        di = direct_inference(q.phi_x, q.psi_x, cf_rest, vocab, config)
        if di is not None:
            lo, hi, trace = di
            r.interval = (lo, hi)
            r.flags["direct_inference"] = [{"tau": t, "lo": _num(a), "hi": _num(b)} for t, a, b in trace]
            if hi - lo <= config.point_tol:
                r.value = 0.5 * (lo + hi)
                r.reason += "; statistics pin the value by direct inference"
        return r
    return BeliefResult(query, DEFINED, F[0], None, pts, res.entropy, flags, [], [], cls, "")


def believe_general(q: SeparableQuery, kb: Formula, vocab: Vocabulary, config: BeliefConfig = DEFAULT,
                    query: str = "") -> BeliefResult:
    cls = class_name(q)
    cf_rest = to_canonical(q.kb_rest, vocab)
    cf_full = to_canonical(kb, vocab)
    pos = is_essentially_positive(cf_rest, config.maxent)
    res = pos.strict
    if not res.feasible or not pos.positive:
        return _probe_result(query, q.phi, cf_full, vocab, config,
                             "knowledge base is not essentially positive", cls, ep=pos.positive, maxres=res)
    if res.unique == "multiple":
        return _probe_result(query, q.phi, cf_full, vocab, config,
                             f"{len(res.maxima)} maximum-entropy points", cls, ep=True, unique=False,
                             maxres=res)
    v = res.maxima[0].point
    # stability at a ladder of tolerances
    idx = gamma(cf_full).eps_indices()
    sigmas, stable = set(), True
    for s, tau in probe_vectors(idx, config.stability_taus, 2):
        rep = check_stability(cf_full, tau, config.maxent)
        stable = stable and rep.stable and rep.unique
        if rep.sigma_star is not None:
            sigmas.add(rep.sigma_star)
    stable = stable and len(sigmas) == 1
    if not stable:
        return _probe_result(query, q.phi, cf_full, vocab, config, "stability check failed", cls,
                             ep=True, unique=True, stable=False, maxres=res)
    (sigma,) = sigmas
    descs = enumerate_descriptions(q.Z, vocab, And((q.psi, _all_distinct(q.Z))), relations=(),
                                   distinct_only=True, budget=config.description_budget)
    weights = [f_description(D, v) for D in descs]
    weights = [w if w > config.zero_threshold ** len(q.Z) else 0.0 for w in weights] if q.Z else weights
    value = _value_given(q.phi, sigma, descs, weights, vocab)
    flags = _flags(True, True, True, sigma_star=format_size_description(sigma), uniqueness=res.unique)
    pts = [list(v)]
    if value is None:
        return BeliefResult(query, INAPPLICABLE, None, None, pts, res.entropy, flags, [], [], cls,
                            "every complete description has weight zero at the maximum-entropy point")
    return BeliefResult(query, DEFINED, value, None, pts, res.entropy, flags, [], [], cls, "")


def _all_distinct(Z) -> Formula:
    return conj(Not(Equals(Const(a), Const(b))) for a, b in itertools.combinations(Z, 2))


def believe_at_tau(phi: Formula, kb: Formula, vocab: Vocabulary, tau, config: BeliefConfig = DEFAULT,
                   query: str = "") -> BeliefResult:
    if has_proportion(phi):
        return BeliefResult(query, UNSUPPORTED, query_class="unsupported",
                            reason="queries with proportion expressions are not handled")
    cf = to_canonical(kb, vocab)
    tv = value_at(phi, cf, tau, vocab, config)
    base = dict(query=query, maxent_points=tv.points, query_class="fixed-tau", tau=tv.tau)
    if tv.status == "infeasible":
        return BeliefResult(status=UNSUPPORTED, reason="S^tau is empty at these tolerances", **base)
    if tv.status == "undefined":
        return BeliefResult(status=INAPPLICABLE, reason="some maximum-entropy point gives weight zero", **base)
    if tv.status == DEFINED:
        return BeliefResult(status=DEFINED, value=tv.lo, flags=_flags(unique=True), **base)
    return BeliefResult(status=INTERVAL, interval=(tv.lo, tv.hi), flags=_flags(unique=False), **base)


def believe(phi: Formula, kb: Formula, vocab: Vocabulary, tau=None, config: BeliefConfig = DEFAULT,
            query: str | None = None) -> BeliefResult:
    """Degree of belief in phi given kb (the limit, or the fixed-tau value if tau is given)."""
    from .parser import format_formula
    query = query if query is not None else format_formula(phi)
    extra = constants_of(phi) - set(vocab.constants)
    if extra:
        raise RandWorldsError(f"query mentions undeclared constants {sorted(extra)}")
    if tau is not None:
        return believe_at_tau(phi, kb, vocab, tau, config, query)
    q = classify(phi, kb, vocab)
    if isinstance(q, Unsupported):
        return BeliefResult(query, UNSUPPORTED, query_class="unsupported", reason=q.reason)
    if isinstance(q, NonSeparable):
        cf = to_canonical(kb, vocab)
        return _probe_result(query, phi, cf, vocab, config, q.reason, "not-separable")
    if isinstance(q, SimpleQuery):
        return believe_simple(q, kb, vocab, config, query)
    return believe_general(q, kb, vocab, config, query)


def oracle_check(phi: Formula, kb: Formula, vocab: Vocabulary, Ns: Sequence[int], tau,
                 backend: str = "auto") -> list[dict]:
    """Finite-N values Pr_N^tau(phi | KB) for comparison with a limit answer."""
    from .semantics import pr_n
    from .constraints import _tau_dict
    from .syntax import tolerance_indices
    need = tolerance_indices(kb) | tolerance_indices(phi)
    tau_d = _tau_dict(tau, need)
    out = []
    for N in Ns:
        v = pr_n(vocab, N, tau_d, phi, kb, backend)
        out.append({"N": int(N), "tau": {str(i): float(t) for i, t in sorted(tau_d.items())},
                    "value": None if v is None else float(v),
                    "exact": None if v is None else f"{v.numerator}/{v.denominator}"})
    return out
