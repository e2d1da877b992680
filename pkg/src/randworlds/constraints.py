"""Constraint formulas over the simplex and their solution spaces.

``gamma`` turns a canonical form into a disjunction of polynomial
constraints over u_1..u_K (and eps_i).  ``solution_space`` instantiates the
tolerances and splits the result into conjunctive cells.  Each cell keeps
its strict constraints; solvers work on the closed relaxation and the strict
part is checked separately by an LP that maximizes the slack.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from . import _kernels
from .canonical import (
    CanonicalForm, ConstAtom, ExistsAtom, PosLit, ZeroLit,
    _zero_hitting_sets, negated_size_description,
)
from .polynomial import Poly, format_monomial, _mono_key
from .semantics import World
from .syntax import RandWorldsError, ToleranceVector

ZERO_THRESHOLD = 1e-9
STRICT_SLACK = 1e-10
SAFETY_DISTANCE = 1e-6

EQ, LE, GT, GE = "=", "<=", ">", ">="


@dataclass(frozen=True)
class Constraint:
    """``poly kind 0`` with kind one of =, <=, >, >=."""

    poly: Poly
    kind: str

    def holds(self, u: Sequence, tau: Mapping[int, object] | None = None) -> bool:
        v = self.poly.eval_exact(u, tau or {})
        if self.kind == EQ:
            return v == 0
        if self.kind == LE:
            return v <= 0
        if self.kind == GT:
            return v > 0
        return v >= 0

    def instantiate(self, tau: Mapping[int, object]) -> "Constraint":
        return Constraint(self.poly.subs_eps(tau), self.kind)

    def weaken(self) -> "Constraint":
        return Constraint(self.poly, GE) if self.kind == GT else self

    def __str__(self):
        return format_constraint(self)


@dataclass(frozen=True)
class ConstraintFormula:
    K: int
    disjuncts: tuple[tuple[Constraint, ...], ...]

    def eps_indices(self) -> set[int]:
        return {i for d in self.disjuncts for c in d for i in c.poly.eps_indices()}

    def instantiate(self, tau) -> "ConstraintFormula":
        tau = _tau_dict(tau, self.eps_indices())
        return ConstraintFormula(self.K, tuple(tuple(c.instantiate(tau) for c in d) for d in self.disjuncts))

    def weaken(self) -> "ConstraintFormula":
        return ConstraintFormula(self.K, tuple(tuple(c.weaken() for c in d) for d in self.disjuncts))

    def holds(self, u: Sequence, tau=None) -> bool:
        tau = _tau_dict(tau, self.eps_indices()) if self.eps_indices() else {}
        return any(all(c.holds(u, tau) for c in d) for d in self.disjuncts)

    def format(self) -> str:
        if not self.disjuncts:
            return "false"
        blocks = []
        for d in self.disjuncts:
            blocks.append("\n".join("  " + str(c) for c in d))
        return "\n or\n".join(blocks)

    def __str__(self):
        return self.format()


def _tau_dict(tau, needed: Iterable[int]) -> dict[int, Fraction]:
    if tau is None:
        tau = {}
    if isinstance(tau, ToleranceVector):
        tau.require(needed)
        return {i: tau[i] for i in needed}
    if isinstance(tau, (int, float, Fraction)):
        return {i: Fraction(str(tau)) if isinstance(tau, float) else Fraction(tau) for i in needed}
    out = {}
    for i in needed:
        if i not in tau:
            raise RandWorldsError(f"no tolerance given for index {i}")
        v = tau[i]
        out[i] = Fraction(repr(v)) if isinstance(v, float) else Fraction(v)
    return out


# ---------------------------------------------------------------------------
# gamma


def literal_constraint(lit) -> Constraint:
    if isinstance(lit, (ConstAtom,)):
        return Constraint(Poly.u(lit.atom), GT)
    if isinstance(lit, ExistsAtom):
        return Constraint(Poly.u(lit.atom), GT if lit.positive else EQ)
    if isinstance(lit, ZeroLit):
        return Constraint(lit.t, EQ)
    if isinstance(lit, PosLit):
        return Constraint(lit.t, GT)
    p = lit.t if lit.index is None else lit.t - lit.tp * Poly.eps(lit.index)
    return Constraint(p, GT if lit.negated else LE)


def gamma(cf: CanonicalForm) -> ConstraintFormula:
    out = []
    for d in cf.disjuncts:
        seen: list[Constraint] = []
        for lit in d:
            c = literal_constraint(lit)
            if c not in seen:
                seen.append(c)
        out.append(tuple(seen))
    return ConstraintFormula(cf.vocab.K, tuple(out))


def gamma_weakened(cf: CanonicalForm) -> ConstraintFormula:
    """Strict inequalities relaxed, tolerances set to zero."""
    g = gamma(cf)
    return g.instantiate({i: 0 for i in g.eps_indices()}).weaken()


# ---------------------------------------------------------------------------
# printing


def _decimal(x: Fraction) -> str:
    d = x.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    s = format(x.numerator / x.denominator, ".12f").rstrip("0").rstrip(".")
    if Fraction(s) != x:  # pragma: no cover - long decimals
        return f"{x.numerator}/{x.denominator}"
    return s


def format_linear(p: Poly) -> str:
    if p.is_zero():
        return "0"
    out = []
    for m, c in sorted(p.terms.items(), key=lambda mc: _mono_key(mc[0])):
        a = abs(c)
        if not m:
            body = _decimal(a)
        elif a == 1:
            body = format_monomial(m)
        else:
            body = f"{_decimal(a)}*{format_monomial(m)}"
        out.append(("-" if c < 0 else "+", body))
    s = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        s += f" {sign} {body}"
    return s


def _parts(p: Poly) -> tuple[Poly, Poly]:
    pos = Poly({m: c for m, c in p.terms.items() if c > 0})
    return pos, pos - p


def _paren(p: Poly) -> str:
    s = format_linear(p)
    return f"({s})" if len(p.terms) > 1 else s


def _tolerance_form(t: Poly, tp: Poly, i: int, op: str) -> str | None:
    """Write t <= tp*e as A <= (a + e)*tp or (a - e)*tp <= A when possible."""
    best = None
    for m, c in tp.terms.items():
        tm = t.terms.get(m, Fraction(0))
        for upper in (True, False):
            # upper: t = A - a*tp ; lower: t = a*tp - A
            alpha = -tm / c if upper else tm / c
            A = t + tp * Poly.const(alpha) if upper else tp * Poly.const(alpha) - t
            if alpha <= 0 or A.is_zero() or not A.all_nonneg():
                continue
            key = (len(A.terms), sorted(_mono_key(x) for x in A.terms), not upper)
            if best is None or key < best[0]:
                best = (key, upper, alpha, A)
    if best is None:
        return None
    _, upper, alpha, A = best
    scale = "" if tp == Poly.const(1) else f"*{_paren(tp)}"
    if upper:
        return f"{format_linear(A)} {op} ({_decimal(alpha)} + e{i}){scale}"
    return f"({_decimal(alpha)} - e{i}){scale} {op} {format_linear(A)}"


def format_constraint(c: Constraint) -> str:
    p = c.poly
    eps = p.eps_indices()
    if len(eps) == 1 and c.kind in (LE, GT):
        (i,) = eps
        split = p.split_eps(i)
        if split is not None:
            t, mtp = split
            tp = -mtp
            if tp.is_positive() and tp.is_linear() and t.is_linear():
                s = _tolerance_form(t, tp, i, c.kind)
                if s is not None:
                    return s
    if p.is_zero():
        return f"0 {c.kind} 0"
    lhs, rhs = _parts(p)
    if lhs.is_zero():
        flip = {EQ: EQ, LE: GE, GT: "<", GE: LE}[c.kind]
        return f"{format_linear(rhs)} {flip} 0"
    return f"{format_linear(lhs)} {c.kind} {format_linear(rhs)}"


# ---------------------------------------------------------------------------
# cells


@dataclass
class Cell:
    """A conjunction of constraints at fixed tolerances.

    ``eqs`` are p = 0, ``les`` p <= 0, ``gts`` p > 0 (relaxed to p >= 0).
    """

    K: int
    eqs: tuple[Poly, ...]
    les: tuple[Poly, ...]
    gts: tuple[Poly, ...]
    source: int = 0
    _strict: bool | None = field(default=None, repr=False, compare=False)
    _closed: bool | None = field(default=None, repr=False, compare=False)

    @property
    def linear(self) -> bool:
        return all(p.is_linear() for p in self.eqs + self.les + self.gts)

    @property
    def convex(self) -> bool:
        # linear cells are polyhedra; nothing is claimed for the rest
        return self.linear

    def key(self):
        """Identity of the closed relaxation (strict parts that are implied are dropped)."""
        gts = tuple(sorted((p.sort_key() for p in self.gts if not _implied_nonneg(p))))
        return (self.K, tuple(sorted(p.sort_key() for p in self.eqs)),
                tuple(sorted(p.sort_key() for p in self.les)), gts)

    def closed_constraints(self) -> list[Constraint]:
        return ([Constraint(p, EQ) for p in self.eqs] + [Constraint(p, LE) for p in self.les]
                + [Constraint(p, GE) for p in self.gts])

    def constraints(self) -> list[Constraint]:
        return ([Constraint(p, EQ) for p in self.eqs] + [Constraint(p, LE) for p in self.les]
                + [Constraint(p, GT) for p in self.gts])

    def linear_system(self):
        """(A_eq, b_eq, A_ub, b_ub) of the closed relaxation, scipy convention."""
        K = self.K
        rows_eq, rhs_eq, rows_ub, rhs_ub = [], [], [], []
        for p in self.eqs:
            a, b = p.linear_coeffs(K)
            rows_eq.append(a)
            rhs_eq.append(-b)
        for p in self.les:
            a, b = p.linear_coeffs(K)
            rows_ub.append(a)
            rhs_ub.append(-b)
        for p in self.gts:
            if _implied_nonneg(p):
                continue
            a, b = p.linear_coeffs(K)
            rows_ub.append(-a)
            rhs_ub.append(b)
        return (np.array(rows_eq).reshape(-1, K), np.array(rhs_eq, dtype=float),
                np.array(rows_ub).reshape(-1, K), np.array(rhs_ub, dtype=float))

    def residual(self, u, strict: bool = False) -> float:
        """Largest violation of the closed relaxation at ``u`` (simplex included)."""
        u = np.asarray(u, dtype=float)
        r = max(0.0, abs(u.sum() - 1.0), float(-u.min()))
        for p in self.eqs:
            r = max(r, abs(p.compiled(self.K)(u)))
        for p in self.les:
            r = max(r, p.compiled(self.K)(u))
        for p in self.gts:
            r = max(r, -p.compiled(self.K)(u))
        return r

    def closed_feasible(self) -> bool:
        if self._closed is None:
            self._closed = self._slack() is not None
        return self._closed

    def strict_nonempty(self) -> bool:
        if self._strict is None:
            s = self._slack()
            self._strict = s is not None and s > STRICT_SLACK
        return self._strict

    def _slack(self) -> float | None:
        """Largest s with every strict constraint >= s; None if the relaxation is empty."""
        if self.linear:
            return _lp_slack(self)
        return _nlp_slack(self)

    def feasible_point(self) -> np.ndarray | None:
        if not self.linear:
            return None
        res = _lp(self, np.zeros(self.K))
        return None if res is None else res

    def substitute_zero(self, zero: set[int]) -> "Cell":
        vals = {j: 0 for j in zero}
        return Cell(self.K, tuple(p.subs(vals) for p in self.eqs), tuple(p.subs(vals) for p in self.les),
                    tuple(p.subs(vals) for p in self.gts), self.source)

    def format(self) -> str:
        return " & ".join(str(c) for c in self.constraints()) or "true"


def _implied_nonneg(p: Poly) -> bool:
    return p.all_nonneg()


def _simplex_rows(K, extra=0):
    A = np.zeros((1, K + extra))
    A[0, :K] = 1.0
    return A, np.array([1.0])


def _lp(cell: Cell, c: np.ndarray, maximize: bool = False):
    """Optimal u of c.u over the closed relaxation, or None if empty."""
    K = cell.K
    A_eq, b_eq, A_ub, b_ub = cell.linear_system()
    S, s = _simplex_rows(K)
    A_eq = np.vstack([A_eq, S]) if A_eq.size else S
    b_eq = np.concatenate([b_eq, s])
    res = linprog(-c if maximize else c, A_ub=A_ub if A_ub.size else None,
                  b_ub=b_ub if A_ub.size else None, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * K, method="highs")
    if res.status != 0:
        return None
    return np.clip(res.x, 0.0, None)


def _lp_slack(cell: Cell) -> float | None:
    K = cell.K
    A_eq, b_eq, A_ub, b_ub = cell.linear_system()
    n = K + 1
    A_eq2 = np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))]) if A_eq.size else np.zeros((0, n))
    S = np.zeros((1, n))
    S[0, :K] = 1.0
    A_eq2 = np.vstack([A_eq2, S])
    b_eq2 = np.concatenate([b_eq, [1.0]])
    rows = [np.hstack([A_ub, np.zeros((A_ub.shape[0], 1))])] if A_ub.size else []
    rhs = [b_ub] if A_ub.size else []
    # strict p > 0 written as -a.u - b + s <= 0
    for p in cell.gts:
        a, b = p.linear_coeffs(K)
        rows.append(np.concatenate([-a, [1.0]]).reshape(1, -1))
        rhs.append(np.array([b]))
    A_ub2 = np.vstack(rows) if rows else None
    b_ub2 = np.concatenate(rhs) if rhs else None
    c = np.zeros(n)
    c[-1] = -1.0
    res = linprog(c, A_ub=A_ub2, b_ub=b_ub2, A_eq=A_eq2, b_eq=b_eq2,
                  bounds=[(0, None)] * K + [(None, 1.0)], method="highs")
    if res.status != 0:
        return None
    return float(res.x[-1])


def _nlp_slack(cell: Cell, seed: int = 0) -> float | None:
    K = cell.K
    fe = [p.compiled(K) for p in cell.eqs]
    fl = [p.compiled(K) for p in cell.les]
    fg = [p.compiled(K) for p in cell.gts]
    cons = [{"type": "eq", "fun": lambda z: z[:K].sum() - 1.0}]
    cons += [{"type": "eq", "fun": (lambda z, f=f: f(z[:K]))} for f in fe]
    cons += [{"type": "ineq", "fun": (lambda z, f=f: -f(z[:K]))} for f in fl]
    cons += [{"type": "ineq", "fun": (lambda z, f=f: f(z[:K]) - z[K])} for f in fg]
    rng = np.random.default_rng(seed)
    starts = [np.full(K, 1.0 / K)] + list(np.eye(K)) + list(rng.dirichlet(np.ones(K), 16))
    best = None
    for u0 in starts:
        z0 = np.concatenate([u0, [0.0]])
        res = minimize(lambda z: -z[K], z0, method="SLSQP", constraints=cons,
                       bounds=[(0, 1)] * K + [(-1, 1)], options={"maxiter": 300, "ftol": 1e-12})
        z = res.x
        viol = cell.residual(z[:K]) if not fg else max(
            abs(z[:K].sum() - 1), max([abs(f(z[:K])) for f in fe], default=0),
            max([f(z[:K]) for f in fl], default=0), float(-z[:K].min()))
        if viol < 1e-8:
            s = min([f(z[:K]) for f in fg], default=1.0)
            if best is None or s > best:
                best = s
    return best


# ---------------------------------------------------------------------------
# regions


@dataclass
class RegionDescriptor:
    K: int
    cells: list[Cell]
    tau: dict[int, Fraction]
    weak: bool = False

    @property
    def linear(self) -> bool:
        return all(c.linear for c in self.cells)

    @property
    def empty(self) -> bool:
        return not self.cells

    def contains(self, u, tol: float = 1e-9) -> bool:
        return any(c.residual(u) <= tol for c in self.cells)

    def format(self) -> str:
        if not self.cells:
            return "empty"
        return "\n".join(f"cell {i + 1} ({'linear' if c.linear else 'polynomial'}): {c.format()}"
                         for i, c in enumerate(self.cells))


def _split_constraints(cs: Sequence[Constraint], K: int, cap: int = 64):
    """Expand one conjunction into alternatives of (eqs, les, gts) with linear pieces."""
    alts: list[tuple[list, list, list]] = [([], [], [])]
    for c in cs:
        p = c.poly
        if p.is_constant():
            if not c.holds([0] * K):
                return []
            continue
        opts: list[tuple[list, list, list]]
        if c.kind == EQ and (p.all_nonneg() or p.all_nonpos()):
            q = p if p.all_nonneg() else -p
            if q.constant() != 0:
                return []
            sets = _zero_hitting_sets(q)
            if sets is None:
                opts = [([q], [], [])]
            else:
                opts = [([Poly.u(v) for v in sorted(s)], [], []) for s in sets]
        elif c.kind == GT and p.all_nonneg() and p.constant() == 0 and not p.is_linear():
            opts = []
            for m in p.terms:
                opts.append(([], [], [Poly.u(v) for v, _ in m]))
        elif c.kind == EQ:
            opts = [([p], [], [])]
        elif c.kind == LE:
            opts = [([], [p], [])]
        elif c.kind == GE:
            opts = [([], [-p], [])]
        else:
            opts = [([], [], [p])]
        alts = [(a[0] + o[0], a[1] + o[1], a[2] + o[2]) for a in alts for o in opts]
        if len(alts) > cap:
            raise RandWorldsError("constraint formula splits into too many cells")
    return alts


def _dedupe(ps):
    out = []
    for p in ps:
        if p not in out:
            out.append(p)
    return out


def _make_cell(K, eqs, les, gts, source) -> Cell:
    eqs, les, gts = _dedupe(eqs), _dedupe(les), _dedupe(gts)
    paired = [p for p in les if -p in les]
    for p in paired:
        if p in les and -p in les:
            les.remove(p)
            les.remove(-p)
            eqs.append(p)
    eqs = _dedupe(eqs)
    return Cell(K, tuple(eqs), tuple(les), tuple(gts), source)


def cells_of(gf: ConstraintFormula) -> list[Cell]:
    out = []
    for idx, d in enumerate(gf.disjuncts):
        for eqs, les, gts in _split_constraints(d, gf.K):
            out.append(_make_cell(gf.K, eqs, les, gts, idx))
    return out


def solution_space(gf: ConstraintFormula, tau=None) -> RegionDescriptor:
    """S^tau: closure of the solution set of the instantiated formula."""
    tau_d = _tau_dict(tau, gf.eps_indices())
    inst = gf.instantiate(tau_d)
    cells = [c for c in cells_of(inst) if c.strict_nonempty()]
    return RegionDescriptor(gf.K, cells, tau_d)


def weakened_space(gf: ConstraintFormula) -> RegionDescriptor:
    """S^{<=0}: strict inequalities relaxed at zero tolerance."""
    tau_d = {i: Fraction(0) for i in gf.eps_indices()}
    inst = gf.instantiate(tau_d).weaken()
    cells = [c for c in cells_of(inst) if c.closed_feasible()]
    return RegionDescriptor(gf.K, cells, tau_d, weak=True)


def space_of(cf: CanonicalForm, tau=None) -> RegionDescriptor:
    return solution_space(gamma(cf), tau)


def zero_tau(cf: CanonicalForm) -> dict[int, Fraction]:
    return {i: Fraction(0) for i in gamma(cf).eps_indices()}


# ---------------------------------------------------------------------------
# positivity, size descriptions, safety and stability


@dataclass
class PositivityReport:
    positive: bool
    strict: "object"   # MaxEntResult over S^0
    weak: "object"     # MaxEntResult over S^{<=0}


def is_essentially_positive(cf: CanonicalForm, config=None) -> PositivityReport:
    from .maxent import maximize, same_maxima
    g = gamma(cf)
    strict = maximize(solution_space(g, {i: 0 for i in g.eps_indices()}), config)
    weak = maximize(weakened_space(g), config)
    return PositivityReport(same_maxima(strict, weak), strict, weak)


SizeDescription = tuple  # of bools, one per atom


def size_description_of(u, threshold: float = ZERO_THRESHOLD) -> SizeDescription:
    return tuple(bool(x > threshold) for x in np.asarray(u, dtype=float))


def format_size_description(sigma: SizeDescription) -> str:
    return " & ".join(("" if b else "!") + f"exists x A{j + 1}(x)" for j, b in enumerate(sigma))


def distance_to_region(v, region: RegionDescriptor) -> float:
    """Euclidean distance from ``v`` to the closure of ``region``."""
    v = np.asarray(v, dtype=float)
    best = math.inf
    for cell in region.cells:
        best = min(best, _cell_distance(v, cell))
        if best <= 0.0:
            break
    return best


def _cell_distance(v: np.ndarray, cell: Cell) -> float:
    K = cell.K
    if cell.residual(v) <= 1e-12:
        return 0.0
    fe = [p.compiled(K) for p in cell.eqs]
    fl = [p.compiled(K) for p in cell.les]
    fg = [p.compiled(K) for p in cell.gts if not _implied_nonneg(p)]
    cons = [{"type": "eq", "fun": lambda u: u.sum() - 1.0, "jac": lambda u: np.ones(K)}]
    cons += [{"type": "eq", "fun": f, "jac": f.grad} for f in fe]
    cons += [{"type": "ineq", "fun": (lambda u, f=f: -f(u)), "jac": (lambda u, f=f: -f.grad(u))} for f in fl]
    cons += [{"type": "ineq", "fun": f, "jac": f.grad} for f in fg]
    starts = []
    p0 = cell.feasible_point()
    if p0 is not None:
        starts.append(p0)
    starts.append(v)
    if not cell.linear:
        starts += list(np.eye(K)) + [np.full(K, 1.0 / K)]
    best = math.inf
    for u0 in starts:
        res = minimize(lambda u: float(((u - v) ** 2).sum()), u0, jac=lambda u: 2 * (u - v),
                       method="SLSQP", constraints=cons, bounds=[(0, 1)] * K,
                       options={"maxiter": 500, "ftol": 1e-16})
        if cell.residual(res.x) < 1e-8:
            best = min(best, float(np.sqrt(((res.x - v) ** 2).sum())))
    return best


def is_safe(v, cf: CanonicalForm, tau, threshold: float = SAFETY_DISTANCE) -> bool:
    """True iff v is not in S^tau[KB & !sigma(v)]."""
    sigma = size_description_of(v)
    other = cf.conjoin(negated_size_description(sigma, cf.vocab))
    region = space_of(other, tau)
    if region.empty:
        return True
    return distance_to_region(v, region) > threshold


@dataclass
class StabilityReport:
    stable: bool
    sigma_star: SizeDescription | None
    unique: bool
    safe: list[bool]
    maxent: "object"


def check_stability(cf: CanonicalForm, tau, config=None) -> StabilityReport:
    from .maxent import maximize
    res = maximize(space_of(cf, tau), config)
    if not res.feasible:
        return StabilityReport(False, None, False, [], res)
    sigmas = {size_description_of(p.point) for p in res.maxima}
    safe = [is_safe(p.point, cf, tau) for p in res.maxima]
    stable = len(sigmas) == 1 and all(safe)
    return StabilityReport(stable, next(iter(sigmas)) if len(sigmas) == 1 else None,
                           res.unique != "multiple", safe, res)


# ---------------------------------------------------------------------------
# eventual consistency and realizability


def disjunct_holds(cf: CanonicalForm, index: int, u: Sequence[Fraction], tau) -> bool:
    g = gamma(cf)
    tau_d = _tau_dict(tau, g.eps_indices())
    return all(c.holds(u, tau_d) for c in g.disjuncts[index])


def construct_world(u: Sequence, N: int, cf: CanonicalForm, tau) -> World | None:
    """A size-N world with proportions ``u`` satisfying KB, built from Gamma.

    ``u`` must lie on the 1/N lattice.  Returns None when no disjunct of
    Gamma holds at ``u`` (strict constraints strictly).
    """
    u = [Fraction(x) for x in u]
    counts = [x * N for x in u]
    if any(c.denominator != 1 for c in counts) or sum(counts) != N:
        raise RandWorldsError(f"point is not on the 1/{N} lattice")
    counts = [int(c) for c in counts]
    atoms = tuple(j for j, n in enumerate(counts) for _ in range(n))
    first = {}
    for e, j in enumerate(atoms):
        first.setdefault(j, e)
    for idx, d in enumerate(cf.disjuncts):
        if not disjunct_holds(cf, idx, u, tau):
            continue
        consts = {c: 0 for c in cf.vocab.constants}
        for lit in d:
            if isinstance(lit, ConstAtom):
                consts[lit.const] = first[lit.atom]
        return World(N, atoms, consts)
    return None


@dataclass
class ConsistencyReport:
    feasible: dict            # tau value -> bool
    lattice: tuple | None     # (N, point) or None
    consistent: bool

    def as_dict(self):
        return {"feasible": {str(k): v for k, v in self.feasible.items()},
                "lattice": None if self.lattice is None else
                {"N": self.lattice[0], "point": [str(x) for x in self.lattice[1]]},
                "consistent": self.consistent}


def lattice_point(cf: CanonicalForm, tau, N: int) -> tuple[Fraction, ...] | None:
    """A 1/N lattice point satisfying Gamma(KB[tau]) exactly, if one is found."""
    g = gamma(cf)
    tau_d = _tau_dict(tau, g.eps_indices())
    inst = g.instantiate(tau_d)
    K = g.K
    for cell in cells_of(inst):
        if cell.linear:
            A_eq, b_eq, A_ub, b_ub = cell.linear_system()
            strict = [p for p in cell.gts]
            rows = [A_ub] if A_ub.size else []
            rhs = [b_ub] if A_ub.size else []
            for p in strict:
                a, b = p.linear_coeffs(K)
                rows.append(-a.reshape(1, -1))
                rhs.append(np.array([b - 0.5 / N ** 2]))
            Aub = np.vstack(rows) if rows else np.zeros((0, K))
            bub = np.concatenate(rhs) if rhs else np.zeros(0)
            h, pt, nfeas = _kernels.grid_scan(N, Aub, -bub, A_eq if A_eq.size else np.zeros((0, K)),
                                              -b_eq, 1e-9)
            if nfeas:
                cand = tuple(Fraction(int(round(x * N)), N) for x in pt)
                if all(c.holds(cand) for c in cell.constraints()):
                    return cand
        else:
            total = math.comb(N + K - 1, K - 1)
            if total > 200_000:
                continue
            for row in _kernels.lattice(N, K):
                cand = tuple(Fraction(int(x), N) for x in row)
                if all(c.holds(cand) for c in cell.constraints()):
                    return cand
    return None


def check_eventual_consistency(cf: CanonicalForm, tau_probe=(0.1, 0.01, 0.001), N_max: int = 60,
                               budget: int = 2_000_000) -> ConsistencyReport:
    g = gamma(cf)
    idx = g.eps_indices()
    feasible = {}
    for t in tau_probe:
        feasible[t] = not solution_space(g, {i: t for i in idx}).empty
    lattice = None
    t0 = max(tau_probe)
    K = g.K
    for N in range(1, N_max + 1):
        if math.comb(N + K - 1, K - 1) > budget:
            break
        pt = lattice_point(cf, {i: t0 for i in idx}, N)
        if pt is not None:
            lattice = (N, pt)
            break
    return ConsistencyReport(feasible, lattice, bool(lattice) and all(feasible.values()))
