"""Entropy maximization over solution-space regions.

Linear cells are solved exactly up to floating point: coordinates that are
zero on the whole cell are found by LP and removed, then the convex dual

    g(lam, mu) = log sum_j exp(-(A^T y)_j) + y . b,   mu >= 0

is minimized (L-BFGS-B followed by projected Newton steps).  The primal
point is the softmax of -(A^T y) and is unique because entropy is strictly
concave.  Cells with polynomial constraints fall back to SLSQP from a fixed
set of starting points and are only labelled heuristically unique.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.special import logsumexp, softmax

from . import _kernels
from .constraints import Cell, RegionDescriptor, _implied_nonneg, _lp
from .polynomial import Poly
from .syntax import RandWorldsError

PROVEN = "proven-unique"
HEURISTIC = "heuristically-unique"
MULTIPLE = "multiple"


class SolverError(RandWorldsError):
    """The optimizer failed to meet its tolerances."""


@dataclass(frozen=True)
class MaxEntConfig:
    cluster_radius: float = 1e-6
    tie_tol: float = 1e-8
    zero_threshold: float = 1e-9
    kkt_tol: float = 1e-8
    n_random: int = 32
    seed: int = 0
    max_iter: int = 2000

    def as_dict(self):
        return dict(self.__dict__)


DEFAULT = MaxEntConfig()


def entropy(u) -> float:
    u = np.asarray(u, dtype=float).reshape(1, -1)
    return float(_kernels.entropy_rows(np.clip(u, 0.0, None))[0])


@dataclass
class MaxPoint:
    point: np.ndarray
    entropy: float
    residual: float
    cells: list[int] = field(default_factory=list)
    linear: bool = True

    def as_dict(self):
        return {"point": [float(x) for x in self.point], "entropy": self.entropy,
                "residual": self.residual}


@dataclass
class MaxEntResult:
    maxima: list[MaxPoint]
    entropy: float | None
    unique: str | None
    feasible: bool
    config: MaxEntConfig = DEFAULT

    @property
    def point(self) -> np.ndarray:
        if len(self.maxima) != 1:
            raise RandWorldsError("no single maximum-entropy point")
        return self.maxima[0].point

    @property
    def points(self) -> list[np.ndarray]:
        return [m.point for m in self.maxima]

    def as_dict(self):
        return {"feasible": self.feasible, "unique": self.unique, "entropy": self.entropy,
                "points": [m.as_dict() for m in self.maxima]}


# ---------------------------------------------------------------------------
# linear cells


def forced_zeros(cell: Cell, threshold: float = 1e-12) -> set[int] | None:
    """Coordinates that vanish on the whole closed cell; None if the cell is empty."""
    K = cell.K
    seen = set()
    zero = set()
    for j in range(K):
        if j in seen:
            continue
        c = np.zeros(K)
        c[j] = 1.0
        x = _lp(cell, c, maximize=True)
        if x is None:
            return None
        if x[j] <= threshold:
            zero.add(j)
        seen |= {i for i in range(K) if x[i] > threshold}
    return zero


def _reduce(cell: Cell, keep: list[int]):
    A_eq, b_eq, A_ub, b_ub = cell.linear_system()
    A_eq, A_ub = A_eq[:, keep], A_ub[:, keep]
    # rows that lost every variable are satisfied on the cell; drop them
    m_eq = np.abs(A_eq).sum(axis=1) > 0
    m_ub = np.abs(A_ub).sum(axis=1) > 0
    return A_eq[m_eq], b_eq[m_eq], A_ub[m_ub], b_ub[m_ub]


class _Dual:
    def __init__(self, A_eq, b_eq, A_ub, b_ub):
        self.M = np.vstack([A_eq, A_ub])
        self.b = np.concatenate([b_eq, b_ub])
        self.n_eq = A_eq.shape[0]

    def u(self, y):
        return softmax(-(self.M.T @ y))

    def value_grad(self, y):
        z = -(self.M.T @ y)
        lse = logsumexp(z)
        u = np.exp(z - lse)
        return float(lse + y @ self.b), self.b - self.M @ u

    def hessian(self, y):
        u = self.u(y)
        C = np.diag(u) - np.outer(u, u)
        return self.M @ C @ self.M.T

    def bounds(self):
        return [(None, None)] * self.n_eq + [(0.0, None)] * (len(self.b) - self.n_eq)

    def kkt(self, y):
        u = self.u(y)
        r = self.M @ u - self.b
        e = self.n_eq
        feas = max(np.abs(r[:e]).max(initial=0.0), np.clip(r[e:], 0, None).max(initial=0.0))
        comp = np.abs(y[e:] * r[e:]).max(initial=0.0)
        return max(feas, comp)


def _solve_dual(D: _Dual, max_iter: int) -> np.ndarray:
    m = len(D.b)
    y = np.zeros(m)
    if m == 0:
        return y
    res = minimize(D.value_grad, y, jac=True, method="L-BFGS-B", bounds=D.bounds(),
                   options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-12})
    y = res.x
    e = D.n_eq
    # projected Newton polish
    for _ in range(100):
        if D.kkt(y) < 1e-14:
            break
        f, g = D.value_grad(y)
        free = np.ones(m, dtype=bool)
        free[e:] = ~((y[e:] <= 1e-14) & (g[e:] > 0))
        H = D.hessian(y)[np.ix_(free, free)]
        step = np.zeros(m)
        step[free] = np.linalg.lstsq(H, -g[free], rcond=1e-13)[0]
        t = 1.0
        improved = False
        while t > 1e-12:
            y2 = y + t * step
            y2[e:] = np.maximum(y2[e:], 0.0)
            f2, _ = D.value_grad(y2)
            if f2 <= f + 1e-4 * t * float(g @ (y2 - y)) or f2 < f:
                y, improved = y2, True
                break
            t *= 0.5
        if not improved:
            break
    return y


def _linear_cell_max(cell: Cell, config: MaxEntConfig) -> MaxPoint | None:
    K = cell.K
    zero = forced_zeros(cell)
    if zero is None:
        return None
    keep = [j for j in range(K) if j not in zero]
    A_eq, b_eq, A_ub, b_ub = _reduce(cell, keep)
    D = _Dual(A_eq, b_eq, A_ub, b_ub)
    y = _solve_dual(D, config.max_iter)
    u = np.zeros(K)
    u[keep] = D.u(y)
    kkt = D.kkt(y)
    resid = max(kkt, cell.residual(u))
    if resid > config.kkt_tol:
        # fall back to SLSQP from the dual point, then report honestly
        p = _polish_slsqp(cell, u)
        if p is not None and cell.residual(p) < resid:
            u, resid = p, cell.residual(p)
    if resid > config.kkt_tol:
        raise SolverError(f"maxent did not converge (residual {resid:.2e})")
    return MaxPoint(u, entropy(u), resid, [], True)


def _polish_slsqp(cell: Cell, u0: np.ndarray):
    K = cell.K
    res = minimize(_negH, u0, jac=_negH_grad, method="SLSQP", constraints=_scipy_cons(cell),
                   bounds=[(0, 1)] * K, options={"maxiter": 1000, "ftol": 1e-15})
    return res.x if res.x is not None else None


# ---------------------------------------------------------------------------
# polynomial cells


def _negH(u):
    u = np.clip(u, 1e-300, None)
    return float(np.sum(u * np.log(u)))


def _negH_grad(u):
    return np.log(np.clip(u, 1e-300, None)) + 1.0


def _scipy_cons(cell: Cell):
    K = cell.K
    cons = [{"type": "eq", "fun": lambda u: u.sum() - 1.0, "jac": lambda u: np.ones(K)}]
    for p in cell.eqs:
        f = p.compiled(K)
        cons.append({"type": "eq", "fun": f, "jac": f.grad})
    for p in cell.les:
        f = p.compiled(K)
        cons.append({"type": "ineq", "fun": (lambda u, f=f: -f(u)), "jac": (lambda u, f=f: -f.grad(u))})
    for p in cell.gts:
        if _implied_nonneg(p):
            continue
        f = p.compiled(K)
        cons.append({"type": "ineq", "fun": f, "jac": f.grad})
    return cons


def seed_points(K: int, config: MaxEntConfig) -> list[np.ndarray]:
    rng = np.random.default_rng(config.seed)
    pts = [np.full(K, 1.0 / K)] + [row for row in np.eye(K)]
    pts += list(rng.dirichlet(np.ones(K), config.n_random))
    return pts


def _poly_cell_max(cell: Cell, config: MaxEntConfig) -> list[MaxPoint]:
    K = cell.K
    cons = _scipy_cons(cell)
    out = []
    for u0 in seed_points(K, config):
        res = minimize(_negH, u0, jac=_negH_grad, method="SLSQP", constraints=cons,
                       bounds=[(0, 1)] * K, options={"maxiter": 1000, "ftol": 1e-14})
        u = np.clip(res.x, 0.0, None)
        r = cell.residual(u)
        if r < config.kkt_tol:
            out.append(MaxPoint(u, entropy(u), r, [], False))
    return out


# ---------------------------------------------------------------------------
# regions


def _cluster(points: list[MaxPoint], radius: float) -> list[MaxPoint]:
    clusters: list[MaxPoint] = []
    for p in sorted(points, key=lambda m: -m.entropy):
        for c in clusters:
            if np.abs(c.point - p.point).max() <= radius:
                c.cells = sorted(set(c.cells) | set(p.cells))
                c.linear = c.linear and p.linear
                break
        else:
            clusters.append(MaxPoint(p.point.copy(), p.entropy, p.residual, list(p.cells), p.linear))
    return clusters


def cell_maxima(cell: Cell, config: MaxEntConfig = DEFAULT) -> list[MaxPoint]:
    if cell.linear:
        m = _linear_cell_max(cell, config)
        return [] if m is None else [m]
    return _poly_cell_max(cell, config)


def maximize(region: RegionDescriptor, config: MaxEntConfig | None = None) -> MaxEntResult:
    config = config or DEFAULT
    found: list[MaxPoint] = []
    cache: dict = {}
    for idx, cell in enumerate(region.cells):
        key = cell.key()
        if key not in cache:
            cache[key] = cell_maxima(cell, config)
        for m in cache[key]:
            found.append(MaxPoint(m.point, m.entropy, m.residual, [idx], m.linear))
    if not found:
        if any(not c.linear for c in region.cells):
            raise SolverError("no feasible point found in a polynomial region")
        return MaxEntResult([], None, None, False, config)
    best = max(m.entropy for m in found)
    top = [m for m in found if m.entropy >= best - config.tie_tol]
    clusters = _cluster(top, config.cluster_radius)
    # cells whose maximum lies in a cluster also touch it; record them
    for c in clusters:
        for idx, cell in enumerate(region.cells):
            if idx not in c.cells and cell.residual(c.point) <= 1e-9:
                c.cells.append(idx)
        c.cells.sort()
    clusters.sort(key=lambda m: tuple(-m.point))
    if len(clusters) > 1:
        unique = MULTIPLE
    elif region.linear:
        unique = PROVEN
    else:
        unique = HEURISTIC
    return MaxEntResult(clusters, best, unique, True, config)


def same_maxima(a: MaxEntResult, b: MaxEntResult, tol: float = 1e-6) -> bool:
    if a.feasible != b.feasible:
        return False
    if not a.feasible:
        return True
    if len(a.maxima) != len(b.maxima):
        return False
    return all(any(np.abs(p.point - q.point).max() <= tol for q in b.maxima) for p in a.maxima)


# ---------------------------------------------------------------------------
# ratio bounds


def _homog(p: Poly, K: int) -> np.ndarray:
    a, b = p.linear_coeffs(K)
    return a + b  # b * sum(u) = b on the simplex


def _cc_bounds(cell: Cell, num: Poly, den: Poly) -> tuple[float, float] | None:
    """Charnes-Cooper LPs for min/max of num/den over a linear cell."""
    K = cell.K
    A_eq, b_eq, A_ub, b_ub = cell.linear_system()
    # homogenize a.u = b as (a - b*1).y = 0
    H_eq = A_eq - b_eq[:, None] if A_eq.size else np.zeros((0, K))
    H_ub = A_ub - b_ub[:, None] if A_ub.size else np.zeros((0, K))
    d = _homog(den, K)
    n = _homog(num, K)
    Aeq = np.vstack([H_eq, d.reshape(1, -1)])
    beq = np.concatenate([np.zeros(H_eq.shape[0]), [1.0]])
    out = []
    for sign in (1.0, -1.0):
        res = linprog(sign * n, A_ub=H_ub if H_ub.size else None,
                      b_ub=np.zeros(H_ub.shape[0]) if H_ub.size else None,
                      A_eq=Aeq, b_eq=beq, bounds=[(0, None)] * K, method="highs")
        if res.status == 2:
            return None
        if res.status == 3:
            out.append(sign * -math.inf if sign > 0 else math.inf)
            continue
        if res.status != 0:
            raise SolverError(res.message)
        out.append(float(n @ res.x))
    return out[0], out[1]


def _poly_bounds(cell: Cell, num: Poly, den: Poly, config: MaxEntConfig):
    K = cell.K
    fn, fd = num.compiled(K), den.compiled(K)
    cons = _scipy_cons(cell) + [{"type": "ineq", "fun": lambda u: fd(u) - 1e-9}]
    vals = []
    for sign in (1.0, -1.0):
        best = None
        for u0 in seed_points(K, config):
            res = minimize(lambda u: sign * fn(u) / max(fd(u), 1e-12), u0, method="SLSQP",
                           constraints=cons, bounds=[(0, 1)] * K, options={"maxiter": 500})
            u = res.x
            if cell.residual(u) < 1e-8 and fd(u) > 1e-10:
                v = fn(u) / fd(u)
                best = v if best is None else (min(best, v) if sign > 0 else max(best, v))
        if best is None:
            return None
        vals.append(best)
    return vals[0], vals[1]


def bound_statistic(region: RegionDescriptor, num: Poly, den: Poly,
                    config: MaxEntConfig | None = None) -> tuple[float, float]:
    """[min, max] of num/den over the closure of the region where den > 0."""
    config = config or DEFAULT
    lo, hi = math.inf, -math.inf
    for cell in region.cells:
        if cell.linear and num.is_linear() and den.is_linear():
            r = _cc_bounds(cell, num, den)
        else:
            r = _poly_bounds(cell, num, den, config)
        if r is None:
            continue
        lo, hi = min(lo, r[0]), max(hi, r[1])
    if lo > hi:
        raise RandWorldsError("the denominator vanishes on the whole region")
    return lo, hi
