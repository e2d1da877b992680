"""Independent numeric checks for maximum-entropy answers."""
from __future__ import annotations

import itertools

import numpy as np
from scipy.linalg import null_space

from randworlds.maxent import entropy


def perturbation_gain(region, v, n=300, radius=1e-4, seed=0):
    """Largest entropy gain over random feasible moves of norm ``radius`` from v.

    Moves are drawn from the null space of the equality system of each cell
    containing v and kept only if they stay inside the region.
    Returns (gain, number of feasible moves).
    """
    rng = np.random.default_rng(seed)
    v = np.asarray(v, dtype=float)
    best, feasible = -np.inf, 0
    for cell in region.cells:
        if cell.residual(v) > 1e-9 or not cell.linear:
            continue
        A_eq, _, A_ub, b_ub = cell.linear_system()
        rows = [np.ones((1, cell.K))]
        if A_eq.size:
            rows.append(A_eq)
        basis = null_space(np.vstack(rows))
        if basis.shape[1] == 0:
            continue
        for _ in range(n):
            d = basis @ rng.normal(size=basis.shape[1])
            d *= radius / np.linalg.norm(d)
            u = v + d
            if u.min() < 0 or cell.residual(u) > 1e-13:
                continue
            feasible += 1
            best = max(best, entropy(u) - entropy(v))
    return best, feasible


def grid_max(region, step=1e-3):
    """Best entropy over a regular grid of the simplex (K <= 3) inside the region."""
    K = region.K
    M = int(round(1 / step))
    best, arg = -np.inf, None
    if K == 2:
        pts = ((i / M, 1 - i / M) for i in range(M + 1))
    elif K == 3:
        pts = ((i / M, j / M, (M - i - j) / M) for i in range(M + 1) for j in range(M + 1 - i))
    else:
        raise ValueError("grid search is only for K <= 3")
    for p in pts:
        u = np.array(p)
        if region.contains(u, tol=1e-12):
            h = entropy(u)
            if h > best:
                best, arg = h, u
    return best, arg


def simplex_grid(K, M):
    for comp in itertools.product(range(M + 1), repeat=K):
        if sum(comp) == M:
            yield np.array(comp) / M
