"""Numeric inner loops, compiled with numba when available.

Set ``RANDWORLDS_DISABLE_NUMBA=1`` to force the pure-numpy versions.  Both
implementations of each kernel are importable (``*_numba`` / ``*_numpy``) so
tests and the benchmark can compare them directly.
"""
from __future__ import annotations

import math
import os

import numpy as np
from scipy.special import gammaln

try:
    from numba import njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = _HAVE_NUMBA and not _flag("RANDWORLDS_DISABLE_NUMBA")


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# atom assignments: every map {0..N-1} -> {0..K-1}, in mixed-radix order


@njit(cache=True)
def _assignments_numba(N, K):
    total = K ** N
    out = np.zeros((total, N), dtype=np.int64)
    counts = np.zeros((total, K), dtype=np.int64)
    digits = np.zeros(N, dtype=np.int64)
    for r in range(total):
        for e in range(N):
            out[r, e] = digits[e]
            counts[r, digits[e]] += 1
        # increment, last element fastest
        e = N - 1
        while e >= 0:
            digits[e] += 1
            if digits[e] < K:
                break
            digits[e] = 0
            e -= 1
    return out, counts


def _assignments_numpy(N, K):
    if N == 0:
        return np.zeros((1, 0), dtype=np.int64), np.zeros((1, K), dtype=np.int64)
    grids = np.indices((K,) * N).reshape(N, -1).T.astype(np.int64)
    counts = np.zeros((grids.shape[0], K), dtype=np.int64)
    for j in range(K):
        counts[:, j] = (grids == j).sum(axis=1)
    return grids, counts


def assignments(N: int, K: int):
    """Return (assignments, counts) arrays for all K**N atom assignments."""
    if USE_NUMBA:
        return _assignments_numba(N, K)
    return _assignments_numpy(N, K)


# ---------------------------------------------------------------------------
# simplex lattice {n / M : n in Z^K_{>=0}, sum n = M}


@njit(cache=True)
def _n_compositions(M, K):
    # C(M + K - 1, K - 1) without overflow for the sizes we use
    r = 1
    for i in range(1, K):
        r = r * (M + i) // i
    return r


@njit(cache=True)
def _lattice_numba(M, K):
    total = _n_compositions(M, K)
    out = np.zeros((total, K), dtype=np.int64)
    cur = np.zeros(K, dtype=np.int64)
    cur[K - 1] = M
    for r in range(total):
        for j in range(K):
            out[r, j] = cur[j]
        if r == total - 1:
            break
        # next composition in lexicographic order of the first K-1 parts
        j = K - 2
        while j >= 0:
            rest = cur[K - 1]
            if rest > 0:
                cur[j] += 1
                for t in range(j + 1, K - 1):
                    cur[t] = 0
                s = 0
                for t in range(K - 1):
                    s += cur[t]
                cur[K - 1] = M - s
                break
            j -= 1
            # carry: fold part j+1 back into the remainder
            cur[K - 1] += cur[j + 1]
            cur[j + 1] = 0
    return out


def _lattice_numpy(M, K):
    if K == 1:
        return np.array([[M]], dtype=np.int64)
    rows = []
    for first in range(M + 1):
        sub = _lattice_numpy(M - first, K - 1)
        rows.append(np.column_stack([np.full(sub.shape[0], first, dtype=np.int64), sub]))
    return np.vstack(rows)


def lattice(M: int, K: int) -> np.ndarray:
    """All integer vectors of length K with nonnegative entries summing to M."""
    if K == 1 or M == 0:
        out = np.zeros((1, K), dtype=np.int64)
        out[0, K - 1] = M
        return out
    if USE_NUMBA:
        return _lattice_numba(M, K)
    return _lattice_numpy(M, K)


# ---------------------------------------------------------------------------
# entropy and constrained lattice scan


@njit(cache=True)
def _entropy_rows_numba(U):
    n, K = U.shape
    out = np.zeros(n)
    for r in range(n):
        h = 0.0
        for j in range(K):
            u = U[r, j]
            if u > 0.0:
                h -= u * math.log(u)
        out[r] = h
    return out


def _entropy_rows_numpy(U):
    U = np.asarray(U, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(U > 0, U * np.log(np.where(U > 0, U, 1.0)), 0.0)
    return -t.sum(axis=1)


# below this many rows numpy wins: dispatching a compiled kernel costs more
SMALL_ROWS = 4096


def entropy_rows(U: np.ndarray) -> np.ndarray:
    U = np.ascontiguousarray(U, dtype=np.float64)
    if USE_NUMBA and U.shape[0] >= SMALL_ROWS:
        return _entropy_rows_numba(U)
    return _entropy_rows_numpy(U)


@njit(cache=True)
def _grid_scan_numba(M, K, A_ub, b_ub, A_eq, b_eq, tol):
    total = _n_compositions(M, K)
    cur = np.zeros(K, dtype=np.int64)
    cur[K - 1] = M
    u = np.zeros(K)
    best_h = -1.0
    best = np.zeros(K)
    nfeas = 0
    for r in range(total):
        for j in range(K):
            u[j] = cur[j] / M
        ok = True
        for i in range(A_ub.shape[0]):
            s = b_ub[i]
            for j in range(K):
                s += A_ub[i, j] * u[j]
            if s > tol:
                ok = False
                break
        if ok:
            for i in range(A_eq.shape[0]):
                s = b_eq[i]
                for j in range(K):
                    s += A_eq[i, j] * u[j]
                if abs(s) > tol:
                    ok = False
                    break
        if ok:
            nfeas += 1
            h = 0.0
            for j in range(K):
                if u[j] > 0.0:
                    h -= u[j] * math.log(u[j])
            if h > best_h:
                best_h = h
                for j in range(K):
                    best[j] = u[j]
        if r == total - 1:
            break
        j = K - 2
        while j >= 0:
            if cur[K - 1] > 0:
                cur[j] += 1
                for t in range(j + 1, K - 1):
                    cur[t] = 0
                s2 = 0
                for t in range(K - 1):
                    s2 += cur[t]
                cur[K - 1] = M - s2
                break
            j -= 1
            cur[K - 1] += cur[j + 1]
            cur[j + 1] = 0
    return best_h, best, nfeas


def _grid_scan_numpy(M, K, A_ub, b_ub, A_eq, b_eq, tol):
    U = _lattice_numpy(M, K) / M
    ok = np.ones(U.shape[0], dtype=bool)
    if A_ub.shape[0]:
        ok &= np.all(U @ A_ub.T + b_ub <= tol, axis=1)
    if A_eq.shape[0]:
        ok &= np.all(np.abs(U @ A_eq.T + b_eq) <= tol, axis=1)
    if not ok.any():
        return -1.0, np.zeros(K), 0
    H = _entropy_rows_numpy(U[ok])
    i = int(np.argmax(H))
    return float(H[i]), U[ok][i].copy(), int(ok.sum())


def grid_scan(M, A_ub, b_ub, A_eq, b_eq, tol=1e-12):
    """Best-entropy point of the lattice (1/M)Z^K inside linear constraints.

    Constraints are ``A_ub u + b_ub <= 0`` and ``A_eq u + b_eq = 0``.
    Returns ``(entropy, point, number_of_feasible_lattice_points)``; entropy
    is -1 when nothing is feasible.
    """
    A_ub = np.ascontiguousarray(A_ub, dtype=np.float64)
    A_eq = np.ascontiguousarray(A_eq, dtype=np.float64)
    K = A_ub.shape[1] if A_ub.ndim == 2 and A_ub.shape[1] else A_eq.shape[1]
    A_ub = A_ub.reshape(-1, K)
    A_eq = A_eq.reshape(-1, K)
    b_ub = np.ascontiguousarray(b_ub, dtype=np.float64).reshape(-1)
    b_eq = np.ascontiguousarray(b_eq, dtype=np.float64).reshape(-1)
    if USE_NUMBA and K >= 2:
        h, p, n = _grid_scan_numba(M, K, A_ub, b_ub, A_eq, b_eq, tol)
        return float(h), p, int(n)
    return _grid_scan_numpy(M, K, A_ub, b_ub, A_eq, b_eq, tol)


# ---------------------------------------------------------------------------
# log multinomial coefficients (for Stirling-type checks)


@njit(cache=True)
def _log_multinomial_numba(C):
    n, K = C.shape
    out = np.zeros(n)
    for r in range(n):
        tot = 0
        s = 0.0
        for j in range(K):
            tot += C[r, j]
            s -= math.lgamma(C[r, j] + 1.0)
        out[r] = s + math.lgamma(tot + 1.0)
    return out


def _log_multinomial_numpy(C):
    C = np.asarray(C, dtype=np.float64)
    return gammaln(C.sum(axis=1) + 1.0) - gammaln(C + 1.0).sum(axis=1)


def log_multinomial(C: np.ndarray) -> np.ndarray:
    """Natural log of N! / prod n_j! for each row of counts."""
    C = np.ascontiguousarray(C, dtype=np.int64)
    if C.ndim == 1:
        C = C.reshape(1, -1)
    if USE_NUMBA:
        return _log_multinomial_numba(C)
    return _log_multinomial_numpy(C)
