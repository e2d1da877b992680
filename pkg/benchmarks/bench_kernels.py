"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from randworlds import _kernels as k


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    A_ub = np.array([[1.0, 1.0, 0, 0, 0, 0, 0, 0], [0, 0, 1.0, 0, 1.0, 0, 0, 0]])
    b_ub = np.array([-0.4, -0.3])
    A_eq = np.zeros((0, 8))
    b_eq = np.zeros(0)
    U = np.random.default_rng(0).dirichlet(np.ones(8), size=200_000)
    C = k._lattice_numpy(20, 5)
    return [
        ("assignments N=8 K=4", lambda: k._assignments_numba(8, 4), lambda: k._assignments_numpy(8, 4)),
        ("lattice M=30 K=6", lambda: k._lattice_numba(30, 6), lambda: k._lattice_numpy(30, 6)),
        ("entropy 200k x 8", lambda: k._entropy_rows_numba(U), lambda: k._entropy_rows_numpy(U)),
        ("grid_scan M=16 K=8",
         lambda: k._grid_scan_numba(16, 8, A_ub, b_ub, A_eq, b_eq, 1e-12),
         lambda: k._grid_scan_numpy(16, 8, A_ub, b_ub, A_eq, b_eq, 1e-12)),
        ("log_multinomial", lambda: k._log_multinomial_numba(C), lambda: k._log_multinomial_numpy(C)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':24} {'numba (s)':>10} {'numpy (s)':>10} {'speedup':>8}")
    for name, fast, slow in cases():
        a, b = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:24} {a:10.4f} {b:10.4f} {b / a:8.1f}")


if __name__ == "__main__":
    main()
