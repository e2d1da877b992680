import numpy as np
import pytest

from randworlds import _kernels as k


@pytest.mark.parametrize("N, K", [(1, 2), (3, 2), (4, 4), (2, 8)])
def test_assignments_agree(N, K):
    a1, c1 = k._assignments_numba(N, K)
    a2, c2 = k._assignments_numpy(N, K)
    assert np.array_equal(a1, a2) and np.array_equal(c1, c2)
    assert a1.shape == (K ** N, N)


@pytest.mark.parametrize("M, K", [(1, 2), (5, 3), (6, 4), (3, 8)])
def test_lattice_agrees(M, K):
    a, b = k._lattice_numba(M, K), k._lattice_numpy(M, K)
    assert np.array_equal(a, b)
    assert (a.sum(axis=1) == M).all()


def test_entropy_and_log_multinomial_agree():
    rng = np.random.default_rng(0)
    U = rng.dirichlet(np.ones(5), size=50)
    U[0, :2] = [0.0, U[0, 0] + U[0, 1]]
    assert np.allclose(k._entropy_rows_numba(U), k._entropy_rows_numpy(U))
    C = k._lattice_numpy(7, 3)
    assert np.allclose(k._log_multinomial_numba(C), k._log_multinomial_numpy(C))


def test_grid_scan_agrees():
    # u1 <= 0.3 and u2 = u3 on the 1/20 lattice of the 4-simplex
    A_ub = np.array([[1.0, 0, 0, 0]])
    b_ub = np.array([-0.3])
    A_eq = np.array([[0, 1.0, -1.0, 0]])
    b_eq = np.zeros(1)
    h1, p1, n1 = k._grid_scan_numba(20, 4, A_ub, b_ub, A_eq, b_eq, 1e-12)
    h2, p2, n2 = k._grid_scan_numpy(20, 4, A_ub, b_ub, A_eq, b_eq, 1e-12)
    assert n1 == n2 > 0
    assert h1 == pytest.approx(h2)
    assert p1[0] <= 0.3 + 1e-12 and p1[1] == pytest.approx(p1[2])


def test_numpy_fallback_end_to_end():
    import json
    import os
    import subprocess
    import sys
    env = dict(os.environ, RANDWORLDS_DISABLE_NUMBA="1")
    code = ("from randworlds import _kernels; from randworlds.cli import main; "
            "import sys; assert _kernels.backend_name() == 'numpy'; "
            "sys.exit(main(['believe', 'hepatitis.rwkb', '--json']))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout
    assert json.loads(out)["value"] == pytest.approx(0.8)
