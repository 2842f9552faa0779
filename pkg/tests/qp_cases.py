"""Random feasible QP instances shared by the solver tests and acceptance."""

import numpy as np

from ciforge.qp import QpProblem


def random_spd(rng, n, cond=50.0):
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.geomspace(1.0, cond, n)
    return U @ np.diag(w) @ U.T


def random_problem(rng, n_max=8, ineq_max=5):
    """A feasible problem with a mix of bound rows and general rows."""
    n = int(rng.integers(1, n_max + 1))
    Q = random_spd(rng, n, cond=float(rng.uniform(1, 100)))
    x0 = rng.normal(0, 2, n)
    n_eq = int(rng.integers(0, n))
    eq_idx = np.sort(rng.choice(n, n_eq, replace=False))
    m = int(rng.integers(0, ineq_max + 1))
    A = np.zeros((m, n))
    for i in range(m):
        if rng.random() < 0.5:
            A[i, rng.integers(n)] = rng.choice([-1.0, 1.0])
        else:
            A[i] = rng.standard_normal(n)
    # b below A x0 keeps x0 feasible; some rows start tight
    b = A @ x0 - rng.exponential(1.0, m) * (rng.random(m) < 0.7)
    return QpProblem(Q, eq_idx, x0[eq_idx], A, b)
