import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ciforge.errors import ConfigurationError, InfeasibleError, SizeError
from ciforge.qp import QpProblem, kkt_check, oracle_qp, solve_fixed, solve_qp

from qp_cases import random_problem, random_spd


def test_solve_fixed_identity():
    sol = solve_fixed(np.eye(2), [0], [3.0])
    assert np.allclose(sol.x, [3, 0]) and sol.objective == pytest.approx(9)


def test_solve_fixed_all_fixed():
    Q = random_spd(np.random.default_rng(0), 4)
    x = np.array([1.0, -2.0, 0.5, 3.0])
    sol = solve_fixed(Q, np.arange(4), x)
    assert sol.objective == pytest.approx(x @ Q @ x)


def test_solve_fixed_schur_form_and_dominance():
    rng = np.random.default_rng(1)
    Q = random_spd(rng, 6)
    c, B = np.array([0, 2, 5]), np.array([1, 3, 4])
    xc = rng.normal(size=3)
    sol = solve_fixed(Q, c, xc)
    S = Q[np.ix_(c, c)] - Q[np.ix_(c, B)] @ np.linalg.solve(Q[np.ix_(B, B)], Q[np.ix_(B, c)])
    assert sol.objective == pytest.approx(xc @ S @ xc, rel=1e-10)
    X = np.zeros((10**4, 6))
    X[:, c] = xc
    X[:, B] = sol.x[B] + rng.normal(0, 1, (10**4, 3))
    assert np.all(np.einsum("ij,jk,ik->i", X, Q, X) >= sol.objective - 1e-12)


def test_solve_qp_halfspace():
    p = QpProblem.from_lists(np.eye(2), [], [([1.0, 0.0], 2.0)])
    sol = solve_qp(p)
    assert np.allclose(sol.x, [2, 0]) and sol.objective == pytest.approx(4)
    assert sol.active_set == (0,)


def test_solve_qp_with_equality():
    p = QpProblem.from_lists(np.eye(2), [(1, 0.0)], [([1.0, 0.0], 1.0)])
    sol = solve_qp(p)
    assert np.allclose(sol.x, [1, 0]) and sol.objective == pytest.approx(1)


def test_oracle_trivial():
    sol = oracle_qp(QpProblem(np.eye(3)))
    assert np.array_equal(sol.x, np.zeros(3)) and sol.objective == 0
    Q = random_spd(np.random.default_rng(2), 3)
    a = oracle_qp(QpProblem(Q, [0], [2.0]))
    b = solve_fixed(Q, [0], [2.0])
    assert a.objective == pytest.approx(b.objective) and np.allclose(a.x, b.x)


def test_oracle_size_limit():
    A = np.eye(17)
    with pytest.raises(SizeError):
        oracle_qp(QpProblem(np.eye(17), A=A, b=np.zeros(17)))


def test_against_oracle_300():
    rng = np.random.default_rng(2024)
    for _ in range(300):
        p = random_problem(rng)
        sol = solve_qp(p)
        ref = oracle_qp(p)
        assert abs(sol.objective - ref.objective) <= 1e-6
        assert kkt_check(p, sol.x)["residual"] <= 1e-8
        assert sol.kkt_residual <= 1e-8
        assert sol.objective == pytest.approx(p.objective(sol.x), rel=1e-12)


def test_kkt_checker_rejects_suboptimal():
    p = QpProblem.from_lists(np.eye(2), [], [([1.0, 0.0], 2.0)])
    assert kkt_check(p, [3.0, 0.0])["residual"] > 1e-3
    assert kkt_check(p, [1.0, 0.0])["primal"] == pytest.approx(1.0)
    assert kkt_check(p, [2.0, 0.0])["residual"] <= 1e-12


def test_infeasible():
    p = QpProblem.from_lists(np.eye(2), [(0, 0.0)], [([1.0, 0.0], 1.0)])
    with pytest.raises(InfeasibleError):
        solve_qp(p)
    p = QpProblem.from_lists(np.eye(1), [], [([1.0], 1.0), ([-1.0], 0.0)])
    with pytest.raises(InfeasibleError):
        solve_qp(p)


def test_problem_validation():
    with pytest.raises(ConfigurationError):
        QpProblem(np.eye(2), [0, 0], [1.0, 2.0])
    with pytest.raises(ConfigurationError):
        QpProblem(np.ones((2, 3)))
    with pytest.raises(ConfigurationError):
        QpProblem(np.eye(2), A=np.eye(2), b=np.zeros(3))


def test_monotone_under_added_constraints():
    rng = np.random.default_rng(5)
    for _ in range(40):
        n = 6
        Q = random_spd(rng, n)
        x0 = rng.normal(0, 2, n)
        A = np.zeros((0, n))
        b = np.zeros(0)
        prev = 0.0
        for _ in range(5):
            a = rng.standard_normal(n)
            A = np.vstack([A, a])
            b = np.append(b, a @ x0 - rng.exponential())
            val = solve_qp(QpProblem(Q, A=A, b=b)).objective
            assert val >= prev - 1e-9
            prev = val


def test_scale_equivariance():
    rng = np.random.default_rng(6)
    for _ in range(20):
        p = random_problem(rng)
        a = solve_qp(p)
        b = solve_qp(QpProblem(3.7 * p.Q, p.eq_idx, p.eq_val, p.A, p.b))
        assert b.objective == pytest.approx(3.7 * a.objective, rel=1e-9, abs=1e-12)
        assert np.allclose(a.x, b.x, atol=1e-9)


def test_deterministic():
    p = random_problem(np.random.default_rng(7))
    a, b = solve_qp(p), solve_qp(p)
    assert a.x.tobytes() == b.x.tobytes() and a.iterations == b.iterations


def test_larger_bound_problem_converges():
    rng = np.random.default_rng(8)
    n = 64
    Q = random_spd(rng, n, cond=1e3)
    idx = np.arange(0, n, 2)
    A = np.zeros((idx.size, n))
    A[np.arange(idx.size), idx] = rng.choice([-1.0, 1.0], idx.size)
    p = QpProblem(Q, A=A, b=np.full(idx.size, 3.0))
    sol = solve_qp(p)
    assert kkt_check(p, sol.x)["residual"] <= 1e-8


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_oracle_property(seed):
    p = random_problem(np.random.default_rng(seed), n_max=6, ineq_max=6)
    assert solve_qp(p).objective == pytest.approx(oracle_qp(p).objective, abs=1e-6)
