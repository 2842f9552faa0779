"""Small dense strictly convex QPs.

Problems have the form::

    minimize    x^T Q x
    subject to  x[i] = v_i          for (i, v_i) in equalities
                A x >= b

with ``Q`` symmetric positive definite. :func:`solve_qp` is a primal
active-set method, :func:`oracle_qp` enumerates every active-set
hypothesis and :func:`kkt_check` certifies a candidate through a
separate non-negative least-squares path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog, nnls

from .errors import ConfigurationError, InfeasibleError, NonConvergenceError, SizeError

__all__ = [
    "QpProblem",
    "QpSolution",
    "solve_fixed",
    "solve_qp",
    "oracle_qp",
    "kkt_check",
    "ORACLE_MAX_INEQ",
]

FEAS_TOL = 1e-9
ORACLE_MAX_INEQ = 16


@dataclass(frozen=True)
class QpProblem:
    Q: np.ndarray
    eq_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    eq_val: np.ndarray = field(default_factory=lambda: np.zeros(0))
    A: np.ndarray | None = None
    b: np.ndarray | None = None

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise ConfigurationError("Q must be square")
        eq_idx = np.asarray(self.eq_idx, dtype=int).reshape(-1)
        eq_val = np.asarray(self.eq_val, dtype=float).reshape(-1)
        if eq_idx.size != eq_val.size or np.unique(eq_idx).size != eq_idx.size:
            raise ConfigurationError("equality indices must be distinct and match values")
        if eq_idx.size and (eq_idx.min() < 0 or eq_idx.max() >= n):
            raise ConfigurationError("equality index out of range")
        A = np.zeros((0, n)) if self.A is None else np.asarray(self.A, dtype=float).reshape(-1, n)
        b = np.zeros(0) if self.b is None else np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise ConfigurationError("A and b disagree in row count")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "eq_idx", eq_idx)
        object.__setattr__(self, "eq_val", eq_val)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_lists(cls, Q, equalities=(), inequalities=()):
        """Build from ``[(index, value), ...]`` and ``[(row, bound), ...]``."""
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        eq = list(equalities)
        ineq = list(inequalities)
        A = np.array([np.asarray(a, dtype=float) for a, _ in ineq]).reshape(-1, n)
        b = np.array([bb for _, bb in ineq], dtype=float)
        return cls(Q, [i for i, _ in eq], [v for _, v in eq], A, b)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x)

    def violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        v = 0.0
        if self.eq_idx.size:
            v = max(v, float(np.max(np.abs(x[self.eq_idx] - self.eq_val))))
        if self.b.size:
            v = max(v, float(np.max(np.maximum(self.b - self.A @ x, 0.0))))
        return v


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    objective: float
    active_set: tuple = ()
    kkt_residual: float = 0.0
    iterations: int = 0


def solve_fixed(Q, fixed_idx, fixed_val) -> QpSolution:
    """Minimize ``x^T Q x`` with some coordinates pinned, the rest free.

    The free block is ``-Q_BB^{-1} Q_Bc x_c``; the optimal value is the
    Schur-complement form ``x_c^T (Q_cc - Q_cB Q_BB^{-1} Q_Bc) x_c``.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    fixed_idx = np.asarray(fixed_idx, dtype=int).reshape(-1)
    x = np.zeros(n)
    x[fixed_idx] = fixed_val
    mask = np.ones(n, dtype=bool)
    mask[fixed_idx] = False
    free = np.flatnonzero(mask)
    if fixed_idx.size == 0:
        return QpSolution(x, 0.0)
    res = 0.0
    if free.size:
        xc = x[fixed_idx]
        rhs = Q[np.ix_(free, fixed_idx)] @ xc
        cf = sla.cho_factor(Q[np.ix_(free, free)], lower=True)
        x[free] = -sla.cho_solve(cf, rhs)
        res = float(np.max(np.abs(Q[free] @ x))) if free.size else 0.0
    return QpSolution(x, float(x @ Q @ x), (), res, 0)


def _unconstrained_min(P, q):
    if P.shape[0] == 0:
        return np.zeros(0)
    return -sla.cho_solve(sla.cho_factor(P, lower=True), q)


def _restore_feasibility(u0, A, b, bound_col, bound_sign):
    """Project the unconstrained minimizer onto the feasible set.

    Bound-only problems are clipped coordinatewise; general rows use an
    L1 projection solved as an LP.
    """
    n = u0.size
    if A.shape[0] == 0:
        return u0.copy()
    if np.all(bound_col >= 0):
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        coef = A[np.arange(A.shape[0]), bound_col]
        lim = b / coef
        for j, s, v in zip(bound_col, bound_sign, lim):
            if s > 0:
                lo[j] = max(lo[j], v)
            else:
                hi[j] = min(hi[j], v)
        if np.any(lo > hi + FEAS_TOL * (1 + np.abs(lo))):
            raise InfeasibleError("contradictory bounds")
        return np.minimum(np.maximum(u0, lo), np.maximum(hi, lo))
    # variables [u, t]: min sum t, |u - u0| <= t, A u >= b
    I = np.eye(n)
    A_ub = np.block([[I, -I], [-I, -I], [-A, np.zeros((A.shape[0], n))]])
    b_ub = np.concatenate([u0, -u0, -b])
    c = np.concatenate([np.zeros(n), np.ones(n)])
    bounds = [(None, None)] * n + [(0, None)] * n
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status == 2:
        raise InfeasibleError("inequality system is infeasible")
    if res.status != 0:  # pragma: no cover - HiGHS failure
        raise NonConvergenceError(f"feasibility LP failed: {res.message}")
    u = res.x[:n]
    # tighten tiny LP violations along the row normals
    for _ in range(3):
        viol = b - A @ u
        if np.all(viol <= FEAS_TOL):
            break
        i = int(np.argmax(viol))
        u = u + A[i] * viol[i] / (A[i] @ A[i])
    return u


def solve_qp(p: QpProblem, max_iter: int | None = None) -> QpSolution:
    """Primal active-set method.

    Equalities are eliminated first. The iterate starts at the projection
    of the unconstrained minimizer onto the inequality set; each
    iteration then adds one blocking constraint or drops the working
    constraint with the most negative multiplier. Ties go to the lowest
    constraint index.
    """
    n = p.n
    Q = p.Q
    cap = 100 * max(n, 1) if max_iter is None else max_iter
    fixed = p.eq_idx
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    V = np.flatnonzero(mask)
    xc = p.eq_val
    P = Q[np.ix_(V, V)]
    q = Q[np.ix_(V, fixed)] @ xc if fixed.size else np.zeros(V.size)

    A_full = p.A
    A = A_full[:, V]
    b = p.b - (A_full[:, fixed] @ xc if fixed.size else 0.0)
    scale_b = 1.0 + np.abs(b)

    # rows touching no free variable are constants
    nz = np.count_nonzero(A, axis=1)
    const_rows = nz == 0
    if np.any(b[const_rows] > FEAS_TOL * scale_b[const_rows]):
        raise InfeasibleError("constraint violated by the fixed coordinates")
    rows = np.flatnonzero(~const_rows)
    bound_col = np.full(A.shape[0], -1)
    single = rows[nz[rows] == 1]
    if single.size:
        bound_col[single] = np.argmax(A[single] != 0, axis=1)
    bound_sign = np.sign(A[np.arange(A.shape[0]), np.maximum(bound_col, 0)])

    u0 = _unconstrained_min(P, q)
    feasible = np.all(A[rows] @ u0 >= b[rows] - FEAS_TOL * scale_b[rows]) if rows.size else True
    if feasible:
        u = u0
    else:
        u = _restore_feasibility(u0, A[rows], b[rows], bound_col[rows], bound_sign[rows])

    # initial working set: tight, linearly independent constraints
    W: list[int] = []
    fixed_cols: set[int] = set()
    gen_rows: list[np.ndarray] = []
    slack = A @ u - b
    for i in rows:
        if abs(slack[i]) > FEAS_TOL * scale_b[i]:
            continue
        if bound_col[i] >= 0:
            if bound_col[i] in fixed_cols:
                continue
            fixed_cols.add(int(bound_col[i]))
            W.append(int(i))
        else:
            basis = np.array([np.eye(V.size)[c] for c in fixed_cols] + gen_rows + [A[i]])
            if np.linalg.matrix_rank(basis) == basis.shape[0]:
                gen_rows.append(A[i])
                W.append(int(i))
    # snap working bounds exactly
    for i in W:
        if bound_col[i] >= 0:
            u[bound_col[i]] = b[i] / A[i, bound_col[i]]

    nv = V.size
    it = 0
    lam_W = np.zeros(0)
    at_min = False
    while True:
        if it >= cap:
            raise NonConvergenceError(f"active-set iteration cap {cap} reached")
        it += 1
        Wb = [i for i in W if bound_col[i] >= 0]
        Wg = [i for i in W if bound_col[i] < 0]
        fmask = np.ones(nv, dtype=bool)
        fmask[bound_col[Wb]] = False
        Fr = np.flatnonzero(fmask)
        g = 2.0 * (P @ u + q)
        pvec = np.zeros(nv)
        lam_g = np.zeros(len(Wg))
        if Fr.size:
            cf = sla.cho_factor(2.0 * P[np.ix_(Fr, Fr)], lower=True)
            if Wg:
                G = A[np.ix_(Wg, Fr)]
                Pinv_gT = sla.cho_solve(cf, G.T)
                Pinv_g = sla.cho_solve(cf, g[Fr])
                S = G @ Pinv_gT
                lam_g = np.linalg.solve(S, G @ Pinv_g)
                pvec[Fr] = Pinv_gT @ lam_g - Pinv_g
            else:
                pvec[Fr] = -sla.cho_solve(cf, g[Fr])
        step_scale = 1.0 + np.max(np.abs(u)) if nv else 1.0
        if at_min or np.max(np.abs(pvec), initial=0.0) <= 1e-12 * step_scale:
            at_min = False
            # multipliers of the working set at a stationary point
            lam = np.zeros(len(W))
            gen_part = A[Wg].T @ lam_g if Wg else np.zeros(nv)
            for k, i in enumerate(W):
                if bound_col[i] >= 0:
                    j = bound_col[i]
                    lam[k] = (g[j] - gen_part[j]) / A[i, j]
                else:
                    lam[k] = lam_g[Wg.index(i)]
            tol = 1e-10 * (1.0 + np.max(np.abs(g), initial=0.0))
            if lam.size == 0 or lam.min() >= -tol:
                lam_W = lam
                break
            drop = int(np.argmin(lam))
            W.pop(drop)
            continue
        Ap = A @ pvec
        alpha, block = 1.0, -1
        cand = np.zeros(A.shape[0], dtype=bool)
        cand[rows] = True
        cand[W] = False
        cand &= Ap < -1e-14 * (1.0 + np.max(np.abs(pvec)))
        if np.any(cand):
            idx = np.flatnonzero(cand)
            t = np.maximum((b[idx] - A[idx] @ u) / Ap[idx], 0.0)
            k = int(np.argmin(t))
            if t[k] < 1.0:
                alpha, block = float(t[k]), int(idx[k])
        u = u + alpha * pvec
        # a full unblocked step lands on the working-set minimizer
        at_min = block < 0
        if block >= 0:
            if bound_col[block] >= 0:
                u[bound_col[block]] = b[block] / A[block, bound_col[block]]
            W.append(block)
            W.sort()

    x = np.zeros(n)
    x[fixed] = xc
    x[V] = u
    # KKT residual of the solver's own certificate
    g_full = 2.0 * (Q @ x)
    lam_full = np.zeros(A_full.shape[0])
    lam_full[W] = lam_W
    stat_free = g_full[V] - A_full[:, V].T @ lam_full
    stat = float(np.max(np.abs(stat_free), initial=0.0))
    viol = p.violation(x)
    comp = float(np.max(np.abs(lam_full * (A_full @ x - p.b)), initial=0.0))
    dual = float(max(-lam_full.min(initial=0.0), 0.0))
    slack_full = A_full @ x - p.b
    active = tuple(int(i) for i in np.flatnonzero(np.abs(slack_full) <= 1e-9 * (1 + np.abs(p.b))))
    return QpSolution(x, p.objective(x), active, max(stat, viol, comp, dual), it)


def _solve_equality_qp(Q, E, e):
    """Minimize x^T Q x subject to E x = e via the KKT system."""
    n = Q.shape[0]
    k = E.shape[0]
    if k == 0:
        return np.zeros(n)
    KKT = np.block([[2 * Q, -E.T], [E, np.zeros((k, k))]])
    rhs = np.concatenate([np.zeros(n), e])
    sol, *_ = np.linalg.lstsq(KKT, rhs, rcond=None)
    x = sol[:n]
    if np.max(np.abs(E @ x - e)) > 1e-8 * (1 + np.max(np.abs(e))):
        return None
    return x


def oracle_qp(p: QpProblem) -> QpSolution:
    """Exhaustive active-set enumeration (test oracle).

    Every subset of the inequalities is treated as active (held with
    equality), the resulting equality-constrained QP is solved, and the
    best feasible candidate is returned.
    """
    m = p.A.shape[0]
    if m > ORACLE_MAX_INEQ:
        raise SizeError(f"oracle supports at most {ORACLE_MAX_INEQ} inequalities, got {m}")
    n = p.n
    Eeq = np.eye(n)[p.eq_idx]
    best = None
    best_obj = np.inf
    best_set = ()
    count = 0
    for r in range(m + 1):
        for S in itertools.combinations(range(m), r):
            count += 1
            E = np.vstack([Eeq, p.A[list(S)]]) if S else Eeq
            e = np.concatenate([p.eq_val, p.b[list(S)]])
            x = _solve_equality_qp(p.Q, E, e)
            if x is None:
                continue
            if m and np.any(p.A @ x < p.b - 1e-9 * (1 + np.abs(p.b))):
                continue
            obj = p.objective(x)
            if obj < best_obj - 1e-12:
                best, best_obj, best_set = x, obj, S
    if best is None:
        raise InfeasibleError("no feasible active-set hypothesis")
    return QpSolution(best, best_obj, tuple(best_set), 0.0, count)


def kkt_check(p: QpProblem, x, active_tol: float = 1e-7) -> dict:
    """Certify optimality of ``x`` independently of the solver.

    Multipliers of near-active inequalities are recovered by
    non-negative least squares (equality multipliers are sign-free), so
    dual feasibility holds by construction and the stationarity residual
    carries the verdict.
    """
    x = np.asarray(x, dtype=float)
    n = p.n
    g = 2.0 * (p.Q @ x)
    slack = p.A @ x - p.b if p.b.size else np.zeros(0)
    act = np.flatnonzero(slack <= active_tol * (1 + np.abs(p.b))) if slack.size else np.zeros(0, int)
    Eeq = np.eye(n)[p.eq_idx]
    C = np.vstack([Eeq, -Eeq, p.A[act]]).T if (p.eq_idx.size or act.size) else np.zeros((n, 0))
    if C.shape[1]:
        lam, _ = nnls(C, g, maxiter=50 * max(C.shape))
        resid = g - C @ lam
        lam_ineq = lam[2 * p.eq_idx.size :]
    else:
        resid = g
        lam_ineq = np.zeros(0)
    stationarity = float(np.max(np.abs(resid), initial=0.0))
    primal = p.violation(x)
    comp = float(np.max(np.abs(lam_ineq * slack[act]), initial=0.0)) if act.size else 0.0
    return {
        "stationarity": stationarity,
        "primal": primal,
        "dual": 0.0,
        "complementarity": comp,
        "residual": max(stationarity, primal, comp),
    }
