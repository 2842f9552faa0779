"""The active-set QP solver on a small problem.

Minimizes x^T Q x with one coordinate pinned and two half-space rows,
then compares with the enumeration oracle and reports the KKT residual.
"""

import numpy as np

from ciforge.qp import QpProblem, kkt_check, oracle_qp, solve_qp

Q = np.array([[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]])
p = QpProblem.from_lists(
    Q,
    equalities=[(0, 1.0)],
    inequalities=[([0.0, 1.0, 0.0], 1.0), ([0.0, -1.0, 1.0], 0.5)],
)
sol = solve_qp(p)
ref = oracle_qp(p)
print("x*        ", np.round(sol.x, 6))
print("objective ", sol.objective, " oracle", ref.objective)
print("active set", sol.active_set, " iterations", sol.iterations)
print("KKT       ", kkt_check(p, sol.x))
