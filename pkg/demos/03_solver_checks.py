"""Checking the SMO solver: duality gap, KKT violation and a reference solve."""

import numpy as np
from scipy.optimize import minimize

from kisvm.kernel_qp import KernelParams, QpProblem, gram_matrix, kkt_report, solve_dual

rng = np.random.default_rng(1)
X = rng.normal(size=(25, 2))
y = np.where(X[:, 0] * X[:, 1] > 0, 1.0, -1.0)
ub = np.where(y > 0, np.where(X[:, 0] > 0, 6.0, 2.0), 1.0)
K = gram_matrix(X, KernelParams(1.0))

history = []
problem = QpProblem(K, y, ub, tolerance=1e-8)
sol = solve_dual(problem, history=history)
rep = kkt_report(sol, problem)
print(f"{sol.iterations} pair updates, dual {rep.dual_objective:.8f}, primal {rep.primal_objective:.8f}")
print(f"max KKT violation {rep.max_violation:.1e}, relative gap {rep.relative_gap:.1e}")
print("dual ascent monotone:", bool(np.all(np.diff(history) >= -1e-12)))

# the same QP through a generic constrained optimiser
Q = y[:, None] * y[None, :] * K
res = minimize(lambda a: 0.5 * a @ Q @ a - a.sum(), np.zeros(y.size), jac=lambda a: Q @ a - 1,
               bounds=list(zip(np.zeros(y.size), ub)),
               constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y}],
               method="SLSQP", options={"ftol": 1e-12, "maxiter": 500})
print(f"SLSQP dual {-res.fun:.8f}, difference {abs(-res.fun - sol.objective):.1e}")
