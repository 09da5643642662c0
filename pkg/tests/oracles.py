"""Reference solvers used only by the tests.

Nothing here imports the SMO code path: the QP oracle minimises the dual by
accelerated projected gradient with an exact projection onto
``{0 <= a <= u, y'a = 0}``.
"""

import numpy as np


def project(v, y, ub):
    """Euclidean projection of ``v`` onto ``{0 <= a <= ub, y'a = 0}``.

    ``a(lam) = clip(v - lam*y, 0, ub)`` and ``h(lam) = y'a(lam)`` is
    non-increasing and piecewise linear, so the root is found exactly from
    the sorted breakpoints.
    """
    def h(lam):
        return y @ np.clip(v - lam * y, 0.0, ub)

    bps = np.unique(np.concatenate([v * y, (v - ub) * y]))
    vals = np.array([h(b) for b in bps])
    # h decreasing: find last breakpoint with h >= 0 and first with h <= 0
    if vals[0] < 0 or vals[-1] > 0:
        raise RuntimeError("projection set is empty")
    k = np.searchsorted(-vals, 0.0, side="left")
    if vals[k] == 0:
        lam = bps[k]
    else:
        lo, hi = bps[k - 1], bps[k]
        flo, fhi = vals[k - 1], vals[k]
        lam = lo + (hi - lo) * flo / (flo - fhi)
    return np.clip(v - lam * y, 0.0, ub)


def _polish(a, Q, y, ub, tol=1e-9):
    """Solve the equality-constrained QP on the free set of ``a`` exactly."""
    n = a.size
    at_lo = a <= tol * np.maximum(ub, 1.0)
    at_hi = a >= ub - tol * np.maximum(ub, 1.0)
    free = ~(at_lo | at_hi)
    if not free.any():
        return None
    fixed = np.where(at_hi, ub, 0.0)
    F = np.flatnonzero(free)
    m = F.size
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = Q[np.ix_(F, F)]
    A[:m, m] = y[F]
    A[m, :m] = y[F]
    rhs = np.empty(m + 1)
    rhs[:m] = 1.0 - Q[F][:, ~free] @ fixed[~free]
    rhs[m] = -y[~free] @ fixed[~free]
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    out = fixed.copy()
    out[F] = sol[:m]
    if np.any(out < -1e-12) or np.any(out > ub + 1e-12):
        return None
    return np.clip(out, 0.0, ub)


def gradient_mapping_norm(a, Q, y, ub, L):
    g = Q @ a - 1.0
    return L * np.linalg.norm(a - project(a - g / L, y, ub))


def qp_oracle(gram, labels, ub, tol=1e-10, max_iter=200_000):
    """Minimise ``1/2 a'Qa - sum(a)`` over the dual feasible set.

    Returns ``(alpha, dual_objective)`` with the objective in maximisation
    form ``sum(a) - 1/2 a'Qa``. Stops once the projected-gradient mapping
    norm is at most ``tol``.
    """
    y = np.asarray(labels, dtype=float)
    ub = np.asarray(ub, dtype=float)
    Q = y[:, None] * y[None, :] * np.asarray(gram, dtype=float)
    L = max(np.linalg.eigvalsh(Q)[-1], 1e-12)

    def f(a):
        return 0.5 * a @ Q @ a - a.sum()

    a = project(np.zeros_like(y), y, ub)
    z = a.copy()
    t = 1.0
    for it in range(max_iter):
        if it % 50 == 0:
            res = gradient_mapping_norm(a, Q, y, ub, L)
            if res <= tol:
                break
            if res < 1e-5:
                cand = _polish(a, Q, y, ub)
                if cand is not None and gradient_mapping_norm(cand, Q, y, ub, L) <= tol:
                    a = cand
                    break
        g = Q @ z - 1.0
        a_new = project(z - g / L, y, ub)
        if f(a_new) > f(a) + 1e-15 * (1 + abs(f(a))):  # adaptive restart
            z = a.copy()
            t = 1.0
            continue
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        z = a_new + ((t - 1) / t_new) * (a_new - a)
        a, t = a_new, t_new
    else:
        raise RuntimeError("QP oracle did not converge")
    return a, float(a.sum() - 0.5 * a @ Q @ a)


def oracle_bias(alpha, gram, labels, ub, tol=1e-7):
    """Bias interval from KKT sign conditions at an oracle optimum.

    Returns ``(lo, hi)``; every ``b`` in it satisfies the conditions.
    """
    y = np.asarray(labels, dtype=float)
    s = np.asarray(gram) @ (alpha * y)
    edge = y - s
    free = (alpha > tol) & (alpha < ub - tol)
    if free.any():
        return float(edge[free].min()), float(edge[free].max())
    zero = alpha <= tol
    lo_set = (zero & (y > 0)) | (~zero & (y < 0))
    hi_set = (zero & (y < 0)) | (~zero & (y > 0))
    lo = edge[lo_set].max() if lo_set.any() else -np.inf
    hi = edge[hi_set].min() if hi_set.any() else np.inf
    return float(lo), float(hi)


def random_qp(rng, n, dim=3, c_minus=None, c_plus=None, c_hat=None):
    """Random RBF dual with bounds drawn from ``{c- * c_hat, c-, c+}``."""
    X = rng.normal(size=(n, dim))
    gamma = float(rng.choice([0.25, 0.5, 1.0, 2.0]))
    diff = X[:, None, :] - X[None, :, :]
    gram = np.exp(-gamma * np.sum(diff**2, axis=-1))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    c_plus = float(rng.uniform(0.2, 2.0)) if c_plus is None else c_plus
    c_minus = float(c_plus * rng.uniform(1.0, 3.0)) if c_minus is None else c_minus
    c_hat = float(rng.uniform(1.0, 5.0)) if c_hat is None else c_hat
    in_region = rng.random(n) < 0.4
    ub = np.where(y < 0, c_plus, np.where(in_region, c_minus * c_hat, c_minus))
    return X, gamma, gram, y, ub
