"""RBF kernel, Gram assembly and an SMO solver for box-constrained SVM duals.

The dual handled here is

    max_a  sum(a) - 1/2 a' (yy' * K) a
    s.t.   y' a = 0,   0 <= a_i <= u_i

with one upper bound ``u_i`` per sample. Objective values reported by this
module are always in this maximisation form, so they are non-negative and
increase monotonically across SMO iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import ConvergenceError, DegenerateTask, ShapeError, ValidationError

DEFAULT_TOLERANCE = 1e-3
_TAU = 1e-12


@dataclass(frozen=True)
class KernelParams:
    """Gaussian kernel ``exp(-gamma * ||x - y||^2)``."""

    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")


def rbf(x, y, params: KernelParams) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"dimension mismatch: {x.size} vs {y.size}")
    d = x - y
    return float(np.exp(-params.gamma * np.dot(d, d)))


def _as_matrix(X, name="X") -> np.ndarray:
    try:
        X = np.asarray(X, dtype=float)
    except ValueError as exc:  # ragged nested lists
        raise ShapeError(f"{name} is ragged") from exc
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {X.shape}")
    return X


def squared_distances(X) -> np.ndarray:
    """Pairwise squared distances, exactly symmetric with a zero diagonal.

    Kept separate from the kernel so a grid over gamma can reuse it.
    """
    X = _as_matrix(X)
    if X.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(X, "sqeuclidean"))


def gram_matrix(X, params: KernelParams) -> np.ndarray:
    return np.exp(-params.gamma * squared_distances(X))


def cross_gram(A, B, params: KernelParams) -> np.ndarray:
    """Kernel values ``K[i, j] = rbf(A[i], B[j])``."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return np.exp(-params.gamma * cdist(A, B, "sqeuclidean"))


@dataclass
class QpProblem:
    gram: np.ndarray
    labels: np.ndarray
    upper_bounds: np.ndarray
    tolerance: float = DEFAULT_TOLERANCE
    max_passes: int | None = None
    _q: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.gram = np.asarray(self.gram, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float).ravel()
        self.upper_bounds = np.asarray(self.upper_bounds, dtype=float).ravel()
        n = self.labels.size
        if self.gram.shape != (n, n):
            raise ShapeError(f"gram shape {self.gram.shape} does not match {n} labels")
        if self.upper_bounds.size != n:
            raise ShapeError(f"{self.upper_bounds.size} bounds for {n} labels")
        if not np.all(np.abs(self.labels) == 1):
            raise ValidationError("labels must be +1 or -1")
        if not np.all(self.upper_bounds > 0):
            raise ValidationError("upper bounds must be positive")
        if np.max(np.abs(self.gram - self.gram.T), initial=0.0) > 1e-12:
            raise ValidationError("gram matrix is not symmetric")
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be positive")
        if self.max_passes is None:
            self.max_passes = max(10 * n * n, 100)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def q(self) -> np.ndarray:
        """Signed Hessian ``yy' * K``, cached."""
        if self._q is None:
            self._q = self.labels[:, None] * self.labels[None, :] * self.gram
        return self._q


@dataclass(frozen=True)
class DualSolution:
    alpha: np.ndarray
    bias: float
    objective: float
    iterations: int
    max_kkt_violation: float


class KktReport(NamedTuple):
    max_violation: float
    primal_objective: float
    dual_objective: float
    relative_gap: float


def dual_objective(alpha, problem: QpProblem) -> float:
    alpha = np.asarray(alpha, dtype=float)
    return float(alpha.sum() - 0.5 * alpha @ problem.q @ alpha)


def _violating_pair(alpha, grad, y, ub):
    """Maximal violating pair (i, j) and its violation ``m - M``.

    ``i`` maximises ``-y_t G_t`` over I_up, ``j`` minimises it over I_low;
    the lowest index wins ties. Returns ``(-1, -1, 0.0)`` when either set
    is empty.
    """
    score = -y * grad
    pos = y > 0
    below = alpha < ub
    above = alpha > 0
    up = np.where(pos, below, above)
    low = np.where(pos, above, below)
    if not up.any() or not low.any():
        return -1, -1, 0.0
    up_score = np.where(up, score, -np.inf)
    low_score = np.where(low, score, np.inf)
    i = int(np.argmax(up_score))
    j = int(np.argmin(low_score))
    return i, j, float(up_score[i] - low_score[j])


def max_kkt_violation(alpha, problem: QpProblem) -> float:
    alpha = np.asarray(alpha, dtype=float)
    grad = problem.q @ alpha - 1.0
    _, _, viol = _violating_pair(alpha, grad, problem.labels, problem.upper_bounds)
    return max(viol, 0.0)


@njit(cache=True)
def _update_pair(ai, aj, yi, yj, ci, cj, gi, gj, qii, qjj, qij):
    # Analytic two-variable step clipped to the box; the clipping sequence
    # follows the LIBSVM solver, generalised to per-sample C.
    if yi != yj:
        quad = qii + qjj + 2.0 * qij
        if quad <= 0:
            quad = _TAU
        delta = (-gi - gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj = 0.0
                ai = diff
        elif ai < 0:
            ai = 0.0
            aj = -diff
        if diff > ci - cj:
            if ai > ci:
                ai = ci
                aj = ci - diff
        elif aj > cj:
            aj = cj
            ai = cj + diff
    else:
        quad = qii + qjj - 2.0 * qij
        if quad <= 0:
            quad = _TAU
        delta = (gi - gj) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > ci:
            if ai > ci:
                ai = ci
                aj = total - ci
        elif aj < 0:
            aj = 0.0
            ai = total
        if total > cj:
            if aj > cj:
                aj = cj
                ai = total - cj
        elif ai < 0:
            ai = 0.0
            aj = total
    return ai, aj


@njit(cache=True)
def _smo_loop(q, y, ub, alpha, grad, tol, max_iter, trace):
    """In-place SMO iterations. Returns ``(iterations, violation)``.

    ``trace`` receives the dual objective after each step when it has room
    for ``max_iter + 1`` entries; pass an empty array to skip recording.
    """
    n = y.size
    record = trace.size > max_iter
    if record:
        trace[0] = -0.5 * np.dot(alpha, grad - 1.0)
    it = 0
    viol = np.inf
    while True:
        i = -1
        j = -1
        gmax = -np.inf
        gmin = np.inf
        for t in range(n):
            s = -y[t] * grad[t]
            if y[t] > 0:
                if alpha[t] < ub[t] and s > gmax:
                    gmax = s
                    i = t
                if alpha[t] > 0 and s < gmin:
                    gmin = s
                    j = t
            else:
                if alpha[t] > 0 and s > gmax:
                    gmax = s
                    i = t
                if alpha[t] < ub[t] and s < gmin:
                    gmin = s
                    j = t
        if i < 0 or j < 0:
            viol = 0.0
            break
        viol = gmax - gmin
        if viol <= tol or it >= max_iter:
            break
        ai_old = alpha[i]
        aj_old = alpha[j]
        ai, aj = _update_pair(
            ai_old, aj_old, y[i], y[j], ub[i], ub[j], grad[i], grad[j],
            q[i, i], q[j, j], q[i, j],
        )
        alpha[i] = ai
        alpha[j] = aj
        dai = ai - ai_old
        daj = aj - aj_old
        for t in range(n):
            grad[t] += q[t, i] * dai + q[t, j] * daj
        it += 1
        if record:
            trace[it] = -0.5 * np.dot(alpha, grad - 1.0)
    return it, viol


def solve_dual(problem: QpProblem, alpha0=None, history: list | None = None) -> DualSolution:
    """Solve the box-constrained dual by SMO with maximal-violating-pair selection.

    Parameters
    ----------
    problem
        Gram, labels and per-sample upper bounds.
    alpha0
        Optional feasible starting point (box and ``y'a = 0`` must hold).
        Defaults to zero.
    history
        If given, the dual objective after every accepted step is appended,
        starting with the initial value.

    Raises
    ------
    DegenerateTask
        If only one label is present.
    ConvergenceError
        If the violation is still above ``problem.tolerance`` after
        ``problem.max_passes`` updates. The exception carries the last iterate.
    """
    y = problem.labels
    ub = problem.upper_bounds
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DegenerateTask("both labels must be present to train a classifier")
    q = np.ascontiguousarray(problem.q)
    n = problem.n
    if alpha0 is None:
        alpha = np.zeros(n)
        grad = -np.ones(n)
    else:
        alpha = np.clip(np.array(alpha0, dtype=float), 0.0, ub)
        grad = q @ alpha - 1.0
    max_iter = int(problem.max_passes)
    trace = np.empty(max_iter + 1 if history is not None else 0)
    it, viol = _smo_loop(q, y, ub, alpha, grad, float(problem.tolerance), max_iter, trace)
    if history is not None:
        history.extend(trace[: it + 1].tolist())

    viol = max(float(viol), 0.0)
    objective = -0.5 * float(alpha @ (grad - 1.0))
    if viol > problem.tolerance:
        try:
            bias = compute_bias(alpha, problem)
        except DegenerateTask:
            bias = 0.0
        partial = DualSolution(alpha, bias, objective, it, viol)
        raise ConvergenceError(
            f"SMO did not reach tolerance {problem.tolerance:g} in {it} iterations "
            f"(violation {viol:.3g})",
            solution=partial,
            violation=viol,
        )
    bias = compute_bias(alpha, problem)
    return DualSolution(alpha, bias, objective, it, viol)


def compute_bias(alpha, problem: QpProblem) -> float:
    """Offset ``b`` of the decision function for a feasible dual point.

    With free support vectors (strictly inside their box) ``b`` is the mean
    of ``y_i - sum_j a_j y_j K_ij`` over them. Otherwise ``b`` is the
    midpoint of the interval allowed by the KKT sign conditions of the
    bounded points.
    """
    alpha = np.asarray(alpha, dtype=float)
    if not np.any(alpha > 0):
        raise DegenerateTask("all dual coefficients are zero; bias is undefined")
    y = problem.labels
    ub = problem.upper_bounds
    s = problem.gram @ (alpha * y)
    free = (alpha > 0) & (alpha < ub)
    if free.any():
        return float(np.mean(y[free] - s[free]))
    # a_i = 0   needs y_i f_i >= 1,  a_i = u_i needs y_i f_i <= 1
    at_zero = alpha <= 0
    lower_set = (at_zero & (y > 0)) | (~at_zero & (y < 0))
    upper_set = (at_zero & (y < 0)) | (~at_zero & (y > 0))
    edge = y - s
    lo = np.max(edge[lower_set]) if lower_set.any() else None
    hi = np.min(edge[upper_set]) if upper_set.any() else None
    if lo is None:
        return float(hi)
    if hi is None:
        return float(lo)
    return float(0.5 * (lo + hi))


def kkt_report(solution: DualSolution, problem: QpProblem) -> KktReport:
    """Optimality diagnostics of a dual solution.

    The primal value uses hinge slacks, ``1/2 a'Qa + sum_i u_i (1 - y_i f_i)_+``
    with ``f`` the decision function built from ``solution``.
    """
    alpha = np.asarray(solution.alpha, dtype=float)
    y = problem.labels
    qa = problem.q @ alpha
    quad = float(alpha @ qa)
    dual = float(alpha.sum() - 0.5 * quad)
    f = problem.gram @ (alpha * y) + solution.bias
    slack = np.maximum(0.0, 1.0 - y * f)
    primal = 0.5 * quad + float(problem.upper_bounds @ slack)
    _, _, viol = _violating_pair(alpha, qa - 1.0, y, problem.upper_bounds)
    gap = abs(primal - dual) / (1.0 + abs(dual))
    return KktReport(max(viol, 0.0), primal, dual, gap)
