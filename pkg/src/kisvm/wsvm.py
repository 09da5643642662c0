"""Region-weighted kernel SVM.

Each training sample gets its own dual upper bound from its region tag:
``c_minus * c_hat`` for R1, ``c_minus`` for R2 and ``c_plus`` for R3. With
``c_hat = 1`` this is the class-weighted (cost-sensitive) SVM, and with
``c_minus = c_plus`` as well it is the ordinary soft-margin SVM.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, DegenerateTask, ShapeError, ValidationError
from .kernel_qp import (
    DEFAULT_TOLERANCE,
    DualSolution,
    KernelParams,
    KktReport,
    QpProblem,
    cross_gram,
    gram_matrix,
    kkt_report,
    solve_dual,
)
from .knowledge import KnowledgeRule, RegionTag

GAP_LIMIT = 1e-3
SV_THRESHOLD = 1e-8
_MIN_TOLERANCE = 1e-10


@dataclass(frozen=True)
class PenaltyScheme:
    c_minus: float
    c_plus: float
    c_hat: float = 1.0

    def __post_init__(self):
        if not (self.c_plus > 0 and self.c_minus >= self.c_plus):
            raise ValidationError(
                f"need c_minus >= c_plus > 0, got c_minus={self.c_minus}, c_plus={self.c_plus}"
            )
        if not self.c_hat >= 1:
            raise ValidationError(f"c_hat must be >= 1, got {self.c_hat}")

    @classmethod
    def standard(cls, c=1.0) -> PenaltyScheme:
        return cls(c, c, 1.0)

    def to_dict(self):
        return {"c_minus": self.c_minus, "c_plus": self.c_plus, "c_hat": self.c_hat}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["c_minus"]), float(d["c_plus"]), float(d["c_hat"]))


def assign_bounds(regions, scheme: PenaltyScheme) -> np.ndarray:
    regions = np.asarray(regions)
    table = np.array([np.nan, scheme.c_minus * scheme.c_hat, scheme.c_minus, scheme.c_plus])
    if regions.size and not np.isin(regions, [1, 2, 3]).all():
        raise ValidationError("region tags must be R1, R2 or R3")
    return table[regions.astype(int)]


def labels_from_regions(regions) -> np.ndarray:
    return np.where(np.asarray(regions) == RegionTag.R3, -1.0, 1.0)


@dataclass(frozen=True)
class TrainedModel:
    support_vectors: np.ndarray
    coefficients: np.ndarray  # alpha_i * y_i for alpha_i > SV_THRESHOLD
    bias: float
    kernel: KernelParams
    scheme: PenaltyScheme
    rule: KnowledgeRule | None = None
    diagnostics: KktReport | None = None

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]


def fit_dual(gram, labels, bounds, tolerance=DEFAULT_TOLERANCE):
    """Solve the dual and tighten the stopping tolerance until the relative
    primal-dual gap is at most ``GAP_LIMIT``.

    Returns ``(solution, report, problem)``.
    """
    problem = QpProblem(gram, labels, bounds, tolerance=tolerance)
    sol = solve_dual(problem)
    report = kkt_report(sol, problem)
    tol = tolerance
    while report.relative_gap > GAP_LIMIT:
        if tol <= _MIN_TOLERANCE:
            raise ConvergenceError(
                f"relative duality gap {report.relative_gap:.3g} above {GAP_LIMIT}",
                solution=sol,
                violation=report.max_violation,
            )
        tol /= 10
        tighter = replace(problem, tolerance=tol)
        sol = solve_dual(tighter, alpha0=sol.alpha)
        report = kkt_report(sol, problem)
    return sol, report, problem


def train(features, regions, scheme: PenaltyScheme, kernel: KernelParams, rule=None,
          tolerance=DEFAULT_TOLERANCE, gram=None) -> TrainedModel:
    """Train a region-weighted SVM.

    Labels are implied by the tags (R1/R2 positive, R3 negative). A
    precomputed ``gram`` may be passed to skip kernel evaluation.

    Raises
    ------
    DegenerateTask
        If every sample carries the same label.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"features must be 2-D, got shape {X.shape}")
    regions = np.asarray(regions)
    if regions.shape != (X.shape[0],):
        raise ShapeError(f"{regions.size} region tags for {X.shape[0]} samples")
    y = labels_from_regions(regions)
    if np.all(y > 0) or np.all(y < 0):
        raise DegenerateTask("training data contains a single class")
    if gram is None:
        gram = gram_matrix(X, kernel)
    sol, report, _ = fit_dual(gram, y, assign_bounds(regions, scheme), tolerance)
    return model_from_solution(X, y, sol, kernel, scheme, rule, report)


def model_from_solution(X, y, sol: DualSolution, kernel, scheme, rule=None, report=None):
    keep = sol.alpha > SV_THRESHOLD
    if not keep.any():
        raise DegenerateTask("solution has no support vectors")
    return TrainedModel(
        support_vectors=np.array(X[keep], dtype=float),
        coefficients=sol.alpha[keep] * y[keep],
        bias=float(sol.bias),
        kernel=kernel,
        scheme=scheme,
        rule=rule,
        diagnostics=report,
    )


def decision_function(model: TrainedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.dim:
        raise ShapeError(f"expected {model.dim} features, got {X.shape[1]}")
    return cross_gram(X, model.support_vectors, model.kernel) @ model.coefficients + model.bias


def decision_value(model: TrainedModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("decision_value takes a single feature vector")
    return float(decision_function(model, x)[0])


def predict(model: TrainedModel, X) -> np.ndarray:
    """Labels in {+1, -1}; a decision value of exactly zero maps to +1."""
    return np.where(decision_function(model, X) >= 0, 1, -1)
