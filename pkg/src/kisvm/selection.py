"""Stratified k-fold cross-validation and exhaustive grid search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product

import numpy as np

from .errors import ConfigurationError, ConvergenceError, DegenerateTask, ValidationError
from .evaluation import classwise_accuracy, ensemble_accuracy
from .kernel_qp import KernelParams, squared_distances
from .pipeline import BinaryTask
from .wsvm import PenaltyScheme, assign_bounds, fit_dual, labels_from_regions, train

DEFAULT_GAMMAS = (2.0**-4, 2.0**-2, 2.0**0, 2.0**2, 2.0**4)
DEFAULT_C_HATS = (1.0, 2.0, 3.0, 4.0, 5.0)
DEFAULT_C_MINUS = (1.0, 2.0, 3.0, 4.0, 5.0)


class SelectionMetric(str, Enum):
    ENSEMBLE_ACCURACY = "ensemble_accuracy"
    PLAIN_ACCURACY = "plain_accuracy"


@dataclass(frozen=True)
class CvConfig:
    folds: int = 5
    seed: int = 0
    metric: SelectionMetric = SelectionMetric.ENSEMBLE_ACCURACY

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigurationError("need at least 2 folds")
        object.__setattr__(self, "metric", SelectionMetric(self.metric))


@dataclass(frozen=True)
class GridSpec:
    """Cartesian grid over ``gamma x c_hat x c_minus`` with a fixed ``c_plus``.

    Combinations are enumerated in that nesting order (gamma outermost).
    """

    gamma_values: tuple[float, ...]
    c_hat_values: tuple[float, ...] = (1.0,)
    c_minus_values: tuple[float, ...] = (2.0,)
    c_plus: float = 1.0

    def __post_init__(self):
        for name in ("gamma_values", "c_hat_values", "c_minus_values"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ConfigurationError(f"{name} must not be empty")
            object.__setattr__(self, name, values)
        try:
            self.combinations()
        except ValidationError as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def knowledge(cls, gammas=DEFAULT_GAMMAS, c_hats=DEFAULT_C_HATS, c_minus=2.0, c_plus=1.0):
        return cls(tuple(gammas), tuple(c_hats), (c_minus,), c_plus)

    @classmethod
    def baseline(cls, gammas=DEFAULT_GAMMAS, c_minus_values=DEFAULT_C_MINUS, c_plus=1.0):
        return cls(tuple(gammas), (1.0,), tuple(c_minus_values), c_plus)

    def combinations(self) -> list[tuple[KernelParams, PenaltyScheme]]:
        return [
            (KernelParams(g), PenaltyScheme(cm, self.c_plus, ch))
            for g, ch, cm in product(self.gamma_values, self.c_hat_values, self.c_minus_values)
        ]

    def __len__(self):
        return len(self.gamma_values) * len(self.c_hat_values) * len(self.c_minus_values)

    def to_dict(self):
        return {
            "gamma_values": list(self.gamma_values),
            "c_hat_values": list(self.c_hat_values),
            "c_minus_values": list(self.c_minus_values),
            "c_plus": self.c_plus,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(d["gamma_values"]),
            tuple(d.get("c_hat_values", (1.0,))),
            tuple(d.get("c_minus_values", (2.0,))),
            float(d.get("c_plus", 1.0)),
        )


def stratified_kfold(labels, folds: int, seed: int):
    """Split indices into ``folds`` (train, validation) pairs.

    Positives are shuffled and dealt round-robin over the folds; negatives
    continue the deal where the positives stopped, so per-fold positive
    counts and fold sizes each differ by at most one.

    Raises ``ConfigurationError`` when there are fewer positives than folds.
    """
    y = np.asarray(labels)
    pos = np.flatnonzero(y > 0)
    neg = np.flatnonzero(y <= 0)
    if pos.size == 0 or neg.size == 0:
        raise DegenerateTask("stratified split needs both labels")
    # positives are the stratified class, so each fold must receive one
    if folds > pos.size:
        raise ConfigurationError(f"{folds} folds but only {pos.size} positive samples")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(pos), rng.permutation(neg)])
    fold_of = np.empty(y.size, dtype=int)
    fold_of[order] = np.arange(order.size) % folds
    all_idx = np.arange(y.size)
    return [(all_idx[fold_of != k], all_idx[fold_of == k]) for k in range(folds)]


def score_predictions(pred, labels, regions, metric: SelectionMetric) -> float:
    if metric is SelectionMetric.PLAIN_ACCURACY:
        return float(np.mean(pred == labels))
    return ensemble_accuracy(classwise_accuracy(pred, labels, regions))


@dataclass
class GridResult:
    kernel: KernelParams
    scheme: PenaltyScheme
    score: float
    scores: dict = field(default_factory=dict)  # (gamma, c_hat, c_minus) -> mean CV score
    n_fits: int = 0

    @property
    def key(self):
        return (self.kernel.gamma, self.scheme.c_hat, self.scheme.c_minus)


def cv_scores(task: BinaryTask, grid: GridSpec, cv: CvConfig):
    """Mean validation score of every grid combination, keyed by
    ``(gamma, c_hat, c_minus)``. Failed combinations score NaN."""
    X = np.asarray(task.features, dtype=float)
    regions = np.asarray(task.regions)
    y = labels_from_regions(regions)
    splits = stratified_kfold(y, cv.folds, cv.seed)
    d2 = squared_distances(X)
    combos = grid.combinations()
    fold_scores = {_key(k, s): [] for k, s in combos}
    n_fits = 0
    for gamma in grid.gamma_values:
        K = np.exp(-gamma * d2)
        for tr, va in splits:
            K_tr = K[np.ix_(tr, tr)]
            K_va = K[np.ix_(va, tr)]
            for kernel, scheme in combos:
                if kernel.gamma != gamma:
                    continue
                key = _key(kernel, scheme)
                n_fits += 1
                try:
                    sol, _, _ = fit_dual(K_tr, y[tr], assign_bounds(regions[tr], scheme))
                except (ConvergenceError, DegenerateTask):
                    fold_scores[key].append(math.nan)
                    continue
                dec = K_va @ (sol.alpha * y[tr]) + sol.bias
                pred = np.where(dec >= 0, 1, -1)
                fold_scores[key].append(score_predictions(pred, y[va], regions[va], cv.metric))
    scores = {k: float(np.mean(v)) if v else math.nan for k, v in fold_scores.items()}
    return scores, n_fits


def _key(kernel, scheme):
    return (kernel.gamma, scheme.c_hat, scheme.c_minus)


def grid_search(task: BinaryTask, grid: GridSpec, cv: CvConfig = CvConfig()) -> GridResult:
    """Pick the combination with the best mean CV score.

    Only the data in ``task`` is used. Ties go to the smaller ``c_hat``,
    then the smaller ``gamma``, then declaration order.
    """
    task.check()
    scores, n_fits = cv_scores(task, grid, cv)
    ranked = []
    for order, (kernel, scheme) in enumerate(grid.combinations()):
        s = scores[_key(kernel, scheme)]
        if not math.isnan(s):
            ranked.append(((-s, scheme.c_hat, kernel.gamma, order), kernel, scheme, s))
    if not ranked:
        raise ConfigurationError("every grid combination failed")
    _, kernel, scheme, best = min(ranked, key=lambda r: r[0])
    return GridResult(kernel, scheme, best, scores, n_fits)


def fit_selected(task: BinaryTask, grid: GridSpec, cv: CvConfig = CvConfig()):
    """Grid-search then refit on the whole task. Returns ``(model, GridResult)``."""
    result = grid_search(task, grid, cv)
    model = train(task.features, task.regions, result.scheme, result.kernel, rule=task.rule)
    return model, result
