"""Class-wise and ensemble accuracies, and the paired t-test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ShapeError
from .knowledge import RegionTag

ENSEMBLE_WEIGHTS = (0.6, 0.1, 0.3)
assert math.isclose(sum(ENSEMBLE_WEIGHTS), 1.0, abs_tol=1e-15)


@dataclass(frozen=True)
class ClasswiseAccuracy:
    """Accuracy on R1 (class1), R2 (class2) and R3 (class3) samples.

    An empty class has accuracy NaN and count 0.
    """

    acc_class1: float
    acc_class2: float
    acc_class3: float
    count_class1: int = 1
    count_class2: int = 1
    count_class3: int = 1

    @property
    def accuracies(self):
        return (self.acc_class1, self.acc_class2, self.acc_class3)

    @property
    def counts(self):
        return (self.count_class1, self.count_class2, self.count_class3)

    @property
    def has_empty_class(self) -> bool:
        return 0 in self.counts


def classwise_accuracy(predictions, truths, tags) -> ClasswiseAccuracy:
    pred = np.asarray(predictions)
    truth = np.asarray(truths)
    tags = np.asarray(tags)
    if not (pred.shape == truth.shape == tags.shape):
        raise ShapeError("predictions, truths and tags must have equal length")
    correct = pred == truth
    accs, counts = [], []
    for tag in (RegionTag.R1, RegionTag.R2, RegionTag.R3):
        mask = tags == tag
        n = int(mask.sum())
        counts.append(n)
        accs.append(float(correct[mask].mean()) if n else math.nan)
    return ClasswiseAccuracy(*accs, *counts)


def ensemble_accuracy(cw: ClasswiseAccuracy) -> float:
    """Weighted accuracy ``0.6*class1 + 0.1*class2 + 0.3*class3``.

    Weights of empty classes are spread proportionally over the others;
    check ``cw.has_empty_class`` to flag such results. NaN if all are empty.
    """
    pairs = [(w, a) for w, a, n in zip(ENSEMBLE_WEIGHTS, cw.accuracies, cw.counts) if n > 0]
    if not pairs:
        return math.nan
    if len(pairs) == 3:
        a1, a2, a3 = cw.accuracies
        return 0.6 * a1 + 0.1 * a2 + 0.3 * a3
    total = sum(w for w, _ in pairs)
    return sum(w * a for w, a in pairs) / total


def combined_ensemble(e_low: float, e_high: float) -> float:
    return 0.5 * (e_low + e_high)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    mean_delta: float
    degenerate_variance: bool = False


def paired_t_test(deltas) -> TTestResult:
    """Two-sided one-sample t-test on paired differences.

    Zero spread with a non-zero mean gives ``t = +-inf``, ``p = 0`` and
    ``degenerate_variance=True``; all-zero differences give ``t = 0``, ``p = 1``.
    """
    d = np.asarray(deltas, dtype=float).ravel()
    d = d[np.isfinite(d)]
    n = d.size
    if n < 2:
        raise ShapeError("paired t-test needs at least two differences")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd <= 1e-14 * max(1.0, float(np.abs(d).max())):
        if mean == 0.0 or abs(mean) <= 1e-14:
            return TTestResult(0.0, df, 1.0, mean)
        return TTestResult(math.copysign(math.inf, mean), df, 0.0, mean, True)
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(special.stdtr(df, -abs(t)))
    return TTestResult(t, df, min(max(p, 0.0), 1.0), mean)


@dataclass(frozen=True)
class RepeatMetrics:
    """Test-split metrics of one model in one repeat.

    ``low``, ``proper`` and ``high`` are cascade accuracies on the true band;
    the ``*_important`` entries are class1 accuracies of the two binary
    classifiers.
    """

    low: float
    low_important: float
    proper: float
    high: float
    high_important: float
    accuracy: float
    ensemble_low: float
    ensemble_high: float
    flagged: bool = False

    @property
    def ensemble(self) -> float:
        return combined_ensemble(self.ensemble_low, self.ensemble_high)


DELTA_FIELDS = ("class1_low", "class1_high", "accuracy", "ensemble_accuracy")


def accuracy_delta_report(knowledge, baseline) -> dict[str, np.ndarray]:
    """Per-repeat ``knowledge - baseline`` for the four tracked quantities."""
    if len(knowledge) != len(baseline):
        raise ShapeError(f"{len(knowledge)} knowledge repeats vs {len(baseline)} baseline")

    def col(results, attr):
        return np.array([getattr(r, attr) for r in results], dtype=float)

    attrs = ("low_important", "high_important", "accuracy", "ensemble")
    return {
        name: col(knowledge, attr) - col(baseline, attr)
        for name, attr in zip(DELTA_FIELDS, attrs)
    }
