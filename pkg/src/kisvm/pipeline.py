"""From a process table to binary SVM tasks, and back to three bands.

The three-band problem is split into two binary tasks: low vs. the rest,
and high vs. proper. A cascade recombines the two classifiers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import DegenerateTask, MissingColumn, ShapeError, ValidationError
from .knowledge import KnowledgeRule, SiliconBands, tag_regions
from .wsvm import TrainedModel, predict

SILICON = "silicon"


class BandLabel(IntEnum):
    LOW = 0
    PROPER = 1
    HIGH = 2


def band_labels(z, bands: SiliconBands) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)) or not np.all(np.isfinite(z)):
        raise ValidationError("silicon values must lie in [0, 1]")
    out = np.full(z.shape, int(BandLabel.PROPER))
    out[z < bands.z_inf] = BandLabel.LOW
    out[z > bands.z_sup] = BandLabel.HIGH
    return out


def band_label(z: float, bands: SiliconBands) -> BandLabel:
    return BandLabel(int(band_labels(np.array([z]), bands)[0]))


@dataclass(frozen=True)
class LagSpec:
    """Ordered ``(column, delays)`` pairs; delay ``k`` is the value at ``t - k``."""

    lags: tuple[tuple[str, tuple[int, ...]], ...]

    def __post_init__(self):
        lags = tuple((str(name), tuple(int(d) for d in delays)) for name, delays in self.lags)
        if not lags or not any(delays for _, delays in lags):
            raise ValidationError("lag spec needs at least one entry")
        for name, delays in lags:
            if any(d < 0 for d in delays):
                raise ValidationError(f"negative delay for {name}")
        object.__setattr__(self, "lags", lags)

    @property
    def max_delay(self) -> int:
        return max(max(delays) for _, delays in self.lags if delays)

    @property
    def start(self) -> int:
        # the first row also needs a previous silicon reading for region tags
        return max(self.max_delay, 1)

    @property
    def columns(self) -> list[str]:
        return [name for name, _ in self.lags]

    @property
    def feature_names(self) -> list[str]:
        return [f"{name}[t-{d}]" for name, delays in self.lags for d in delays]

    @property
    def dim(self) -> int:
        return sum(len(delays) for _, delays in self.lags)

    def to_dict(self):
        return {name: list(delays) for name, delays in self.lags}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple((name, tuple(delays)) for name, delays in d.items()))


_INPUTS = ("blast_temp", "blast_vol", "feed_speed", "gas_perm", "coal_inj")
FURNACE_A_LAGS = LagSpec(
    tuple((name, tuple(range(6))) for name in _INPUTS) + (("sulfur", (1,)), (SILICON, (1,)))
)
FURNACE_B_LAGS = LagSpec(
    tuple((name, tuple(range(5))) for name in _INPUTS) + (("sulfur", (1,)), (SILICON, (1,)))
)


@dataclass
class LaggedSamples:
    """Lagged feature rows plus the silicon readings needed for labelling."""

    features: np.ndarray
    time_index: np.ndarray
    current_silicon: np.ndarray
    previous_silicon: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def __len__(self):
        return self.features.shape[0]

    def subset(self, idx) -> LaggedSamples:
        idx = np.asarray(idx)
        return LaggedSamples(
            self.features[idx],
            self.time_index[idx],
            self.current_silicon[idx],
            self.previous_silicon[idx],
            list(self.feature_names),
        )

    def with_features(self, features) -> LaggedSamples:
        return LaggedSamples(
            np.asarray(features, dtype=float),
            self.time_index,
            self.current_silicon,
            self.previous_silicon,
            list(self.feature_names),
        )


def build_lagged_features(table, spec: LagSpec) -> LaggedSamples:
    """Emit one sample per time index ``t >= spec.start``.

    ``table`` is any mapping from column name to a 1-D sequence (e.g. a
    :class:`kisvm.data_io.ProcessTable`). The silicon column is always
    required because labels and region tags come from it.
    """
    cols = {}
    for name in dict.fromkeys(spec.columns + [SILICON]):
        try:
            col = np.asarray(table[name], dtype=float)
        except KeyError:
            raise MissingColumn(name) from None
        bad = np.flatnonzero(~np.isfinite(col))
        if bad.size:
            raise ValidationError(f"non-finite value in column {name!r} at row {bad[0]}")
        cols[name] = col
    n_rows = {c.size for c in cols.values()}
    if len(n_rows) != 1:
        raise ShapeError("table columns have unequal lengths")
    n = n_rows.pop()
    start = spec.start
    if n <= start:
        raise ShapeError(f"table has {n} rows but the lag spec drops {start}")
    t = np.arange(start, n)
    parts = [cols[name][t - d] for name, delays in spec.lags for d in delays]
    z = cols[SILICON]
    return LaggedSamples(
        features=np.column_stack(parts),
        time_index=t,
        current_silicon=z[t].copy(),
        previous_silicon=z[t - 1].copy(),
        feature_names=spec.feature_names,
    )


@dataclass(frozen=True)
class Normalizer:
    minimum: np.ndarray
    maximum: np.ndarray

    def apply(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        if X.shape[-1] != self.minimum.size:
            raise ShapeError(f"expected {self.minimum.size} features, got {X.shape[-1]}")
        span = self.maximum - self.minimum
        const = span == 0
        scaled = (X - self.minimum) / np.where(const, 1.0, span)
        scaled = np.where(const, 0.5, scaled)
        return np.clip(scaled, 0.0, 1.0)

    def to_dict(self):
        return {"min": self.minimum.tolist(), "max": self.maximum.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["min"], dtype=float), np.asarray(d["max"], dtype=float))


def fit_normalizer(features) -> Normalizer:
    """Per-feature min-max scaling; fit on the training split only.

    Constant features map to 0.5 and out-of-range values are clamped to
    ``[0, 1]``.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError("cannot fit a normalizer on an empty training set")
    return Normalizer(X.min(axis=0), X.max(axis=0))


def apply_normalizer(normalizer: Normalizer, features) -> np.ndarray:
    return normalizer.apply(features)


@dataclass
class BinaryTask:
    name: str
    features: np.ndarray
    labels: np.ndarray
    previous_silicon: np.ndarray
    rule: KnowledgeRule
    regions: np.ndarray
    indices: np.ndarray  # rows of the source sample set

    def __len__(self):
        return self.labels.size

    @property
    def degenerate(self) -> bool:
        return len(self) == 0 or np.all(self.labels > 0) or np.all(self.labels < 0)

    def check(self):
        if self.degenerate:
            raise DegenerateTask(f"{self.name} task has a single class")
        return self


HIGH_TASK_MODES = ("pairwise", "one-vs-rest")


def make_binary_tasks(samples: LaggedSamples, bands: SiliconBands, high_task_mode="pairwise"):
    """Build the ``(low_task, high_task)`` pair.

    The low task uses every sample with low silicon as the positive class.
    In ``pairwise`` mode the high task sees only non-low samples (high vs.
    proper); ``one-vs-rest`` keeps all samples.
    """
    if high_task_mode not in HIGH_TASK_MODES:
        raise ValidationError(f"high_task_mode must be one of {HIGH_TASK_MODES}")
    band = band_labels(samples.current_silicon, bands)

    def task(name, idx, positive, rule):
        labels = np.where(band[idx] == positive, 1, -1)
        prev = samples.previous_silicon[idx]
        return BinaryTask(
            name, samples.features[idx], labels, prev, rule,
            tag_regions(prev, labels, rule), idx,
        )

    all_idx = np.arange(len(samples))
    high_idx = all_idx if high_task_mode == "one-vs-rest" else all_idx[band != BandLabel.LOW]
    low_task = task("low", all_idx, BandLabel.LOW, KnowledgeRule.low(bands))
    high_task = task("high", high_idx, BandLabel.HIGH, KnowledgeRule.high(bands))
    return low_task, high_task


def cascade_predict(model_low: TrainedModel, model_high: TrainedModel, X) -> np.ndarray:
    """Low classifier first, then high; anything left is proper."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if model_low.dim != model_high.dim:
        raise ShapeError("the two models were trained on different feature dimensions")
    low = predict(model_low, X) > 0
    high = predict(model_high, X) > 0
    out = np.where(low, BandLabel.LOW, np.where(high, BandLabel.HIGH, BandLabel.PROPER)).astype(int)
    return BandLabel(int(out[0])) if single else out
