"""Repeated random-split comparison of the knowledge model and the baseline.

Each repeat draws ``train_size + test_size`` lagged samples without
replacement, fits a min-max normaliser on the training part, tunes both
models per binary task by grid search with k-fold CV on the training part
only, and scores them on the test part.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .data_io import SynthConfig, generate_synthetic, read_csv
from .errors import ConfigurationError, DataError, DegenerateTask
from .evaluation import (
    DELTA_FIELDS,
    RepeatMetrics,
    accuracy_delta_report,
    classwise_accuracy,
    ensemble_accuracy,
    paired_t_test,
)
from .knowledge import FURNACE_A, SiliconBands
from .pipeline import (
    FURNACE_A_LAGS,
    HIGH_TASK_MODES,
    BandLabel,
    LagSpec,
    LaggedSamples,
    band_labels,
    build_lagged_features,
    cascade_predict,
    fit_normalizer,
    make_binary_tasks,
)
from .selection import CvConfig, GridSpec, SelectionMetric, fit_selected
from .wsvm import predict

MODELS = ("knowledge", "baseline")
SUMMARY_FIELDS = (
    "low", "low_important", "proper", "high", "high_important", "accuracy", "ensemble_accuracy",
)


@dataclass
class ExperimentConfig:
    data: str | None = None
    synth: SynthConfig = field(default_factory=SynthConfig)
    bands: SiliconBands = FURNACE_A
    lag_spec: LagSpec = FURNACE_A_LAGS
    repeats: int = 100
    train_size: int = 500
    test_size: int = 100
    seed: int = 0
    folds: int = 5
    high_task_mode: str = "pairwise"
    metric: SelectionMetric = SelectionMetric.ENSEMBLE_ACCURACY
    knowledge_grid: GridSpec = field(default_factory=GridSpec.knowledge)
    baseline_grid: GridSpec = field(default_factory=GridSpec.baseline)
    out: str = "results"
    emit_svg: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigurationError("repeats must be at least 1")
        if self.train_size < 2 or self.test_size < 1:
            raise ConfigurationError("train_size must be >= 2 and test_size >= 1")
        if self.high_task_mode not in HIGH_TASK_MODES:
            raise ConfigurationError(f"high_task_mode must be one of {HIGH_TASK_MODES}")
        if self.folds < 2:
            raise ConfigurationError("folds must be at least 2")
        self.metric = SelectionMetric(self.metric)

    def to_dict(self):
        return {
            "data": self.data,
            "synth": self.synth.to_dict(),
            "bands": self.bands.to_dict(),
            "lag_spec": self.lag_spec.to_dict(),
            "repeats": self.repeats,
            "train_size": self.train_size,
            "test_size": self.test_size,
            "seed": self.seed,
            "folds": self.folds,
            "high_task_mode": self.high_task_mode,
            "metric": self.metric.value,
            "knowledge_grid": self.knowledge_grid.to_dict(),
            "baseline_grid": self.baseline_grid.to_dict(),
            "out": self.out,
            "emit_svg": self.emit_svg,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        try:
            if "synth" in kw:
                kw["synth"] = SynthConfig.from_dict(kw["synth"])
            if "bands" in kw:
                kw["bands"] = SiliconBands.from_dict(kw["bands"])
            if "lag_spec" in kw:
                kw["lag_spec"] = LagSpec.from_dict(kw["lag_spec"])
            for k in ("knowledge_grid", "baseline_grid"):
                if k in kw:
                    kw[k] = GridSpec.from_dict(kw[k])
            return cls(**kw)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigurationError(f"invalid experiment config: {exc}") from exc

    @classmethod
    def load(cls, path, **overrides):
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)


def load_samples(config: ExperimentConfig) -> LaggedSamples:
    table = read_csv(config.data) if config.data else generate_synthetic(config.synth)
    return build_lagged_features(table, config.lag_spec)


@dataclass
class RepeatOutcome:
    index: int
    seed: int
    knowledge: RepeatMetrics | None = None
    baseline: RepeatMetrics | None = None
    selections: dict = field(default_factory=dict)
    failure: str = ""

    @property
    def ok(self) -> bool:
        return self.knowledge is not None and self.baseline is not None


def _band_accuracy(pred, truth, band):
    mask = truth == band
    return float(np.mean(pred[mask] == band)) if mask.any() else math.nan


def _score(models, test_low, test_high, test_x, test_band) -> RepeatMetrics:
    model_low, model_high = models
    cw_low = classwise_accuracy(predict(model_low, test_low.features), test_low.labels, test_low.regions)
    if len(test_high):
        cw_high = classwise_accuracy(
            predict(model_high, test_high.features), test_high.labels, test_high.regions
        )
    else:
        cw_high = classwise_accuracy([], [], [])
    bands = cascade_predict(model_low, model_high, test_x)
    return RepeatMetrics(
        low=_band_accuracy(bands, test_band, BandLabel.LOW),
        low_important=cw_low.acc_class1,
        proper=_band_accuracy(bands, test_band, BandLabel.PROPER),
        high=_band_accuracy(bands, test_band, BandLabel.HIGH),
        high_important=cw_high.acc_class1,
        accuracy=float(np.mean(bands == test_band)),
        ensemble_low=ensemble_accuracy(cw_low),
        ensemble_high=ensemble_accuracy(cw_high),
        flagged=cw_low.has_empty_class or cw_high.has_empty_class,
    )


def run_repeat(samples: LaggedSamples, config: ExperimentConfig, index: int, seed: int) -> RepeatOutcome:
    outcome = RepeatOutcome(index, seed)
    rng = np.random.default_rng(seed)
    n_pick = config.train_size + config.test_size
    picked = rng.choice(len(samples), size=n_pick, replace=False)
    train_idx, test_idx = picked[: config.train_size], picked[config.train_size:]
    normalizer = fit_normalizer(samples.features[train_idx])
    train = samples.subset(train_idx)
    test = samples.subset(test_idx)
    train = train.with_features(normalizer.apply(train.features))
    test = test.with_features(normalizer.apply(test.features))

    tr_low, tr_high = make_binary_tasks(train, config.bands, config.high_task_mode)
    te_low, te_high = make_binary_tasks(test, config.bands, config.high_task_mode)
    test_band = band_labels(test.current_silicon, config.bands)
    cv = CvConfig(config.folds, int(rng.integers(2**63)), config.metric)
    grids = {"knowledge": config.knowledge_grid, "baseline": config.baseline_grid}
    try:
        for task in (tr_low, tr_high):
            task.check()
        for name in MODELS:
            models = []
            for task in (tr_low, tr_high):
                model, result = fit_selected(task, grids[name], cv)
                models.append(model)
                outcome.selections[(name, task.name)] = (result.key, result.score)
            metrics = _score(models, te_low, te_high, test.features, test_band)
            setattr(outcome, name, metrics)
    except (DegenerateTask, ConfigurationError) as exc:
        outcome.knowledge = outcome.baseline = None
        outcome.failure = f"{type(exc).__name__}: {exc}"
    return outcome


def _run_repeat_star(args):
    return run_repeat(*args)


def repeat_seeds(master_seed: int, repeats: int) -> list[int]:
    children = np.random.SeedSequence(master_seed).spawn(repeats)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    outcomes: list[RepeatOutcome]
    n_samples: int

    @property
    def valid(self) -> list[RepeatOutcome]:
        return [o for o in self.outcomes if o.ok]

    def deltas(self) -> dict[str, np.ndarray]:
        v = self.valid
        return accuracy_delta_report([o.knowledge for o in v], [o.baseline for o in v])

    def summary(self, model: str) -> dict[str, float]:
        rows = [getattr(o, model) for o in self.valid]
        out = {}
        for name in SUMMARY_FIELDS:
            attr = "ensemble" if name == "ensemble_accuracy" else name
            vals = np.array([getattr(r, attr) for r in rows], dtype=float)
            out[name] = float(np.nanmean(vals)) if np.isfinite(vals).any() else math.nan
        return out

    def t_tests(self):
        out = {}
        for name, d in self.deltas().items():
            finite = d[np.isfinite(d)]
            out[name] = paired_t_test(finite) if finite.size >= 2 else None
        return out


def run_experiment(config: ExperimentConfig, samples: LaggedSamples | None = None) -> ExperimentResult:
    """Run every repeat, serially or on ``config.workers`` processes.

    Results are ordered by repeat index, so the output does not depend on
    the number of workers.
    """
    if samples is None:
        samples = load_samples(config)
    if config.train_size + config.test_size > len(samples):
        raise ConfigurationError(
            f"train+test = {config.train_size + config.test_size} exceeds the "
            f"{len(samples)} lagged samples"
        )
    seeds = repeat_seeds(config.seed, config.repeats)
    jobs = [(samples, config, i, s) for i, s in enumerate(seeds)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_repeat_star, jobs))
    else:
        outcomes = [run_repeat(*job) for job in jobs]
    result = ExperimentResult(config, outcomes, len(samples))
    if not result.valid:
        raise DataError(f"all {config.repeats} repeats were degenerate: {outcomes[0].failure}")
    return result


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_reports(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Write summary, per-repeat deltas, t-tests, selections and a manifest.

    Everything except the manifest's ``timestamp`` is a deterministic
    function of the configuration.
    """
    cfg = result.config
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    grids = {"knowledge": cfg.knowledge_grid, "baseline": cfg.baseline_grid}

    rows = []
    for model in MODELS:
        s = result.summary(model)
        flagged = sum(1 for o in result.valid if getattr(o, model).flagged)
        rows.append([model, *(s[k] for k in SUMMARY_FIELDS), len(result.valid), flagged, len(grids[model])])
    header = ["model", *SUMMARY_FIELDS, "repeats_used", "repeats_flagged", "grid_combinations"]
    paths["summary"] = out / "summary.csv"
    paths["summary"].write_text(_csv_text(header, rows), encoding="utf-8")

    deltas = result.deltas()
    rows = []
    for k, o in enumerate(result.valid):
        flagged = o.knowledge.flagged or o.baseline.flagged
        rows.append([o.index, *(float(deltas[f][k]) for f in DELTA_FIELDS), int(flagged)])
    paths["deltas"] = out / "deltas.csv"
    paths["deltas"].write_text(_csv_text(["repeat", *DELTA_FIELDS, "flagged"], rows), encoding="utf-8")

    rows = []
    for name, t in result.t_tests().items():
        if t is None:
            rows.append([name, math.nan, math.nan, "", math.nan, ""])
        else:
            rows.append([name, t.mean_delta, t.t_statistic, t.degrees_of_freedom, t.p_value,
                         int(t.degenerate_variance)])
    header = ["quantity", "mean_delta", "t_statistic", "df", "p_value", "degenerate_variance"]
    paths["ttest"] = out / "ttest.csv"
    paths["ttest"].write_text(_csv_text(header, rows), encoding="utf-8")

    rows = []
    for o in result.outcomes:
        for (model, task), ((gamma, c_hat, c_minus), score) in sorted(o.selections.items()):
            rows.append([o.index, model, task, gamma, c_hat, c_minus, score])
    header = ["repeat", "model", "task", "gamma", "c_hat", "c_minus", "cv_score"]
    paths["selections"] = out / "selections.csv"
    paths["selections"].write_text(_csv_text(header, rows), encoding="utf-8")

    if cfg.emit_svg:
        paths["svg"] = out / "deltas.svg"
        paths["svg"].write_text(deltas_svg(deltas), encoding="utf-8")

    manifest = {
        "package": "kisvm",
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        # execution details (output path, worker count) do not affect results
        "config": {k: v for k, v in cfg.to_dict().items() if k not in ("out", "workers")},
        "n_lagged_samples": result.n_samples,
        "repeat_seeds": [o.seed for o in result.outcomes],
        "degenerate_repeats": [
            {"repeat": o.index, "reason": o.failure} for o in result.outcomes if not o.ok
        ],
        "grid_combinations": {k: len(g) for k, g in grids.items()},
        "numpy": np.__version__,
    }
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return paths


def deltas_svg(deltas: dict[str, np.ndarray], width=900, height=220) -> str:
    """Scatter of per-repeat deltas, one panel per quantity, with a zero line."""
    names = list(deltas)
    pw = width / len(names)
    pad = 30
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    ]
    for k, name in enumerate(names):
        d = np.asarray(deltas[name], dtype=float)
        finite = d[np.isfinite(d)]
        lim = max(float(np.abs(finite).max()) if finite.size else 0.0, 1e-3)
        x0 = k * pw + pad
        inner_w = pw - 2 * pad
        inner_h = height - 2 * pad

        def ymap(v):
            return pad + inner_h * (0.5 - v / (2 * lim))

        parts.append(f'<text x="{x0:.1f}" y="{pad - 10}">{name}</text>')
        parts.append(
            f'<rect x="{x0:.1f}" y="{pad}" width="{inner_w:.1f}" height="{inner_h:.1f}" '
            f'fill="none" stroke="#999"/>'
        )
        parts.append(
            f'<line x1="{x0:.1f}" y1="{ymap(0):.1f}" x2="{x0 + inner_w:.1f}" y2="{ymap(0):.1f}" '
            f'stroke="#c00"/>'
        )
        n = max(d.size, 1)
        for i, v in enumerate(d):
            if np.isfinite(v):
                cx = x0 + inner_w * (i + 0.5) / n
                parts.append(f'<circle cx="{cx:.1f}" cy="{ymap(v):.1f}" r="2" fill="black"/>')
        parts.append(f'<text x="{x0:.1f}" y="{height - 8}">±{lim:.3g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
