"""Command line: ``kisvm {synth,train,predict,experiment,reliability}``.

Every subcommand reads an optional JSON config (same document layout as
:class:`kisvm.experiment.ExperimentConfig`); command-line flags override it.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .data_io import (
    ModelArchive,
    SynthConfig,
    generate_synthetic,
    load_model,
    read_csv,
    save_model,
    write_csv,
)
from .errors import ConfigurationError, KisvmError, ValidationError
from .experiment import ExperimentConfig, load_samples, run_experiment, write_reports
from .knowledge import reliability_ratios
from .pipeline import BandLabel, band_labels, build_lagged_features, cascade_predict, fit_normalizer, make_binary_tasks
from .selection import CvConfig, fit_selected

log = logging.getLogger("kisvm")


def _config(args) -> ExperimentConfig:
    overrides = {
        "data": getattr(args, "data", None),
        "out": getattr(args, "out", None),
        "seed": getattr(args, "seed", None),
        "repeats": getattr(args, "repeats", None),
        "folds": getattr(args, "folds", None),
        "high_task_mode": getattr(args, "high_task_mode", None),
        "workers": getattr(args, "workers", None),
    }
    if getattr(args, "emit_svg", False):
        overrides["emit_svg"] = True
    if args.config:
        return ExperimentConfig.load(args.config, **overrides)
    return ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})


def _out_dir(args, default) -> Path:
    out = Path(args.out or default)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc}") from exc
    return out


def cmd_synth(args) -> int:
    cfg = _config(args)
    synth = cfg.synth.to_dict()
    if args.seed is not None:
        synth["seed"] = args.seed
    if args.length is not None:
        synth["length"] = args.length
    try:
        synth = SynthConfig.from_dict(synth)
    except (ValidationError, TypeError) as exc:
        raise ConfigurationError(f"invalid synth config: {exc}") from exc
    table = generate_synthetic(synth)
    path = _out_dir(args, ".") / "process.csv"
    write_csv(table, path)
    counts = np.bincount(band_labels(table["silicon"], cfg.bands), minlength=3)
    rel = reliability_ratios(table["silicon"], cfg.bands)
    print(f"wrote {len(table)} rows to {path}")
    print(f"bands low/proper/high: {counts[0]}/{counts[1]}/{counts[2]}")
    print(f"low persistence: {rel.low_persistence:.4f}  high persistence: {rel.high_persistence:.4f}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    samples = load_samples(cfg)
    normalizer = fit_normalizer(samples.features)
    samples = samples.with_features(normalizer.apply(samples.features))
    low_task, high_task = make_binary_tasks(samples, cfg.bands, cfg.high_task_mode)
    cv = CvConfig(cfg.folds, cfg.seed, cfg.metric)
    out = _out_dir(args, "model")
    for task in (low_task.check(), high_task.check()):
        model, result = fit_selected(task, cfg.knowledge_grid, cv)
        provenance = {
            "task": task.name,
            "grid": cfg.knowledge_grid.to_dict(),
            "cv_score": result.score,
            "folds": cfg.folds,
            "seed": cfg.seed,
            "training_samples": len(task),
        }
        path = out / f"model_{task.name}.json"
        save_model(path, ModelArchive(model, normalizer, cfg.bands, cfg.lag_spec, provenance))
        print(f"{task.name}: gamma={result.kernel.gamma:g} c_hat={result.scheme.c_hat:g} "
              f"cv={result.score:.4f} support_vectors={len(model.coefficients)} -> {path}")
    return 0


def cmd_predict(args) -> int:
    model_dir = Path(args.model_dir)
    low = load_model(model_dir / "model_low.json")
    high = load_model(model_dir / "model_high.json")
    if not args.data:
        raise ConfigurationError("predict needs --data")
    table = read_csv(args.data)
    samples = build_lagged_features(table, low.lag_spec)
    X = low.normalizer.apply(samples.features)
    bands = cascade_predict(low.model, high.model, X)
    lines = ["time_index,band"]
    lines += [f"{t},{BandLabel(b).name.lower()}" for t, b in zip(samples.time_index, bands)]
    text = "\n".join(lines) + "\n"
    if args.out:
        path = _out_dir(args, ".") / "predictions.csv"
        path.write_text(text, encoding="utf-8")
        print(f"wrote {len(bands)} predictions to {path}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    result = run_experiment(cfg)
    paths = write_reports(result, _out_dir(args, cfg.out))
    print(Path(paths["summary"]).read_text(encoding="utf-8"), end="")
    for name, t in result.t_tests().items():
        if t is not None and name == "ensemble_accuracy":
            print(f"paired t-test on ensemble accuracy: t={t.t_statistic:.4f} "
                  f"df={t.degrees_of_freedom} p={t.p_value:.4g}")
    degenerate = len(result.outcomes) - len(result.valid)
    if degenerate:
        print(f"{degenerate} degenerate repeat(s) skipped")
    return 0


def cmd_reliability(args) -> int:
    cfg = _config(args)
    if cfg.data:
        z = read_csv(cfg.data, schema=("silicon",))["silicon"]
    else:
        z = generate_synthetic(cfg.synth)["silicon"]
    rel = reliability_ratios(z, cfg.bands)

    def fmt(v, n):
        return f"{v:.4f} ({n} predecessors)" if n else "undefined (no predecessors)"

    print(f"low persistence: {fmt(rel.low_persistence, rel.low_count)}")
    print(f"high persistence: {fmt(rel.high_persistence, rel.high_count)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kisvm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        sp.add_argument("--config", help="JSON config file")
        if data:
            sp.add_argument("--data", help="process CSV (default: synthetic data)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("synth", help="write a synthetic process CSV")
    common(sp, data=False)
    sp.add_argument("--length", type=int)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", help="grid-search and save the two knowledge models")
    common(sp)
    sp.add_argument("--folds", type=int)
    sp.add_argument("--high-task-mode", choices=["pairwise", "one-vs-rest"])
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="predict silicon bands with saved models")
    sp.add_argument("--model-dir", required=True)
    sp.add_argument("--data")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_predict, config=None)

    sp = sub.add_parser("experiment", help="repeated split comparison against the baseline")
    common(sp)
    sp.add_argument("--repeats", type=int)
    sp.add_argument("--folds", type=int)
    sp.add_argument("--high-task-mode", choices=["pairwise", "one-vs-rest"])
    sp.add_argument("--emit-svg", action="store_true")
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("reliability", help="silicon band persistence ratios")
    common(sp)
    sp.set_defaults(func=cmd_reliability)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except KisvmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
