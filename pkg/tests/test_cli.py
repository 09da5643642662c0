import json
import subprocess
import sys

import numpy as np
import pytest

from kisvm.cli import main
from kisvm.data_io import SCHEMA, ProcessTable, write_csv

TINY = {
    "synth": {"length": 200, "seed": 1},
    "repeats": 1,
    "train_size": 80,
    "test_size": 40,
    "folds": 3,
    "knowledge_grid": {"gamma_values": [0.5], "c_hat_values": [1, 2]},
    "baseline_grid": {"gamma_values": [0.5], "c_minus_values": [1, 2]},
}


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "config.json"
    p.write_text(json.dumps(TINY))
    return p


def separable_table(rows=90, seed=0):
    """Silicon band is a direct function of the current blast temperature."""
    rng = np.random.default_rng(seed)
    band = rng.integers(0, 3, size=rows)
    silicon = np.array([0.25, 0.6, 0.9])[band] + rng.uniform(-0.02, 0.02, rows)
    cols = {c: rng.normal(size=rows) * 0.01 for c in SCHEMA}
    cols["blast_temp"] = 1150.0 + 40.0 * (band - 1)
    cols["silicon"] = silicon
    return ProcessTable(cols), band


def test_synth_writes_file_and_prints_counts(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path), "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert (tmp_path / "process.csv").exists()
    assert "bands low/proper/high:" in out and "persistence" in out


def test_synth_is_byte_identical_for_fixed_seed(tmp_path):
    main(["synth", "--out", str(tmp_path / "a"), "--seed", "9", "--length", "120"])
    main(["synth", "--out", str(tmp_path / "b"), "--seed", "9", "--length", "120"])
    assert (tmp_path / "a" / "process.csv").read_bytes() == (tmp_path / "b" / "process.csv").read_bytes()


def test_synth_zero_length_is_config_error(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path), "--length", "0"]) == 2
    assert "length" in capsys.readouterr().err


def test_bad_config_file_exit_code(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert main(["experiment", "--config", str(p)]) == 2


def test_reliability_hand_series(tmp_path, capsys):
    p = tmp_path / "z.csv"
    p.write_text("silicon\n0.30\n0.35\n0.50\n0.30\n0.31\n")
    assert main(["reliability", "--data", str(p)]) == 0
    out = capsys.readouterr().out
    assert "low persistence: 0.6667 (3 predecessors)" in out
    assert "high persistence: undefined" in out


def test_reliability_missing_silicon(tmp_path):
    p = tmp_path / "z.csv"
    p.write_text("blast_temp\n1\n2\n")
    assert main(["reliability", "--data", str(p)]) == 3


def test_train_predict_recovers_training_bands(tmp_path, config, capsys):
    table, band = separable_table()
    data = tmp_path / "toy.csv"
    write_csv(table, data)
    assert main(["train", "--config", str(config), "--data", str(data), "--out", str(tmp_path / "m")]) == 0
    assert (tmp_path / "m" / "model_low.json").exists() and (tmp_path / "m" / "model_high.json").exists()
    capsys.readouterr()
    assert main(["predict", "--model-dir", str(tmp_path / "m"), "--data", str(data)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "time_index,band"
    names = {0: "low", 1: "proper", 2: "high"}
    for line in lines[1:]:
        t, label = line.split(",")
        assert label == names[band[int(t)]]


def test_train_single_class_exit_code(tmp_path, config):
    table, _ = separable_table()
    table.columns["silicon"][:] = 0.6
    data = tmp_path / "flat.csv"
    write_csv(table, data)
    assert main(["train", "--config", str(config), "--data", str(data), "--out", str(tmp_path)]) == 3


def test_predict_corrupted_archive(tmp_path, config):
    table, _ = separable_table()
    data = tmp_path / "toy.csv"
    write_csv(table, data)
    main(["train", "--config", str(config), "--data", str(data), "--out", str(tmp_path / "m")])
    p = tmp_path / "m" / "model_low.json"
    p.write_text(p.read_text().replace('"bias": ', '"bias": 1'))
    assert main(["predict", "--model-dir", str(tmp_path / "m"), "--data", str(data)]) == 3


def test_experiment_writes_reports(tmp_path, config, capsys):
    out = tmp_path / "r"
    assert main(["experiment", "--config", str(config), "--out", str(out), "--emit-svg",
                 "--high-task-mode", "one-vs-rest"]) == 0
    assert {p.name for p in out.iterdir()} == {
        "summary.csv", "deltas.csv", "ttest.csv", "selections.csv", "deltas.svg", "manifest.json"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["high_task_mode"] == "one-vs-rest"
    assert "knowledge" in capsys.readouterr().out


def test_flag_overrides_config(tmp_path, config):
    out = tmp_path / "r"
    main(["experiment", "--config", str(config), "--out", str(out), "--repeats", "2", "--seed", "5"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["repeats"] == 2 and manifest["config"]["seed"] == 5
    assert len(manifest["repeat_seeds"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kisvm", "synth", "--out", str(tmp_path), "--length", "60"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "wrote 60 rows" in proc.stdout


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as info:
        main(["fly"])
    assert info.value.code == 2
