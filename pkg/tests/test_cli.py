import csv
import json
import math

import numpy as np
import pytest

from bosonlearn.cli import main
from bosonlearn.experiments import ConfigError, ExperimentConfig, run_experiment


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


# ------------------------------------------------------------- validation

def test_validate_ok(tmp_path, capsys):
    cfg = write_config(tmp_path, "ok.json", {"kind": "ramsey_stark"})
    assert main(["validate", cfg]) == 0
    assert "valid" in capsys.readouterr().out


def test_unparseable_config_exit_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["validate", str(path)]) == 2
    assert main(["run", str(path)]) == 2


def test_missing_file_exit_2(capsys):
    assert main(["run", "/nonexistent/config.json"]) == 2


def test_missing_seed_with_shots_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, "noseed.json", {"kind": "kmeans", "shots": 700})
    assert main(["validate", cfg]) == 3
    assert "seed" in capsys.readouterr().err


def test_unknown_kind_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, "weird.json", {"kind": "teleport"})
    assert main(["run", cfg]) == 3


def test_bad_trap_field_exit_3(tmp_path):
    cfg = write_config(tmp_path, "trap.json", {"kind": "ramsey_stark", "trap": {"omega_q_hz": 1}})
    assert main(["validate", cfg]) == 3


def test_invalid_spec_exit_3(tmp_path):
    cfg = write_config(
        tmp_path, "spec.json",
        {"kind": "synthesize", "target": {"family": "cat", "alpha": 2.0}},
    )
    assert main(["validate", cfg]) == 3


def test_config_requires_fields(tmp_path):
    cfg = write_config(tmp_path, "swap.json", {"kind": "swap_matrix"})
    assert main(["validate", cfg]) == 3


# ------------------------------------------------------------------- runs

def test_run_synthesize_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = write_config(
        tmp_path, "synth.json",
        {
            "kind": "synthesize",
            "target": {"family": "explicit", "amplitudes": [0.5, 0.5, 0.5, 0.5]},
            "output_dir": str(out),
        },
    )
    assert main(["run", cfg]) == 0
    doc = json.loads((out / "schedule.json").read_text())
    assert len(doc["pulses"]) == 6  # three carrier/sideband pairs
    assert doc["fidelity"]["clean"]["overlap"] >= 1 - 1e-9
    assert doc["fidelity"]["stark_compensated"]["overlap"] >= 0.999
    assert doc["fidelity"]["stark_uncompensated"]["overlap"] < doc["fidelity"]["stark_compensated"]["overlap"]
    assert (out / "manifest.json").exists()
    assert (out / "schedule.png").exists()


def test_run_swap_matrix_schema(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(
        tmp_path, "swap.json",
        {
            "kind": "swap_matrix",
            "rows": [
                {"id": "c15", "spec": {"family": "coherent", "alpha": 1.5, "dim": 32}},
            ],
            "cols": [
                {"id": "c10", "spec": {"family": "coherent", "alpha": 1.0, "dim": 32}},
            ],
            "output_dir": str(out),
        },
    )
    assert main(["run", cfg]) == 0
    with open(out / "overlap_matrix.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["row"] == "c15" and rows[0]["col"] == "c10"
    assert float(rows[0]["estimate"]) == pytest.approx(math.exp(-0.25), abs=1e-6)
    assert rows[0]["shots"] == "0"


def test_run_delay_scan_csv(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(
        tmp_path, "delay.json",
        {"kind": "delay_scan", "points": 200, "tau_max_us": 18.0, "output_dir": str(out)},
    )
    assert main(["run", cfg]) == 0
    with open(out / "delay_scan.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 200
    assert set(rows[0]) == {"tau_us", "overlap_main", "overlap_alternate"}
    assert float(rows[0]["overlap_main"]) == pytest.approx(1.0, abs=1e-9)
    assert float(rows[0]["overlap_alternate"]) == pytest.approx(0.0, abs=1e-9)


def test_run_characterize_sampled(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(
        tmp_path, "char.json",
        {
            "kind": "characterize",
            "state": {"family": "coherent", "alpha": 1.2},
            "shots": 500,
            "seed": 4,
            "output_dir": str(out),
        },
    )
    assert main(["run", cfg]) == 0
    doc = json.loads((out / "characterize_populations.json").read_text())
    err = np.max(np.abs(np.array(doc["fitted"]) - np.array(doc["true"])))
    assert err < 0.05
    assert doc["sideband"] == "red"


def test_run_ramsey(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, "ramsey.json", {"kind": "ramsey_stark", "points": 50, "output_dir": str(out)})
    assert main(["run", cfg]) == 0
    with open(out / "ramsey_stark.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["pe_compensated"]) == pytest.approx(1.0, abs=1e-9) for r in rows)


def test_env_var_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("BOSONLEARN_OUTPUT_DIR", str(tmp_path / "envout"))
    cfg = write_config(tmp_path, "r.json", {"kind": "ramsey_stark", "points": 20, "figures": False})
    assert main(["run", cfg]) == 0
    assert (tmp_path / "envout" / "ramsey_stark.csv").exists()


def test_figures_toggle(tmp_path):
    out = tmp_path / "nofig"
    cfg = write_config(
        tmp_path, "r2.json",
        {"kind": "ramsey_stark", "points": 20, "figures": False, "output_dir": str(out)},
    )
    assert main(["run", cfg]) == 0
    assert not list(out.glob("*.png"))


def test_manifest_contents(tmp_path):
    out = tmp_path / "out"
    raw = {"kind": "ramsey_stark", "points": 20, "output_dir": str(out), "figures": False}
    cfg = write_config(tmp_path, "m.json", raw)
    assert main(["run", cfg]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "ramsey_stark"
    assert manifest["config"] == raw
    assert "bosonlearn" in manifest["versions"]
    assert "created_utc" in manifest


def test_run_kmeans_exact_full_pipeline(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(
        tmp_path, "km.json",
        {"kind": "kmeans", "shots": 0, "figures": False, "output_dir": str(out)},
    )
    assert main(["run", cfg]) == 0
    with open(out / "kmeans_scatter.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 15
    assert set(rows[0]) == {"id", "family", "cluster", "x1", "x2", "x3", "x4", "x5"}
    by_family = {}
    for r in rows:
        by_family.setdefault(r["family"], set()).add(r["cluster"])
    assert by_family == {"squeezed": {"1"}, "fock": {"2"}, "coherent": {"3"}}
    # per-step overlap table has one row per state per step
    steps = json.loads((out / "kmeans_steps.json").read_text())
    with open(out / "kmeans_overlaps.csv") as fh:
        overlap_rows = list(csv.DictReader(fh))
    assert len(overlap_rows) == 15 * len(steps)
    assert set(overlap_rows[0]) == {"step", "id", "overlap_c1", "overlap_c2", "overlap_c3", "assigned"}


def test_run_knn_default_trials(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(
        tmp_path, "knn.json",
        {"kind": "knn", "k": 7, "figures": False, "output_dir": str(out)},
    )
    assert main(["run", cfg]) == 0
    with open(out / "knn_proportions.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["winner"] for r in rows] == ["1", "2", "3", "2", "2"]
    for r in rows:
        total = sum(float(r[f"cluster_{cl}"]) for cl in (1, 2, 3))
        assert total == pytest.approx(1.0, abs=1e-9)
    # phase-space grids accompany each trial and cluster centroid
    assert (out / "wigner_trial-mixture.csv").exists()
    assert (out / "wigner_centroid_2.csv").exists()


# -------------------------------------------------------------- subcommands

def test_dataset_print(capsys):
    assert main(["dataset", "print"]) == 0
    out = capsys.readouterr().out
    for i in range(1, 6):
        assert f"sqz{i}" in out and f"fock{i}" in out and f"coh{i}" in out


def test_schedule_show_inline_and_file(tmp_path, capsys):
    spec = '{"family": "fock_superposition", "phi": 1.5707963267948966}'
    assert main(["schedule", "show", spec]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["round_trip"]["target_overlap"] >= 1 - 1e-9
    path = tmp_path / "spec.json"
    path.write_text(spec)
    assert main(["schedule", "show", f"@{path}"]) == 0


def test_schedule_show_bad_spec(capsys):
    assert main(["schedule", "show", "{bad"]) == 3


# ------------------------------------------------------------ config model

def test_experiment_config_rejects_non_dict():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(["kind"])


def test_exact_mode_never_touches_rng(tmp_path, monkeypatch):
    import numpy.random as npr

    def boom(*a, **k):
        raise AssertionError("exact pipeline must not construct RNGs")

    cfg = ExperimentConfig.from_dict(
        {
            "kind": "knn",
            "k": 3,
            "trials": [{"id": "t", "spec": {"family": "fock_superposition", "phi": 1.0}}],
            "output_dir": str(tmp_path / "out"),
            "figures": False,
        }
    )
    monkeypatch.setattr(npr, "default_rng", boom)
    monkeypatch.setattr(npr, "SeedSequence", boom)
    summary = run_experiment(cfg)
    assert summary["winners"]["t"] in (1, 2, 3)
