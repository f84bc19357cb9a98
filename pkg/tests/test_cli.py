"""Command-line interface: artifacts, exit codes, manifests, reproducibility."""

import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from earlyflow.cli import (
    DEFAULT5_M_PER_CLASS,
    DEFAULT5_N,
    _parse_grid,
    default5_specs,
    main,
)
from earlyflow.errors import ValidationError
from earlyflow.learner import load_cascade
from earlyflow.traffic import load_dataset, load_flows


SPEC_DOC = {
    "format_version": 1,
    "m_per_class": 12,
    "n": 20,
    "classes": [
        {"label": "small", "arrival_rate": 60.0,
         "size_model": {"kind": "gaussian_mixture", "means": [200.0],
                        "stds": [40.0], "weights": [1.0]}},
        {"label": "large", "arrival_rate": 200.0,
         "size_model": {"kind": "gaussian_mixture", "means": [900.0],
                        "stds": [80.0], "weights": [1.0]}},
    ],
}


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """Spec, dataset, packet stream, labels, and a trained model."""
    root = tmp_path_factory.mktemp("cli")
    paths = {
        "spec": root / "spec.json",
        "dataset": root / "dataset.json",
        "packets": root / "packets.jsonl",
        "labels": root / "labels.json",
        "model": root / "model.json",
        "root": root,
    }
    paths["spec"].write_text(json.dumps(SPEC_DOC))
    rc = main(["--seed", "5", "synth", "--spec", str(paths["spec"]),
               "--out", str(paths["dataset"]),
               "--packets-out", str(paths["packets"]),
               "--labels-out", str(paths["labels"])])
    assert rc == 0
    rc = main(["--seed", "5", "train", "--dataset", str(paths["dataset"]),
               "--grid", "5,10,20", "--lambda0", "0.05",
               "--out", str(paths["model"])])
    assert rc == 0
    return paths


def test_parse_grid_forms():
    assert _parse_grid("5:20:5", None) == [5, 10, 15, 20]
    assert _parse_grid("5,9,14", None) == [5, 9, 14]
    assert _parse_grid("5:200:50", 60) == [5, 55]
    with pytest.raises(ValidationError):
        _parse_grid("5:x:5", None)
    with pytest.raises(ValidationError):
        _parse_grid("50,60", 20)


def test_builtin_recipe_shape():
    specs = default5_specs()
    assert len(specs) == 5
    assert len({s.label for s in specs}) == 5
    assert DEFAULT5_M_PER_CLASS == 3000
    assert DEFAULT5_N == 200


def test_synth_deterministic(tmp_path, work):
    a, b, c = (tmp_path / f"{x}.json" for x in "abc")
    base = ["synth", "--spec", str(work["spec"])]
    assert main(["--seed", "5"] + base + ["--out", str(a)]) == 0
    assert main(["--seed", "5"] + base + ["--out", str(b)]) == 0
    assert main(["--seed", "6"] + base + ["--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    assert a.read_bytes() == work["dataset"].read_bytes()


def test_synth_preset_with_overrides(tmp_path):
    out = tmp_path / "five.json"
    rc = main(["synth", "--m-per-class", "2", "--n", "10", "--out", str(out)])
    assert rc == 0
    ds = load_dataset(out)
    assert len(ds.class_alphabet) == 5
    assert ds.m == 10 and ds.n == 10


def test_synth_labels_need_packets(tmp_path, work):
    rc = main(["synth", "--spec", str(work["spec"]),
               "--out", str(tmp_path / "x.json"),
               "--labels-out", str(tmp_path / "l.json")])
    assert rc == 1


def test_ingest_unlabeled_flows(tmp_path, work):
    out = tmp_path / "flows.json"
    rc = main(["ingest", "--packets", str(work["packets"]), "--out", str(out)])
    assert rc == 0
    flows = load_flows(out)
    assert len(flows) == 24


def test_ingest_labeled_roundtrip(tmp_path, work):
    out = tmp_path / "rebuilt.json"
    rc = main(["ingest", "--packets", str(work["packets"]),
               "--labels", str(work["labels"]), "--n", "20",
               "--out", str(out)])
    assert rc == 0
    back = load_dataset(out)
    orig = load_dataset(work["dataset"])
    assert back.m == orig.m
    # same flows modulo ordering: compare as sorted row tuples
    def rows(ds):
        return sorted((t.label, t.sizes.tolist(), t.inter_arrivals.tolist())
                      for t in ds.traces)
    assert rows(back) == rows(orig)


def test_ingest_counts_bad_lines(tmp_path, work, capsys):
    noisy = tmp_path / "noisy.jsonl"
    text = work["packets"].read_text()
    noisy.write_text(text + "garbage\n{\"flow\": \"q\"}\n")
    out = tmp_path / "flows.json"
    rc = main(["ingest", "--packets", str(noisy), "--out", str(out)])
    assert rc == 0
    assert "skipped 2 bad lines" in capsys.readouterr().err
    manifest = json.loads((tmp_path / "flows.json.manifest.json").read_text())
    assert manifest["counters"]["skipped_lines"] == 2


def test_train_artifacts(tmp_path, work):
    model = tmp_path / "model.json"
    report = tmp_path / "report.csv"
    rc = main(["--seed", "5", "train", "--dataset", str(work["dataset"]),
               "--grid", "5,10,20", "--lambda0", "0.05",
               "--out", str(model), "--report", str(report)])
    assert rc == 0
    cascade = load_cascade(model)
    assert cascade.grid == (5, 10, 20)
    assert cascade.class_alphabet == ("small", "large")
    with open(report, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["j"]) for r in rows] == [5, 10, 20]
    assert float(rows[-1]["test_accuracy"]) >= 0.8
    assert all(0 <= int(r["selected_features"]) <= 24 for r in rows)


def test_train_exit_codes(tmp_path, work):
    assert main(["train", "--dataset", str(tmp_path / "none.json"),
                 "--out", str(tmp_path / "m.json")]) == 2
    assert main(["train", "--dataset", str(work["dataset"]),
                 "--grid", "50,60", "--out", str(tmp_path / "m.json")]) == 1
    assert main(["train", "--dataset", str(work["dataset"]),
                 "--grid", "5,10", "--test-fraction", "1.5",
                 "--out", str(tmp_path / "m.json")]) == 1


def test_argparse_errors_exit_one(tmp_path):
    assert main(["synth", "--m-per-class", "notanint",
                 "--out", str(tmp_path / "x.json")]) == 1
    assert main(["no-such-command"]) == 1
    assert main([]) == 1


def test_detect_zero_beta_waits_for_full_flow(tmp_path, work):
    events_path = tmp_path / "events.jsonl"
    rc = main(["detect", "--model", str(work["model"]),
               "--packets", str(work["packets"]), "--beta", "0",
               "--events-out", str(events_path)])
    assert rc == 0
    lines = events_path.read_text().splitlines()
    assert json.loads(lines[0]) == {"format_version": 1}
    events = [json.loads(ln) for ln in lines[1:]]
    assert len(events) == 24
    assert all(e["status"] == "detected" and e["k"] == 20 for e in events)


def test_detect_huge_beta_commits_immediately(tmp_path, work):
    events_path = tmp_path / "events.jsonl"
    rc = main(["detect", "--model", str(work["model"]),
               "--packets", str(work["packets"]), "--beta", "1e9",
               "--events-out", str(events_path)])
    assert rc == 0
    events = [json.loads(ln) for ln in events_path.read_text().splitlines()[1:]]
    assert all(e["k"] == 5 for e in events)


def test_detect_report_and_curves(tmp_path, work):
    events_path = tmp_path / "events.jsonl"
    report = tmp_path / "report.csv"
    curves = tmp_path / "curves.csv"
    rc = main(["detect", "--model", str(work["model"]),
               "--packets", str(work["packets"]), "--beta", "1.0",
               "--labels", str(work["labels"]),
               "--events-out", str(events_path), "--report-out", str(report),
               "--curves-out", str(curves), "--all-events"])
    assert rc == 0
    with open(report, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["class"] for r in rows} == {"small", "large"}
    for r in rows:
        assert 0.0 <= float(r["accuracy"]) <= 1.0
        assert 5.0 <= float(r["mean_p_star"]) <= 20.0
        assert int(r["flows"]) == 12
    with open(curves, newline="") as fh:
        crows = list(csv.DictReader(fh))
    assert len(crows) > 0
    assert float(crows[0]["j_total"]) == pytest.approx(
        float(crows[0]["c1_forecast"]) + float(crows[0]["c2"]))
    # --all-events records the full deferred history
    events = [json.loads(ln) for ln in events_path.read_text().splitlines()[1:]]
    assert any(e["status"] == "deferred" for e in events) or \
        all(e["k"] == 5 for e in events)


def test_detect_report_needs_labels(tmp_path, work):
    rc = main(["detect", "--model", str(work["model"]),
               "--packets", str(work["packets"]),
               "--events-out", str(tmp_path / "e.jsonl"),
               "--report-out", str(tmp_path / "r.csv")])
    assert rc == 1


def test_evaluate_csv_and_gof(tmp_path, work):
    out = tmp_path / "eval.csv"
    gof = tmp_path / "gof.csv"
    rc = main(["evaluate", "--model", str(work["model"]),
               "--dataset", str(work["dataset"]), "--out", str(out),
               "--gof-out", str(gof)])
    assert rc == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    overall = [r for r in rows if r["label"] == "__overall__"]
    assert [int(r["j"]) for r in overall] == [5, 10, 20]
    assert float(overall[-1]["accuracy"]) >= 0.9
    per_class = [r for r in rows if r["label"] != "__overall__"]
    assert len(per_class) == 6
    with open(gof, newline="") as fh:
        grows = list(csv.DictReader(fh))
    assert [g["class"] for g in grows] == ["small", "large"]


def test_opmode_train_and_eval(tmp_path, work):
    model = tmp_path / "opmode.json"
    imp = tmp_path / "importance.csv"
    rc = main(["--seed", "2", "opmode", "train",
               "--dataset", str(work["dataset"]), "--j", "10",
               "--lambda0", "0.05", "--out", str(model),
               "--importance-out", str(imp)])
    assert rc == 0
    doc = json.loads(model.read_text())
    assert doc["kind"] == "opmode" and doc["j"] == 10
    assert "lr" in doc and "rf" in doc
    with open(imp, newline="") as fh:
        irows = list(csv.DictReader(fh))
    assert len(irows) == 24

    for which in ("lr", "rf"):
        cj = tmp_path / f"confusion-{which}.json"
        cc = tmp_path / f"confusion-{which}.csv"
        rc = main(["opmode", "eval", "--model", str(model),
                   "--dataset", str(work["dataset"]), "--which", which,
                   "--confusion-json", str(cj), "--confusion-csv", str(cc)])
        assert rc == 0
        rep = json.loads(cj.read_text())
        assert rep["class_alphabet"] == ["small", "large"]
        assert rep["accuracy"] >= 0.9
        assert rep["accuracy"] + rep["error_rate"] == pytest.approx(1.0)
        assert cc.exists()


def test_bench_features_profile_and_timing(tmp_path, work):
    out = tmp_path / "profile.csv"
    timing = tmp_path / "timing.csv"
    rc = main(["bench-features", "--reps", "100", "--sample-size", "50",
               "--out", str(out), "--model", str(work["model"]),
               "--timing-out", str(timing)])
    assert rc == 0
    with open(out, newline="") as fh:
        profile_rows = list(csv.DictReader(fh))
    assert len(profile_rows) == 12
    assert all(float(r["mean_us"]) > 0 for r in profile_rows)
    with open(timing, newline="") as fh:
        trows = list(csv.DictReader(fh))
    assert [int(r["j"]) for r in trows] == [5, 10, 20]
    for r in trows:
        assert 0 <= int(r["n_selected"]) <= 24
        assert float(r["time_all_us"]) > 0
        assert float(r["time_selected_us"]) > 0


def test_bench_features_reps_floor(tmp_path):
    rc = main(["bench-features", "--reps", "50", "--out", str(tmp_path / "p.csv")])
    assert rc == 1


def test_bench_timing_needs_model(tmp_path):
    rc = main(["bench-features", "--reps", "100", "--out",
               str(tmp_path / "p.csv"), "--timing-out", str(tmp_path / "t.csv")])
    assert rc == 1


def test_manifest_schema_and_hashes(work):
    with open(str(work["dataset"]) + ".manifest.json") as fh:
        manifest = json.load(fh)
    assert set(manifest) == {"format_version", "command", "argv", "seed",
                             "config", "inputs", "outputs", "counters",
                             "timings_s"}
    assert manifest["command"] == "synth"
    assert manifest["seed"] == 5
    import hashlib
    for path, digest in manifest["outputs"].items():
        assert hashlib.sha256(open(path, "rb").read()).hexdigest() == digest


def test_manifest_rerun_reproduces_outputs(tmp_path, work):
    manifest = json.loads(
        open(str(work["model"]) + ".manifest.json").read())
    saved = work["model"].read_bytes()
    moved = tmp_path / "model-before.json"
    moved.write_bytes(saved)
    assert main(manifest["argv"]) == 0
    assert work["model"].read_bytes() == moved.read_bytes()


def test_config_file_and_flag_precedence(tmp_path, work):
    cfg = tmp_path / "settings.toml"
    cfg.write_text('grid = "5,10"\nlambda0 = 0.05\nseed = 5\n')
    m1 = tmp_path / "m1.json"
    rc = main(["--config", str(cfg), "train", "--dataset",
               str(work["dataset"]), "--out", str(m1)])
    assert rc == 0
    assert load_cascade(m1).grid == (5, 10)
    # explicit flag wins over the config value
    m2 = tmp_path / "m2.json"
    rc = main(["--config", str(cfg), "train", "--dataset",
               str(work["dataset"]), "--grid", "5,20", "--out", str(m2)])
    assert rc == 0
    assert load_cascade(m2).grid == (5, 20)
    assert main(["--config", str(tmp_path / "nope.toml"), "synth",
                 "--out", str(tmp_path / "x.json")]) == 2


def test_format_version_gate(tmp_path, work):
    rc = main(["--format-version", "9", "synth", "--spec", str(work["spec"]),
               "--out", str(tmp_path / "x.json")])
    assert rc == 1


def test_console_entry_point(tmp_path, work):
    exe = shutil.which("earlyflow")
    if exe is None:
        cmd = [sys.executable, "-m", "earlyflow.cli"]
    else:
        cmd = [exe]
    out = tmp_path / "ds.json"
    proc = subprocess.run(cmd + ["--seed", "1", "synth", "--spec",
                                 str(work["spec"]), "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    assert "wrote 24 traces" in proc.stdout
