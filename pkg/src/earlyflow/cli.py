"""Command-line interface.

Subcommands: synth | ingest | train | detect | evaluate | opmode |
bench-features.  Every command snapshots its configuration, input hashes,
and output hashes into a JSON run manifest so a run can be repeated and
checked byte for byte (timing measurements aside).

Exit codes: 0 success, 1 validation error, 2 missing or corrupt artifact,
3 internal invariant violation.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import arrival, detector, features, learner, opmode, traffic
from .errors import ArtifactError, InternalError, ValidationError

PROG = "earlyflow"

# Built-in 5-class synthetic recipe; scale mirrors a full capture campaign.
DEFAULT5_M_PER_CLASS = 3000
DEFAULT5_N = 200


def default5_specs():
    mixes = [
        ("alpha", {"kind": "gaussian_mixture", "means": [120.0, 900.0],
                   "stds": [30.0, 80.0], "weights": [0.7, 0.3]}, 52.0),
        ("bravo", {"kind": "gaussian_mixture", "means": [300.0, 1200.0],
                   "stds": [60.0, 100.0], "weights": [0.5, 0.5]}, 90.0),
        ("charlie", {"kind": "gaussian_mixture", "means": [600.0],
                     "stds": [50.0], "weights": [1.0]}, 150.0),
        ("delta", {"kind": "gaussian_mixture", "means": [200.0, 1400.0],
                   "stds": [40.0, 60.0], "weights": [0.8, 0.2]}, 245.0),
        ("non-target", {"kind": "gaussian_mixture", "means": [800.0],
                        "stds": [200.0], "weights": [1.0]}, 390.0),
    ]
    return [traffic.ClassGeneratorSpec(label, model, rate)
            for label, model, rate in mixes]


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors map to the validation exit code."""

    def error(self, message):
        raise ValidationError(message)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path, command, argv, seed, config, inputs, outputs,
                    wall_s, counters=None):
    doc = {
        "format_version": traffic.FORMAT_VERSION,
        "command": command,
        "argv": list(argv),
        "seed": seed,
        "config": config,
        "inputs": {os.fspath(p): _sha256(p) for p in inputs},
        "outputs": {os.fspath(p): _sha256(p) for p in outputs},
        "counters": counters or {},
        "timings_s": {"wall": wall_s},
    }
    traffic.atomic_write_text(path, json.dumps(doc, indent=2))


def _parse_grid(text, n):
    """Grid syntax: "start:stop:step" (inclusive) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (int(v) for v in text.split(":"))
            if step < 1:
                raise ValueError("step must be >= 1")
            grid = list(range(start, stop + 1, step))
        else:
            grid = [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad grid {text!r}: {exc}") from exc
    if not grid:
        raise ValidationError(f"grid {text!r} is empty")
    if n is not None:
        grid = [j for j in grid if j <= n]
        if not grid:
            raise ValidationError(f"grid {text!r} has no points <= n={n}")
    return grid


def _load_config(path):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ArtifactError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ArtifactError(f"cannot parse config file {path}: {exc}") from exc


def _setting(args, config, key, fallback):
    """Command-line flag, else config file value, else fallback."""
    v = getattr(args, key.replace("-", "_"), None)
    if v is not None:
        return v
    if key in config:
        return config[key]
    return fallback


def _manifest_path(args, primary_out):
    return args.manifest or f"{os.fspath(primary_out)}.manifest.json"


def _require_file(path, what):
    if not os.path.exists(path):
        raise ArtifactError(f"{what} not found: {path}")


# ---------------------------------------------------------------------------
# Commands

def _cmd_synth(args, config, argv, seed):
    t0 = time.perf_counter()
    inputs = []
    if args.spec:
        _require_file(args.spec, "spec file")
        inputs.append(args.spec)
        doc = traffic._read_json(args.spec, "spec")
        try:
            specs = [
                traffic.ClassGeneratorSpec(
                    c["label"], c["size_model"], float(c["arrival_rate"]),
                    c.get("seed"))
                for c in doc["classes"]
            ]
            m_per_class = int(doc.get("m_per_class", DEFAULT5_M_PER_CLASS))
            n = int(doc.get("n", DEFAULT5_N))
        except (KeyError, TypeError) as exc:
            raise ArtifactError(f"corrupt spec file {args.spec}: {exc}") from exc
    else:
        specs = default5_specs()
        m_per_class = DEFAULT5_M_PER_CLASS
        n = DEFAULT5_N
    if args.m_per_class is not None:
        m_per_class = args.m_per_class
    if args.n is not None:
        n = args.n

    ds = traffic.generate_synthetic(specs, m_per_class, n, seed)
    traffic.save_dataset(ds, args.out)
    outputs = [args.out]
    if args.packets_out:
        packets, labels = traffic.dataset_to_packets(ds, seed)
        traffic.write_packet_stream(args.packets_out, packets)
        outputs.append(args.packets_out)
        if args.labels_out:
            traffic.save_labels(labels, args.labels_out)
            outputs.append(args.labels_out)
    elif args.labels_out:
        raise ValidationError("--labels-out requires --packets-out")

    snapshot = {"m_per_class": m_per_class, "n": n,
                "classes": [s.label for s in specs], "config_file": config}
    _write_manifest(_manifest_path(args, args.out), "synth", argv, seed,
                    snapshot, inputs, outputs, time.perf_counter() - t0)
    print(f"wrote {ds.m} traces ({len(specs)} classes, n={n}) to {args.out}")
    return 0


def _cmd_ingest(args, config, argv, seed):
    t0 = time.perf_counter()
    packets, skipped = traffic.read_packet_stream(args.packets, skip_bad=True)
    if not packets:
        raise ValidationError(f"no usable packet records in {args.packets}")
    flows, dropped = traffic.assemble_flows(packets)
    outputs = []
    if args.labels:
        _require_file(args.labels, "labels file")
        labels = traffic.load_labels(args.labels)
        n = args.n
        if n is None:
            raise ValidationError("--n is required when building a labeled dataset")
        traces = []
        alphabet = []
        for key in sorted(flows):
            if key not in labels:
                continue
            fl = flows[key]
            if fl.n < n:
                continue
            lab = labels[key]
            if lab not in alphabet:
                alphabet.append(lab)
            traces.append(traffic.Trace(lab, fl.sizes[:n],
                                        fl.inter_arrivals[: n - 1]))
        if not traces:
            raise ValidationError("no labeled flows long enough for the dataset")
        ds = traffic.LabeledDataset(traces, tuple(alphabet),
                                    provenance=f"ingest({args.packets})")
        traffic.save_dataset(ds, args.out)
        summary = f"{ds.m} labeled traces (n={n})"
    else:
        traffic.save_flows(flows, args.out)
        summary = f"{len(flows)} flows"
    outputs.append(args.out)
    counters = {"packets": len(packets), "skipped_lines": skipped,
                "dropped_flows": len(dropped)}
    _write_manifest(_manifest_path(args, args.out), "ingest", argv, seed,
                    {"config_file": config}, [args.packets], outputs,
                    time.perf_counter() - t0, counters)
    if skipped or dropped:
        print(f"warning: skipped {skipped} bad lines, "
              f"dropped {len(dropped)} short flows", file=sys.stderr)
    print(f"wrote {summary} to {args.out}")
    return 0


def _cmd_train(args, config, argv, seed):
    t0 = time.perf_counter()
    ds = traffic.load_dataset(args.dataset)
    grid = _parse_grid(_setting(args, config, "grid", "5:200:5"), ds.n)
    test_fraction = float(_setting(args, config, "test_fraction", 0.3))
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError(f"test fraction must be in (0, 1), got {test_fraction}")
    threads = int(_setting(args, config, "threads", 1))
    train_ds, test_ds = traffic.split_dataset(
        ds, [1.0 - test_fraction, test_fraction], seed)

    lam_setting = _setting(args, config, "lambda0", "auto")
    if str(lam_setting) == "auto":
        lambda0 = learner.select_lambda0(train_ds, grid[-1], seed=seed)
    else:
        lambda0 = float(lam_setting)
        if lambda0 < 0:
            raise ValidationError(f"lambda0 must be >= 0, got {lambda0}")

    cascade = learner.train_cascade(train_ds, grid, lambda0=lambda0,
                                    seed=seed, threads=threads)
    learner.save_cascade(cascade, args.out)
    outputs = [args.out]

    if args.report:
        with open(args.report, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "train_accuracy", "test_accuracy",
                        "selected_features"])
            for j in grid:
                mtr = learner.evaluate(cascade, train_ds, j)
                mte = learner.evaluate(cascade, test_ds, j)
                w.writerow([j, repr(mtr.accuracy), repr(mte.accuracy),
                            len(cascade.subsets[j].selected_features)])
        outputs.append(args.report)

    snapshot = {"grid": grid, "lambda0": lambda0,
                "test_fraction": test_fraction, "threads": threads,
                "config_file": config}
    _write_manifest(_manifest_path(args, args.out), "train", argv, seed,
                    snapshot, [args.dataset], outputs,
                    time.perf_counter() - t0)
    print(f"trained cascade over {len(grid)} grid points "
          f"(lambda0={lambda0:g}) to {args.out}")
    return 0


def _cmd_detect(args, config, argv, seed):
    t0 = time.perf_counter()
    cascade = learner.load_cascade(args.model)
    eta = float(_setting(args, config, "eta", 5.0))
    beta = float(_setting(args, config, "beta", 1.0))
    cfg = detector.DetectorConfig(cascade=cascade, eta=eta, beta=beta)

    packets, skipped = traffic.read_packet_stream(args.packets, skip_bad=True)
    if not packets:
        raise ValidationError(f"no usable packet records in {args.packets}")
    flows, dropped = traffic.assemble_flows(packets)

    first_ts = {}
    for p in packets:
        first_ts.setdefault(p.flow_key, p.ts_us)
    order = sorted(flows, key=lambda key: (first_ts[key], key))

    labels = None
    if args.labels:
        _require_file(args.labels, "labels file")
        labels = traffic.load_labels(args.labels)

    reports = []
    events = []
    short_flows = 0
    for key in order:
        fl = flows[key]
        if fl.n < cfg.j_min:
            short_flows += 1
            continue
        rep = detector.run_flow(fl, cfg, flow_key=key,
                                record_curves=bool(args.curves_out))
        reports.append(rep)
        events.extend(rep.events if args.all_events else rep.events[-1:])

    detector.write_events_jsonl(args.events_out, events)
    outputs = [args.events_out]
    if args.curves_out:
        detector.write_curves_csv(args.curves_out, reports)
        outputs.append(args.curves_out)
    if args.report_out:
        if labels is None:
            raise ValidationError("--report-out needs --labels for ground truth")
        _write_detection_report(args.report_out, reports, labels,
                                cascade.class_alphabet)
        outputs.append(args.report_out)

    inputs = [args.model, args.packets] + ([args.labels] if args.labels else [])
    counters = {"flows": len(reports), "skipped_lines": skipped,
                "dropped_flows": len(dropped), "short_flows": short_flows}
    _write_manifest(_manifest_path(args, args.events_out), "detect", argv, seed,
                    {"eta": eta, "beta": beta, "config_file": config},
                    inputs, outputs, time.perf_counter() - t0, counters)
    if skipped or dropped or short_flows:
        print(f"warning: {skipped} bad lines, {len(dropped)} dropped flows, "
              f"{short_flows} flows shorter than j_min", file=sys.stderr)
    print(f"classified {len(reports)} flows to {args.events_out}")
    return 0


def _write_detection_report(path, reports, labels, class_alphabet):
    """Per-class detection summary: packet counts, times, accuracy."""
    by_class = {c: [] for c in class_alphabet}
    for rep in reports:
        true = labels.get(rep.flow_key)
        if true is None:
            continue
        if true not in by_class:
            by_class[true] = []
        det = rep.detection
        by_class[true].append((det.p_star, det.t_p_star,
                               det.label == true))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "flows", "mean_p_star", "std_p_star",
                    "mean_t_ms", "std_t_ms", "accuracy", "accuracy_se"])
        for c in by_class:
            rows = by_class[c]
            if not rows:
                continue
            p = np.array([r[0] for r in rows], dtype=np.float64)
            tms = np.array([r[1] for r in rows]) * 1e3
            acc = float(np.mean([r[2] for r in rows]))
            se = float(np.sqrt(acc * (1 - acc) / len(rows)))
            w.writerow([c, len(rows), repr(float(p.mean())),
                        repr(float(p.std())), repr(float(tms.mean())),
                        repr(float(tms.std())), repr(acc), repr(se)])


def _cmd_evaluate(args, config, argv, seed):
    t0 = time.perf_counter()
    cascade = learner.load_cascade(args.model)
    ds = traffic.load_dataset(args.dataset)
    js = [args.j] if args.j is not None else list(cascade.grid)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "label", "precision", "recall", "f_measure",
                    "support", "accuracy"])
        for j in js:
            m = learner.evaluate(cascade, ds, j)
            support = m.confusion.sum(axis=1)
            w.writerow([j, "__overall__", "", "", "", int(support.sum()),
                        repr(m.accuracy)])
            for ci, label in enumerate(m.class_alphabet):
                w.writerow([j, label, repr(float(m.precision[ci])),
                            repr(float(m.recall[ci])),
                            repr(float(m.f_measure[ci])),
                            int(support[ci]), ""])
    gof_written = []
    if args.gof_out:
        arrival.write_gof_csv(args.gof_out, ds)
        gof_written.append(args.gof_out)
    _write_manifest(_manifest_path(args, args.out), "evaluate", argv, seed,
                    {"j": js, "config_file": config},
                    [args.model, args.dataset], [args.out] + gof_written,
                    time.perf_counter() - t0)
    print(f"evaluated {len(js)} grid points to {args.out}")
    return 0


def _cmd_opmode(args, config, argv, seed):
    t0 = time.perf_counter()
    if args.opmode_action == "train":
        ds = traffic.load_dataset(args.dataset)
        j = args.j or min(opmode.DEFAULT_MODE_J, ds.n)
        doc = {"format_version": traffic.FORMAT_VERSION, "kind": "opmode",
               "j": j}
        outputs = [args.out]
        if args.which in ("lr", "both"):
            lam = float(_setting(args, config, "lambda0", 0.01))
            lr = opmode.train_opmode_lr(ds, j, lambda0=lam)
            doc["lr"] = learner._subset_to_dict(lr)
        if args.which in ("rf", "both"):
            rf = opmode.train_random_forest(ds, j, seed=seed)
            doc["rf"] = opmode.forest_to_dict(rf)
            if args.importance_out:
                opmode.write_importance_csv(args.importance_out, rf)
                outputs.append(args.importance_out)
        elif args.importance_out:
            raise ValidationError("--importance-out needs a forest model")
        traffic.atomic_write_text(args.out, json.dumps(doc))
        _write_manifest(_manifest_path(args, args.out), "opmode-train", argv,
                        seed, {"j": j, "which": args.which,
                               "config_file": config},
                        [args.dataset], outputs, time.perf_counter() - t0)
        print(f"trained {args.which} mode model at j={j} to {args.out}")
        return 0

    # eval
    doc = traffic._read_json(args.model, "opmode model")
    if doc.get("kind") != "opmode":
        raise ArtifactError(f"{args.model} is not an opmode model file")
    ds = traffic.load_dataset(args.dataset)
    which = args.which
    if which == "both":
        which = "rf" if "rf" in doc else "lr"
    if which not in doc:
        raise ArtifactError(f"{args.model} holds no {which!r} model")
    j = args.j or int(doc["j"])
    X, y = features.design_matrix(ds, j)
    if which == "lr":
        model = learner._subset_from_dict(doc["lr"])
        if tuple(ds.class_alphabet) != model.class_alphabet:
            raise ValidationError("dataset alphabet differs from the model's")
        pred = model.predict(X)
        alphabet = model.class_alphabet
    else:
        forest = opmode.forest_from_dict(doc["rf"])
        if tuple(ds.class_alphabet) != forest.class_alphabet:
            raise ValidationError("dataset alphabet differs from the model's")
        pred = forest.predict(X)
        alphabet = forest.class_alphabet
    metrics = opmode.mode_confusion(y, pred, alphabet)
    outputs = []
    if args.confusion_json:
        traffic.atomic_write_text(
            args.confusion_json,
            json.dumps(opmode.confusion_report_dict(metrics)))
        outputs.append(args.confusion_json)
    if args.confusion_csv:
        opmode.write_confusion_csv(args.confusion_csv, metrics)
        outputs.append(args.confusion_csv)
    if not outputs:
        raise ValidationError("give --confusion-json and/or --confusion-csv")
    _write_manifest(_manifest_path(args, outputs[0]), "opmode-eval", argv,
                    seed, {"j": j, "which": which, "config_file": config},
                    [args.model, args.dataset], outputs,
                    time.perf_counter() - t0)
    print(f"mode accuracy {metrics.accuracy:.4f} ({which}, j={j})")
    return 0


def _time_row_us(fn, reps):
    groups = 10
    per_group = max(1, reps // groups)
    means = []
    for _ in range(groups):
        t0 = time.perf_counter_ns()
        for _ in range(per_group):
            fn()
        means.append((time.perf_counter_ns() - t0) / per_group / 1e3)
    return float(np.median(means))


def _cmd_bench_features(args, config, argv, seed):
    t0 = time.perf_counter()
    reps = int(_setting(args, config, "reps", 1000))
    profile = features.profile_feature_costs(reps, args.sample_size, seed)
    features.write_cost_profile_csv(args.out, profile)
    outputs = [args.out]
    inputs = []
    if args.timing_out:
        if not args.model:
            raise ValidationError("--timing-out needs --model for feature sets")
        cascade = learner.load_cascade(args.model)
        inputs.append(args.model)
        rng = np.random.default_rng(seed)
        with open(args.timing_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "n_selected", "time_all_us", "time_selected_us"])
            for j in cascade.grid:
                sizes = rng.uniform(1.0, 1500.0, size=j)
                taus = rng.exponential(0.01, size=j - 1)
                selected = cascade.subsets[j].selected_features
                all24 = list(range(24))
                t_all = _time_row_us(
                    lambda: features.feature_row_subset(sizes, taus, all24), reps)
                t_sel = _time_row_us(
                    lambda: features.feature_row_subset(sizes, taus, selected),
                    reps)
                w.writerow([j, len(selected), repr(t_all), repr(t_sel)])
        outputs.append(args.timing_out)
    _write_manifest(_manifest_path(args, args.out), "bench-features", argv,
                    seed, {"reps": reps, "sample_size": args.sample_size,
                           "config_file": config},
                    inputs, outputs, time.perf_counter() - t0)
    print(f"profiled {len(features.FEATURE_FUNCTION_NAMES)} statistics "
          f"to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly

def build_parser():
    parser = _Parser(prog=PROG, description=__doc__)
    parser.add_argument("--seed", type=int, default=None,
                        help="master random seed (default 0)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for training")
    parser.add_argument("--format-version", type=int, default=None,
                        help="artifact format version (only 1 is supported)")
    parser.add_argument("--config", default=None,
                        help="TOML config file; flags take precedence")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a synthetic dataset")
    p.add_argument("--spec", default=None, help="class spec JSON (default: built-in 5-class recipe)")
    p.add_argument("--m-per-class", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--packets-out", default=None)
    p.add_argument("--labels-out", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="assemble a packet stream into flows")
    p.add_argument("--packets", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--labels", default=None,
                   help="flow->label JSON; builds a labeled dataset")
    p.add_argument("--n", type=int, default=None,
                   help="trace length when building a labeled dataset")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train", help="train the prefix-length cascade")
    p.add_argument("--dataset", required=True)
    p.add_argument("--grid", default=None, help='e.g. "5:200:5" or "5,10,20"')
    p.add_argument("--lambda0", default=None, help='float or "auto"')
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("detect", help="replay a packet stream through the detector")
    p.add_argument("--model", required=True)
    p.add_argument("--packets", required=True)
    p.add_argument("--events-out", required=True)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--report-out", default=None)
    p.add_argument("--curves-out", default=None)
    p.add_argument("--all-events", action="store_true",
                   help="emit every per-packet decision, not just the final one")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("evaluate", help="score a cascade on a labeled dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--j", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--gof-out", default=None,
                   help="also write the arrival goodness-of-fit CSV")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("opmode", help="operation-mode classifiers")
    osub = p.add_subparsers(dest="opmode_action", required=True)
    pt = osub.add_parser("train")
    pt.add_argument("--dataset", required=True)
    pt.add_argument("--j", type=int, default=None)
    pt.add_argument("--which", choices=["lr", "rf", "both"], default="both")
    pt.add_argument("--lambda0", default=None)
    pt.add_argument("--out", required=True)
    pt.add_argument("--importance-out", default=None)
    pt.add_argument("--manifest", default=None)
    pt.set_defaults(func=_cmd_opmode)
    pe = osub.add_parser("eval")
    pe.add_argument("--model", required=True)
    pe.add_argument("--dataset", required=True)
    pe.add_argument("--j", type=int, default=None)
    pe.add_argument("--which", choices=["lr", "rf", "both"], default="both")
    pe.add_argument("--confusion-json", default=None)
    pe.add_argument("--confusion-csv", default=None)
    pe.add_argument("--manifest", default=None)
    pe.set_defaults(func=_cmd_opmode)

    p = sub.add_parser("bench-features", help="time the feature statistics")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--sample-size", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--timing-out", default=None,
                   help="total-time-vs-packet-count CSV using the model's feature sets")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_bench_features)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(args.config)
        if args.format_version is not None \
                and args.format_version != traffic.FORMAT_VERSION:
            raise ValidationError(
                f"unsupported format version {args.format_version}")
        seed = _setting(args, config, "seed", 0)
        if args.threads is None and "threads" in config:
            args.threads = int(config["threads"])
        return args.func(args, config, argv, int(seed))
    except ValidationError as exc:
        print(f"{PROG}: validation error: {exc}", file=sys.stderr)
        return 1
    except ArtifactError as exc:
        print(f"{PROG}: artifact error: {exc}", file=sys.stderr)
        return 2
    except (InternalError, AssertionError) as exc:
        print(f"{PROG}: internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
