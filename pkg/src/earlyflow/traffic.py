"""Flow data model, synthetic traffic generation, and file formats.

A flow is an ordered packet sequence; a Trace is its fixed-length view used
for learning: n packet sizes plus the n-1 inter-arrival gaps between them.
Timestamps are integer microseconds on the wire and float seconds inside
traces.  Inter-arrival times are quantized to whole microseconds at
generation time so a dataset survives a round trip through the packet
stream format exactly.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ArtifactError, ValidationError
from .features import J_MIN

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PacketRecord:
    """One captured packet: flow key, integer-microsecond timestamp, size."""

    flow_key: str
    ts_us: int
    size: int

    def __post_init__(self):
        if not self.flow_key:
            raise ValidationError("flow_key must be non-empty")
        if not isinstance(self.ts_us, int) or self.ts_us < 0:
            raise ValidationError(f"ts_us must be a non-negative int, got {self.ts_us!r}")
        if not isinstance(self.size, int) or self.size < 1:
            raise ValidationError(f"size must be an int >= 1, got {self.size!r}")


@dataclass(frozen=True, eq=False)
class Trace:
    """A flow of n packets: n sizes and n-1 inter-arrival gaps (seconds).

    label is None for flows that have not been classified.
    """

    label: str | None
    sizes: np.ndarray
    inter_arrivals: np.ndarray

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=np.int64)
        taus = np.asarray(self.inter_arrivals, dtype=np.float64)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "inter_arrivals", taus)
        if sizes.ndim != 1 or taus.ndim != 1:
            raise ValidationError("sizes and inter_arrivals must be 1-d")
        if sizes.size < 2:
            raise ValidationError("a trace needs at least 2 packets")
        if taus.size != sizes.size - 1:
            raise ValidationError(
                f"expected {sizes.size - 1} inter-arrivals, got {taus.size}")
        if np.any(sizes < 1):
            raise ValidationError("packet sizes must be >= 1")
        if np.any(~np.isfinite(taus)) or np.any(taus < 0):
            raise ValidationError("inter-arrivals must be finite and >= 0")

    @property
    def n(self) -> int:
        return int(self.sizes.size)


def make_prefix(trace: Trace, j: int) -> Trace:
    """First j packets of a trace: j sizes and j-1 inter-arrivals."""
    if not J_MIN <= j <= trace.n:
        raise ValidationError(f"prefix length must be in [{J_MIN}, {trace.n}], got {j}")
    return Trace(trace.label, trace.sizes[:j].copy(),
                 trace.inter_arrivals[: j - 1].copy())


@dataclass
class LabeledDataset:
    """Fixed-n traces with labels drawn from a class alphabet."""

    traces: list
    class_alphabet: tuple
    provenance: str = ""

    def __post_init__(self):
        self.class_alphabet = tuple(self.class_alphabet)
        if not self.traces:
            raise ValidationError("dataset must contain at least one trace")
        if len(set(self.class_alphabet)) != len(self.class_alphabet):
            raise ValidationError("class_alphabet entries must be unique")
        n = self.traces[0].n
        for tr in self.traces:
            if tr.n != n:
                raise ValidationError("all traces must share the same length n")
            if tr.label not in self.class_alphabet:
                raise ValidationError(f"trace label {tr.label!r} not in alphabet")
        self._cache = {}

    @property
    def n(self) -> int:
        return self.traces[0].n

    @property
    def m(self) -> int:
        return len(self.traces)

    def sizes_matrix(self) -> np.ndarray:
        if "sizes" not in self._cache:
            self._cache["sizes"] = np.stack([tr.sizes for tr in self.traces])
        return self._cache["sizes"]

    def iat_matrix(self) -> np.ndarray:
        if "iat" not in self._cache:
            self._cache["iat"] = np.stack([tr.inter_arrivals for tr in self.traces])
        return self._cache["iat"]

    def labels_index(self) -> np.ndarray:
        if "y" not in self._cache:
            lut = {c: i for i, c in enumerate(self.class_alphabet)}
            self._cache["y"] = np.array([lut[tr.label] for tr in self.traces])
        return self._cache["y"]


# ---------------------------------------------------------------------------
# Synthetic generation

@dataclass(frozen=True)
class ClassGeneratorSpec:
    """Recipe for one traffic class.

    size_model is either
      {"kind": "categorical", "values": [...], "weights": [...]}
    or
      {"kind": "gaussian_mixture", "means": [...], "stds": [...], "weights": [...]}
    Sizes are truncated to integers >= 1.  Arrivals are exponential with the
    given rate (packets per second).
    """

    label: str
    size_model: dict
    arrival_rate: float
    seed: int | None = None

    def __post_init__(self):
        if not self.label:
            raise ValidationError("class label must be non-empty")
        if not (np.isfinite(self.arrival_rate) and self.arrival_rate > 0):
            raise ValidationError(f"arrival_rate must be positive, got {self.arrival_rate}")
        sm = self.size_model
        kind = sm.get("kind")
        if kind == "categorical":
            vals = np.asarray(sm["values"])
            wts = np.asarray(sm["weights"], dtype=np.float64)
            if vals.size == 0 or vals.size != wts.size:
                raise ValidationError("categorical model needs aligned values/weights")
            if np.any(vals < 1):
                raise ValidationError("categorical sizes must be >= 1")
        elif kind == "gaussian_mixture":
            means = np.asarray(sm["means"], dtype=np.float64)
            stds = np.asarray(sm["stds"], dtype=np.float64)
            wts = np.asarray(sm["weights"], dtype=np.float64)
            if means.size == 0 or means.size != stds.size or means.size != wts.size:
                raise ValidationError("mixture model needs aligned means/stds/weights")
            if np.any(stds < 0):
                raise ValidationError("mixture stds must be >= 0")
        else:
            raise ValidationError(f"unknown size_model kind {kind!r}")
        if abs(float(np.sum(wts)) - 1.0) > 1e-9:
            raise ValidationError("size model weights must sum to 1")


def _draw_sizes(rng, model, shape):
    if model["kind"] == "categorical":
        vals = np.asarray(model["values"], dtype=np.int64)
        return rng.choice(vals, p=np.asarray(model["weights"]), size=shape)
    means = np.asarray(model["means"], dtype=np.float64)
    stds = np.asarray(model["stds"], dtype=np.float64)
    comp = rng.choice(means.size, p=np.asarray(model["weights"]), size=shape)
    raw = rng.normal(means[comp], stds[comp])
    return np.maximum(np.rint(raw).astype(np.int64), 1)


def generate_synthetic(specs, m_per_class: int, n: int, seed: int) -> LabeledDataset:
    """Sample a labeled dataset: m_per_class traces of n packets per class.

    Deterministic for a given seed.  Inter-arrival times are exponential
    with each class's rate, quantized to whole microseconds.
    """
    specs = list(specs)
    if not specs:
        raise ValidationError("need at least one class spec")
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        raise ValidationError("class labels must be unique")
    if m_per_class < 1:
        raise ValidationError("m_per_class must be >= 1")
    if n < J_MIN:
        raise ValidationError(f"n must be >= {J_MIN}")
    traces = []
    for ci, spec in enumerate(specs):
        sub = spec.seed if spec.seed is not None else ci
        rng = np.random.default_rng(np.random.SeedSequence([seed, ci, sub]))
        sizes = _draw_sizes(rng, spec.size_model, (m_per_class, n))
        taus = rng.exponential(1.0 / spec.arrival_rate, size=(m_per_class, n - 1))
        taus = np.round(taus * 1e6) / 1e6  # quantize to whole microseconds
        for r in range(m_per_class):
            traces.append(Trace(spec.label, sizes[r], taus[r]))
    return LabeledDataset(traces, tuple(labels), provenance=f"synthetic(seed={seed})")


def split_dataset(dataset: LabeledDataset, fractions, seed: int):
    """Stratified split into len(fractions) datasets.

    Fractions must sum to 1.  Per-class counts follow the largest-remainder
    rule, so exact fractions of round class sizes split exactly.
    """
    fracs = [float(f) for f in fractions]
    if not fracs or any(f <= 0 for f in fracs):
        raise ValidationError("fractions must be positive")
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise ValidationError("fractions must sum to 1")
    rng = np.random.default_rng(seed)
    parts = [[] for _ in fracs]
    y = dataset.labels_index()
    for ci in range(len(dataset.class_alphabet)):
        idx = np.flatnonzero(y == ci)
        if idx.size < len(fracs):
            raise ValidationError(
                f"class {dataset.class_alphabet[ci]!r} has {idx.size} traces, "
                f"fewer than {len(fracs)} partitions")
        idx = rng.permutation(idx)
        exact = [f * idx.size for f in fracs]
        counts = [math.floor(e) for e in exact]
        rem = idx.size - sum(counts)
        order = sorted(range(len(fracs)), key=lambda i: exact[i] - counts[i],
                       reverse=True)
        for i in order[:rem]:
            counts[i] += 1
        start = 0
        for pi, c in enumerate(counts):
            parts[pi].extend(int(t) for t in idx[start:start + c])
            start += c
    out = []
    for pi, chosen in enumerate(parts):
        chosen.sort()
        out.append(LabeledDataset(
            [dataset.traces[t] for t in chosen], dataset.class_alphabet,
            provenance=f"{dataset.provenance}[split {pi}]"))
    return out


# ---------------------------------------------------------------------------
# Packet stream assembly

def assemble_flows(packets):
    """Group packets by flow key into unlabeled flows.

    Within each flow, packets are sorted by timestamp (ties by size, so the
    result does not depend on input order).  Groups with fewer than 2
    packets are dropped and reported.

    Returns (flows, dropped): a dict flow_key -> Trace with label None, and
    the sorted list of dropped flow keys.
    """
    packets = list(packets)
    if not packets:
        raise ValidationError("packet list must be non-empty")
    groups = {}
    for p in packets:
        groups.setdefault(p.flow_key, []).append(p)
    flows, dropped = {}, []
    for key in sorted(groups):
        recs = sorted(groups[key], key=lambda p: (p.ts_us, p.size))
        if len(recs) < 2:
            dropped.append(key)
            continue
        ts = np.array([p.ts_us for p in recs], dtype=np.int64)
        sizes = np.array([p.size for p in recs], dtype=np.int64)
        flows[key] = Trace(None, sizes, np.diff(ts) / 1e6)
    return flows, dropped


def trace_timestamps_us(trace: Trace, start_us: int = 0) -> np.ndarray:
    """Integer-microsecond timestamps for a trace's packets."""
    gaps = np.round(trace.inter_arrivals * 1e6).astype(np.int64)
    ts = np.empty(trace.n, dtype=np.int64)
    ts[0] = start_us
    ts[1:] = start_us + np.cumsum(gaps)
    return ts


def dataset_to_packets(dataset: LabeledDataset, seed: int, key_prefix="flow"):
    """Flatten a dataset into one interleaved packet stream.

    Each trace becomes a flow with a seeded random start offset; the stream
    is sorted by timestamp.  Returns (packets, labels) where labels maps
    flow key -> class label.
    """
    rng = np.random.default_rng(seed)
    width = len(str(dataset.m))
    packets, labels = [], {}
    for i, tr in enumerate(dataset.traces):
        key = f"{key_prefix}-{i:0{width}d}"
        labels[key] = tr.label
        start = int(rng.integers(0, 2_000_000))
        for t, s in zip(trace_timestamps_us(tr, start), tr.sizes):
            packets.append(PacketRecord(key, int(t), int(s)))
    packets.sort(key=lambda p: (p.ts_us, p.flow_key, p.size))
    return packets, labels


# ---------------------------------------------------------------------------
# File formats

def atomic_write_text(path, text: str):
    """Write text to path via a temp file and rename."""
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _read_json(path, what: str) -> dict:
    if not os.path.exists(path):
        raise ArtifactError(f"{what} file not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"cannot read {what} file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ArtifactError(f"{what} file {path} must hold a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ArtifactError(
            f"{what} file {path} has format_version {version!r}, "
            f"expected {FORMAT_VERSION}")
    return doc


def save_dataset(dataset: LabeledDataset, path):
    doc = {
        "format_version": FORMAT_VERSION,
        "n": dataset.n,
        "class_alphabet": list(dataset.class_alphabet),
        "provenance": dataset.provenance,
        "traces": [
            {
                "label": tr.label,
                "sizes": [int(s) for s in tr.sizes],
                "inter_arrivals": [float(t) for t in tr.inter_arrivals],
            }
            for tr in dataset.traces
        ],
    }
    atomic_write_text(path, json.dumps(doc))


def load_dataset(path) -> LabeledDataset:
    doc = _read_json(path, "dataset")
    try:
        traces = [
            Trace(t["label"], np.asarray(t["sizes"], dtype=np.int64),
                  np.asarray(t["inter_arrivals"], dtype=np.float64))
            for t in doc["traces"]
        ]
        ds = LabeledDataset(traces, tuple(doc["class_alphabet"]),
                            provenance=doc.get("provenance", ""))
    except (KeyError, TypeError, ValidationError) as exc:
        raise ArtifactError(f"corrupt dataset file {path}: {exc}") from exc
    if ds.n != doc["n"]:
        raise ArtifactError(f"corrupt dataset file {path}: n mismatch")
    return ds


def write_packet_stream(path, packets):
    """Write packets as JSONL: a format_version header line, then one
    record per line with fields flow, ts_us, size."""
    lines = [json.dumps({"format_version": FORMAT_VERSION})]
    lines.extend(
        json.dumps({"flow": p.flow_key, "ts_us": p.ts_us, "size": p.size})
        for p in packets
    )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_packet_stream(path, skip_bad: bool = False):
    """Read a JSONL packet stream.

    Returns (packets, n_skipped).  Malformed lines raise ArtifactError
    unless skip_bad is set, in which case they are counted and skipped.
    """
    if not os.path.exists(path):
        raise ArtifactError(f"packet stream not found: {path}")
    packets, skipped = [], 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                if "format_version" in rec and "flow" not in rec:
                    if rec["format_version"] != FORMAT_VERSION:
                        raise ArtifactError(
                            f"{path}: unsupported format_version "
                            f"{rec['format_version']!r}")
                    continue
                packets.append(PacketRecord(rec["flow"], int(rec["ts_us"]),
                                            int(rec["size"])))
            except ArtifactError:
                raise
            except (json.JSONDecodeError, KeyError, TypeError, ValueError,
                    ValidationError) as exc:
                if skip_bad:
                    skipped += 1
                    continue
                raise ArtifactError(
                    f"{path} line {lineno}: bad packet record: {exc}") from exc
    return packets, skipped


def save_flows(flows: dict, path):
    """Write assembled unlabeled flows as JSON."""
    doc = {
        "format_version": FORMAT_VERSION,
        "flows": [
            {
                "flow": key,
                "sizes": [int(s) for s in tr.sizes],
                "inter_arrivals": [float(t) for t in tr.inter_arrivals],
            }
            for key, tr in sorted(flows.items())
        ],
    }
    atomic_write_text(path, json.dumps(doc))


def load_flows(path) -> dict:
    doc = _read_json(path, "flows")
    try:
        return {
            f["flow"]: Trace(None, np.asarray(f["sizes"], dtype=np.int64),
                             np.asarray(f["inter_arrivals"], dtype=np.float64))
            for f in doc["flows"]
        }
    except (KeyError, TypeError, ValidationError) as exc:
        raise ArtifactError(f"corrupt flows file {path}: {exc}") from exc


def save_labels(labels: dict, path):
    atomic_write_text(path, json.dumps(
        {"format_version": FORMAT_VERSION, "labels": labels}))


def load_labels(path) -> dict:
    doc = _read_json(path, "labels")
    labels = doc.get("labels")
    if not isinstance(labels, dict):
        raise ArtifactError(f"corrupt labels file {path}")
    return labels
