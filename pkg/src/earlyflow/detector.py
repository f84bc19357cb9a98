"""Delay-aware detection: decide per packet whether to classify now or wait.

At each packet count k the detector scores the flow's prefix against every
trained grid point ahead of it.  The projected total cost of stopping at a
future packet p combines

  C1(p): similarity-weighted expected misclassification cost, forecast from
         the training tables.  Similarity weights are frozen at the current
         k; the forecast for waiting until p takes the best (minimum)
         weighted table value over trained grid points between now and p,
         so waiting never looks worse than it is.
  C2(p): delay cost beta * (p - k + 1) / rate, using the fitted
         inter-arrival rate of the nearest training trace's class.

The flow is classified as soon as stopping now is strictly cheaper than
every future candidate; otherwise the decision is deferred, and at p = n a
decision is forced.  With beta = 0 the detector always waits for the full
flow; with a huge beta it commits at the first evaluated packet count.
Raising beta never delays detection.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InternalError, ValidationError
from .features import J_MIN, feature_row
from .learner import CascadeModel, sigmoid
from .traffic import PacketRecord, Trace, atomic_write_text, trace_timestamps_us

FORMAT_VERSION = 1


@dataclass(frozen=True)
class DetectorConfig:
    """Stopping-rule settings bound to a trained cascade."""

    cascade: CascadeModel
    eta: float = 5.0        # sharpness of the similarity sigmoid
    beta: float = 1.0       # delay cost per second of waiting
    j_min: int = None
    n: int = None

    def __post_init__(self):
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if self.beta < 0 or not np.isfinite(self.beta):
            raise ValidationError(f"beta must be >= 0, got {self.beta}")
        if self.j_min is None:
            object.__setattr__(self, "j_min", self.cascade.grid[0])
        if self.n is None:
            object.__setattr__(self, "n", self.cascade.n)
        if self.j_min < self.cascade.grid[0]:
            raise ValidationError("j_min lies below the first trained grid point")
        if self.n < self.j_min:
            raise ValidationError("n must be >= j_min")


@dataclass
class CostCurve:
    """Projected total cost for every candidate stopping packet p = k..n."""

    k: int
    p: np.ndarray
    c1_forecast: np.ndarray
    c2: np.ndarray
    total: np.ndarray


@dataclass(frozen=True)
class Detection:
    label: str
    confidence: float
    p_star: int
    t_p_star: float  # seconds since the flow's first packet


@dataclass
class DetectorState:
    """Mutable per-flow state driven by step()."""

    flow_key: str
    sizes: list = field(default_factory=list)
    taus: list = field(default_factory=list)
    t: list = field(default_factory=list)       # seconds since first packet
    first_ts_us: int = None
    last_ts_us: int = None
    k: int = 0
    status: str = "deferred"
    weights: np.ndarray = None
    nearest_class: str = None
    nearest_rate: float = None
    curve: CostCurve = None
    detection: Detection = None
    events: list = field(default_factory=list)


def similarity_weights(row_std, cascade: CascadeModel, k: int,
                       eta: float = 5.0) -> np.ndarray:
    """Similarity weights over training traces at the grid point for k.

    Distances are Euclidean on standardized features; each trace's weight is
    a sigmoid of its relative closeness (D_bar - d_i) / D_bar with sharpness
    eta, normalized to sum to 1.  A zero mean distance yields uniform
    weights.
    """
    j = cascade.nearest_grid_j(k)
    d = np.linalg.norm(cascade.train_matrix[j] - np.asarray(row_std), axis=1)
    return _weights_from_distances(d, eta)


def _weights_from_distances(d, eta):
    d_bar = float(np.mean(d))
    if d_bar == 0.0:
        return np.full(d.size, 1.0 / d.size)
    s = sigmoid(eta * (d_bar - d) / d_bar)
    return s / np.sum(s)


def expected_misclass_cost(weights, cascade: CascadeModel, j: int) -> float:
    """Similarity-weighted expected misclassification cost at grid point j."""
    if j not in cascade.expected_cost:
        raise ValidationError(f"j={j} is not a trained grid point")
    w = np.asarray(weights, dtype=np.float64)
    E = cascade.expected_cost[j]
    if w.shape != E.shape:
        raise ValidationError("weights must align with the training traces")
    return float(w @ E)


def time_cost(k: int, p: int, rate: float, beta: float) -> float:
    """Projected delay cost of waiting from packet k through packet p.

    beta * (p - k + 1) / rate: each awaited packet costs the fitted mean
    inter-arrival time, scaled by the delay price beta.
    """
    if p < k:
        raise ValidationError(f"need p >= k, got p={p}, k={k}")
    if not (np.isfinite(rate) and rate > 0):
        raise ValidationError(f"rate must be positive, got {rate}")
    return beta * (p - k + 1) / rate


def _nearest_trace_class(d, cascade):
    """Class of the single nearest training trace; ties take the lowest
    class index, then the earliest trace."""
    dmin = d.min()
    candidates = np.flatnonzero(d == dmin)
    classes = cascade.train_labels[candidates]
    chosen = candidates[np.argmin(classes)]
    return cascade.class_alphabet[int(cascade.train_labels[chosen])]


def total_cost_curve(state: DetectorState, config: DetectorConfig) -> CostCurve:
    """Projected cost J(p) for every candidate stop p = k..n at the current k."""
    cascade = config.cascade
    k = state.k
    if k < config.j_min:
        raise ValidationError(f"curve undefined before j_min={config.j_min}")
    if state.weights is None or state.nearest_rate is None:
        raise ValidationError("state has no similarity weights yet")
    jk = cascade.nearest_grid_j(k)
    ahead = [j for j in cascade.grid if j >= jk]
    c1_grid = {}
    running = np.inf
    for j in ahead:
        running = min(running, expected_misclass_cost(state.weights, cascade, j))
        c1_grid[j] = running
    p = np.arange(k, config.n + 1)
    c1 = np.array([c1_grid[cascade.nearest_grid_j(int(pp))] for pp in p])
    c2 = config.beta * (p - k + 1) / state.nearest_rate
    return CostCurve(k=k, p=p, c1_forecast=c1, c2=c2, total=c1 + c2)


def _projected_p_star(curve: CostCurve) -> int:
    # ties resolve to the smallest p (np.argmin takes the first minimum)
    return int(curve.p[np.argmin(curve.total)])


def step(state: DetectorState, packet: PacketRecord,
         config: DetectorConfig) -> DetectorState:
    """Fold one packet into the flow state and re-evaluate the stopping rule.

    Raises on out-of-order timestamps, on packets for a different flow, and
    on packets past a committed decision.
    """
    if state.status == "detected":
        raise ValidationError(f"flow {state.flow_key!r} already classified")
    if state.k >= config.n:
        raise ValidationError(f"flow {state.flow_key!r} already holds n packets")
    if packet.flow_key != state.flow_key:
        raise ValidationError(
            f"packet for flow {packet.flow_key!r} fed to state of {state.flow_key!r}")
    if state.last_ts_us is not None and packet.ts_us < state.last_ts_us:
        raise ValidationError(
            f"out-of-order timestamp {packet.ts_us} after {state.last_ts_us}")

    if state.last_ts_us is None:
        state.first_ts_us = packet.ts_us
        state.t.append(0.0)
    else:
        state.taus.append((packet.ts_us - state.last_ts_us) / 1e6)
        state.t.append((packet.ts_us - state.first_ts_us) / 1e6)
    state.last_ts_us = packet.ts_us
    state.sizes.append(packet.size)
    state.k += 1

    if state.k < config.j_min:
        return state

    cascade = config.cascade
    j = cascade.nearest_grid_j(state.k)
    model = cascade.subsets[j]
    prefix = Trace(None, np.asarray(state.sizes), np.asarray(state.taus))
    row = feature_row(prefix)
    row_std = model.standardize(row)
    d = np.linalg.norm(cascade.train_matrix[j] - row_std, axis=1)
    state.weights = _weights_from_distances(d, config.eta)
    state.nearest_class = _nearest_trace_class(d, cascade)
    state.nearest_rate = cascade.arrival_rates[state.nearest_class]
    state.curve = total_cost_curve(state, config)

    total = state.curve.total
    stop_now = state.k == config.n or (total.size > 1 and total[0] < total[1:].min())
    p_star_projected = _projected_p_star(state.curve)

    label, confidence = None, None
    if stop_now:
        probs = model.predict_proba(row)
        ci = int(np.argmax(probs))
        label = model.class_alphabet[ci]
        confidence = float(probs[ci])
        state.status = "detected"
        state.detection = Detection(label, confidence, state.k, state.t[-1])
        p_star_projected = state.k
        if state.detection.p_star != _projected_p_star(state.curve) and \
                state.k != config.n:
            raise InternalError("stopping rule and curve argmin disagree")

    state.events.append({
        "flow": state.flow_key,
        "k": state.k,
        "status": state.status,
        "label": label,
        "pr": confidence,
        "p_star_projected": p_star_projected,
        "t_s": state.t[-1],
    })
    return state


@dataclass
class DetectionReport:
    """Outcome of replaying one flow through the detector."""

    flow_key: str
    detection: Detection
    events: list
    curves: list  # CostCurve per evaluated k when recorded


def run_flow(flow: Trace, config: DetectorConfig, flow_key: str = "flow",
             record_curves: bool = True) -> DetectionReport:
    """Replay a flow packet by packet and return its first detection.

    The flow must hold at least j_min packets; a decision is forced at the
    final packet if the stopping rule never fires earlier.
    """
    if flow.n < config.j_min:
        raise ValidationError(
            f"flow has {flow.n} packets, fewer than j_min={config.j_min}")
    n = min(flow.n, config.n)
    ts = trace_timestamps_us(flow)
    state = DetectorState(flow_key=flow_key)
    curves = []
    for i in range(n):
        step(state, PacketRecord(flow_key, int(ts[i]), int(flow.sizes[i])), config)
        if state.curve is not None and record_curves:
            curves.append(state.curve)
        if state.status == "detected":
            break
    if state.detection is None:
        raise InternalError("flow replay ended without a decision")
    return DetectionReport(flow_key=flow_key, detection=state.detection,
                           events=state.events, curves=curves)


# ---------------------------------------------------------------------------
# Streaming output

def event_json(event: dict) -> str:
    return json.dumps(event)


def write_events_jsonl(path, events):
    lines = [json.dumps({"format_version": FORMAT_VERSION})]
    lines.extend(json.dumps(e) for e in events)
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_curves_csv(path, reports):
    """Cost curves as CSV rows (flow, k, p, c1_forecast, c2, j_total)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["flow", "k", "p", "c1_forecast", "c2", "j_total"])
        for rep in reports:
            for curve in rep.curves:
                for p, c1, c2, tot in zip(curve.p, curve.c1_forecast,
                                          curve.c2, curve.total):
                    w.writerow([rep.flow_key, curve.k, int(p), repr(float(c1)),
                                repr(float(c2)), repr(float(tot))])
