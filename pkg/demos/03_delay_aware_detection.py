"""
Deciding when a flow has shown enough packets
=============================================

Watching more packets sharpens the classification but costs time.  At
each packet k the detector projects, for every candidate stop p >= k,
the expected misclassification cost plus a waiting cost that grows
linearly with the delay.  It commits at k only when no later candidate
looks cheaper.  The knob beta prices one second of waiting: beta=0
never hurries, a huge beta stops at the first opportunity.
"""

import numpy as np

from earlyflow.detector import DetectorConfig, run_flow
from earlyflow.learner import train_cascade
from earlyflow.traffic import ClassGeneratorSpec, generate_synthetic

specs = [
    ClassGeneratorSpec("idle", {"kind": "gaussian_mixture", "means": [160.0],
                                "stds": [35.0], "weights": [1.0]}, 40.0),
    ClassGeneratorSpec("browse", {"kind": "gaussian_mixture",
                                  "means": [480.0, 1000.0],
                                  "stds": [70.0, 90.0],
                                  "weights": [0.6, 0.4]}, 130.0),
    ClassGeneratorSpec("stream", {"kind": "gaussian_mixture",
                                  "means": [1250.0], "stds": [60.0],
                                  "weights": [1.0]}, 300.0),
]
train = generate_synthetic(specs, m_per_class=60, n=80, seed=33)
cascade = train_cascade(train, [5, 10, 20, 40, 80], lambda0=0.02)
fresh = generate_synthetic(specs, m_per_class=40, n=80, seed=34)

# Sweep beta and watch the accuracy/earliness trade-off.  p_star is the
# packet index the detector committed at; t_p_star the seconds waited.
print("  beta     accuracy   mean p*   mean wait (s)")
for beta in (0.0, 0.05, 0.5, 5.0, 1e9):
    config = DetectorConfig(cascade=cascade, beta=beta)
    hits, stops, waits = 0, [], []
    for trace in fresh.traces:
        det = run_flow(trace, config, record_curves=False).detection
        hits += det.label == trace.label
        stops.append(det.p_star)
        waits.append(det.t_p_star)
    print(f"{beta:>6g}     {hits / fresh.m:.4f}    {np.mean(stops):6.1f}"
          f"     {np.mean(waits):.4f}")

# One flow in detail, with the projected cost curve at the moment the
# rule fired.  The curve's minimum sits at the current packet: waiting
# longer is projected to cost more than it buys.
config = DetectorConfig(cascade=cascade, beta=0.5)
report = run_flow(fresh.traces[0], config, record_curves=True)
det = report.detection
curve = report.curves[-1]
print(f"\nflow of class {fresh.traces[0].label!r}: "
      f"decided {det.label!r} at packet {det.p_star} "
      f"(confidence {det.confidence:.3f}, waited {det.t_p_star:.4f}s)")
print("candidate p :", np.array2string(curve.p[:8]))
print("total cost  :", np.array2string(curve.total[:8], precision=4))
assert curve.total[0] == curve.total.min()
