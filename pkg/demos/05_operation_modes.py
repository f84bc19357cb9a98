"""
Telling operation modes apart when packet sizes carry no signal
===============================================================

Eight device modes share one size distribution and differ only in how
fast they emit packets.  Two classifiers compete on the same 24-number
summaries: the sparse logistic model and a from-scratch random forest.
The forest's impurity-based importance shows it discovered on its own
that only the timing half of the summary matters.
"""

import numpy as np

from earlyflow.features import design_matrix, feature_id
from earlyflow.learner import SolverConfig
from earlyflow.opmode import (
    DEFAULT_MODES,
    mode_confusion,
    train_opmode_lr,
    train_random_forest,
)
from earlyflow.traffic import ClassGeneratorSpec, generate_synthetic, split_dataset

# Same Gaussian sizes everywhere; rates spaced by a factor of 1.5.
size_model = {"kind": "gaussian_mixture", "means": [420.0], "stds": [12.0],
              "weights": [1.0]}
specs = [ClassGeneratorSpec(mode, size_model, 40.0 * 1.5 ** k)
         for k, mode in enumerate(DEFAULT_MODES)]
dataset = generate_synthetic(specs, m_per_class=50, n=300, seed=61)
train, test = split_dataset(dataset, [0.75, 0.25], seed=61)
Xte, yte = design_matrix(test, 300)

# The logistic model needs a patient solver here: neighboring rates
# differ only 1.5x, so the decision boundaries are delicate.
lr = train_opmode_lr(train, j=300, lambda0=1e-3,
                     solver=SolverConfig(max_iter=20000, rel_tol=1e-12))
lr_acc = np.mean(lr.predict(Xte) == yte)

forest = train_random_forest(train, j=300, seed=61)
rf_pred = forest.predict(Xte)
rf_acc = np.mean(rf_pred == yte)
print(f"held-out accuracy: logistic {lr_acc:.4f}, forest {rf_acc:.4f} "
      f"on {yte.size} flows, {len(DEFAULT_MODES)} modes")

# Importance mass by stream.  Size statistics are pure noise by
# construction, and the forest's split gains say so.
imp = forest.importance
print(f"\nimportance mass: sizes {imp[:12].sum():.4f}, "
      f"timing {imp[12:].sum():.4f}")
order = np.argsort(imp)[::-1]
print("top five features by importance:")
for i in order[:5]:
    fid = feature_id(int(i) + 1)
    print(f"  {fid.function:>9} of {fid.stream:<4} stream  {imp[i]:.4f}")

# Confusion matrix for the forest.  Errors, when any, sit next to the
# diagonal: a mode is only ever mistaken for its nearest rate neighbor.
metrics = mode_confusion(yte, rf_pred, forest.class_alphabet)
print(f"\nforest confusion (rows true, accuracy {metrics.accuracy:.4f}):")
header = " ".join(f"{m[:4]:>5}" for m in DEFAULT_MODES)
print(f"{'':>9} {header}")
for ci, mode in enumerate(DEFAULT_MODES):
    row = " ".join(f"{int(v):>5}" for v in metrics.confusion[ci])
    print(f"{mode:>9} {row}")
