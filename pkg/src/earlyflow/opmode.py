"""Operation-mode identification over fixed-length traces.

Modes (hover, forward, ...) are classified from the same 24 feature columns
at a fixed prefix length, default j = 300.  Two classifiers are provided:
the sparse logistic model from the learner module, and a from-scratch
random forest whose Gini importances reveal which features carry the mode
signal.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ArtifactError, ValidationError
from .features import FEATURE_NAMES_24, FeatureCostProfile, design_matrix
from .learner import Metrics, SolverConfig, SubsetModel, train_subset
from .traffic import FORMAT_VERSION, atomic_write_text, _read_json

DEFAULT_MODES = ("Standby", "Hover", "Forward", "Backward",
                 "Up", "Down", "Right", "Left")
DEFAULT_MODE_J = 300


@dataclass(frozen=True)
class ForestConfig:
    """Random-forest settings; defaults suit 24-column design matrices."""

    n_trees: int = 100
    max_depth: int = 20
    features_per_split: int = 5   # ceil(sqrt(24))
    min_samples_split: int = 2
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1:
            raise ValidationError("n_trees and max_depth must be >= 1")
        if self.features_per_split < 1 or self.min_samples_split < 2:
            raise ValidationError("bad features_per_split or min_samples_split")


@dataclass
class TreeNode:
    """Internal split node or leaf (leaf iff counts is set)."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode" = None
    right: "TreeNode" = None
    counts: np.ndarray = None


def _gini(counts, total):
    p = counts / total
    return 1.0 - float(p @ p)


def _best_split(X, y, idx, feats, n_classes):
    """Best (feature, threshold, gain) over candidate features.

    Thresholds are midpoints between consecutive distinct sorted values.
    Strictly larger gain wins; scanning features in ascending index and
    thresholds in ascending order resolves ties toward the lowest feature
    index, then the lowest threshold.
    """
    y_node = y[idx]
    n = idx.size
    parent_counts = np.bincount(y_node, minlength=n_classes)
    parent_gini = _gini(parent_counts, n)
    best = None
    best_gain = 0.0
    for f in feats:
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        ys = y_node[order]
        # cumulative class counts left of each cut position
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), ys] = 1.0
        cum = np.cumsum(onehot, axis=0)
        cuts = np.flatnonzero(xs[1:] > xs[:-1])  # split after position i
        for i in cuts:
            nl = i + 1
            nr = n - nl
            lc = cum[i]
            rc = parent_counts - lc
            gain = parent_gini - (nl * _gini(lc, nl) + nr * _gini(rc, nr)) / n
            if gain > best_gain:
                best_gain = gain
                best = (int(f), float((xs[i] + xs[i + 1]) / 2.0))
    if best is None:
        return None
    return best[0], best[1], best_gain


def _grow(X, y, idx, depth, rng, cfg, n_classes, importance, n_total):
    counts = np.bincount(y[idx], minlength=n_classes)
    if (depth >= cfg.max_depth or idx.size < cfg.min_samples_split
            or np.count_nonzero(counts) == 1):
        return TreeNode(counts=counts.astype(np.float64))
    d = X.shape[1]
    k = min(cfg.features_per_split, d)
    feats = np.sort(rng.choice(d, size=k, replace=False))
    found = _best_split(X, y, idx, feats, n_classes)
    if found is None:
        return TreeNode(counts=counts.astype(np.float64))
    f, thr, gain = found
    importance[f] += (idx.size / n_total) * gain
    mask = X[idx, f] <= thr
    left = _grow(X, y, idx[mask], depth + 1, rng, cfg, n_classes,
                 importance, n_total)
    right = _grow(X, y, idx[~mask], depth + 1, rng, cfg, n_classes,
                  importance, n_total)
    return TreeNode(feature=f, threshold=thr, left=left, right=right)


def _tree_predict(node, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if idx.size == 0:
            continue
        if nd.counts is not None:
            out[idx] = int(np.argmax(nd.counts))
            continue
        mask = X[idx, nd.feature] <= nd.threshold
        stack.append((nd.left, idx[mask]))
        stack.append((nd.right, idx[~mask]))
    return out


@dataclass
class ForestModel:
    """Trained forest with normalized Gini importances and OOB accuracy."""

    class_alphabet: tuple
    trees: list
    importance: np.ndarray
    oob_accuracy: float
    config: ForestConfig
    seed: int

    def __post_init__(self):
        self.class_alphabet = tuple(self.class_alphabet)

    def predict(self, rows) -> np.ndarray:
        """Majority vote of per-tree leaf argmaxes; ties take the lowest
        class index."""
        X = np.asarray(rows, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        votes = np.zeros((X.shape[0], len(self.class_alphabet)), dtype=np.int64)
        for tree in self.trees:
            pred = _tree_predict(tree, X)
            votes[np.arange(X.shape[0]), pred] += 1
        out = np.argmax(votes, axis=1)
        return int(out[0]) if single else out


def fit_forest(X, y, class_alphabet, cfg: ForestConfig = None,
               seed: int = 0) -> ForestModel:
    """Train the forest on a design matrix with integer class labels.

    Deterministic for a given seed: per-tree generators are spawned from
    the master seed in tree order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.size or X.shape[0] == 0:
        raise ValidationError("X and y must be non-empty and aligned")
    if not np.all(np.isfinite(X)):
        raise ValidationError("X must be finite")
    alphabet = tuple(class_alphabet)
    n_classes = len(alphabet)
    if n_classes < 2 or np.unique(y).size < 2:
        raise ValidationError("need at least 2 classes present")
    cfg = cfg or ForestConfig()
    m, d = X.shape
    streams = np.random.SeedSequence(seed).spawn(cfg.n_trees)
    trees = []
    importance = np.zeros(d)
    oob_votes = np.zeros((m, n_classes), dtype=np.int64)
    for ti in range(cfg.n_trees):
        rng = np.random.default_rng(streams[ti])
        if cfg.bootstrap:
            sample = rng.integers(0, m, size=m)
        else:
            sample = np.arange(m)
        tree_imp = np.zeros(d)
        tree = _grow(X, y, sample, 0, rng, cfg, n_classes, tree_imp, m)
        importance += tree_imp
        trees.append(tree)
        if cfg.bootstrap:
            oob = np.setdiff1d(np.arange(m), np.unique(sample),
                               assume_unique=True)
            if oob.size:
                pred = _tree_predict(tree, X[oob])
                oob_votes[oob, pred] += 1
    covered = oob_votes.sum(axis=1) > 0
    if covered.any():
        oob_pred = np.argmax(oob_votes[covered], axis=1)
        oob_acc = float(np.mean(oob_pred == y[covered]))
    else:
        oob_acc = float("nan")
    total = importance.sum()
    if total > 0:
        importance = importance / total
    return ForestModel(alphabet, trees, importance, oob_acc, cfg, seed)


def train_random_forest(dataset, j: int = DEFAULT_MODE_J,
                        cfg: ForestConfig = None, seed: int = 0) -> ForestModel:
    X, y = design_matrix(dataset, j)
    return fit_forest(X, y, dataset.class_alphabet, cfg, seed)


def rf_feature_importance(forest: ForestModel) -> np.ndarray:
    """Normalized Gini importances (sum to 1; unsplit features are 0)."""
    return forest.importance.copy()


def train_opmode_lr(dataset, j: int = DEFAULT_MODE_J,
                    cost_profile: FeatureCostProfile = None,
                    lambda0: float = 0.01,
                    solver: SolverConfig = None) -> SubsetModel:
    """Sparse logistic mode classifier at a fixed prefix length."""
    X, y = design_matrix(dataset, j)
    return train_subset(X, y, dataset.class_alphabet, cost_profile,
                        lambda0, solver, j=j)


def mode_confusion(y_true, y_pred, class_alphabet) -> Metrics:
    """Confusion matrix plus precision/recall rows for mode predictions."""
    return Metrics.from_predictions(y_true, y_pred, class_alphabet)


# ---------------------------------------------------------------------------
# Reports and serialization

def confusion_report_dict(metrics: Metrics) -> dict:
    """Confusion layout with per-column precision/FDR, per-row recall/FNR."""
    return {
        "format_version": FORMAT_VERSION,
        "class_alphabet": list(metrics.class_alphabet),
        "confusion": metrics.confusion.tolist(),
        "precision": metrics.precision.tolist(),
        "false_discovery_rate": (1.0 - metrics.precision).tolist(),
        "recall": metrics.recall.tolist(),
        "false_negative_rate": (1.0 - metrics.recall).tolist(),
        "f_measure": metrics.f_measure.tolist(),
        "accuracy": metrics.accuracy,
        "error_rate": 1.0 - metrics.accuracy,
    }


def write_confusion_csv(path, metrics: Metrics):
    """Confusion matrix CSV: counts, recall/FNR columns, precision/FDR rows,
    and overall accuracy in the corner."""
    alphabet = metrics.class_alphabet
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["true\\pred"] + list(alphabet) + ["recall", "fnr"])
        for i, label in enumerate(alphabet):
            w.writerow([label] + [int(v) for v in metrics.confusion[i]]
                       + [repr(float(metrics.recall[i])),
                          repr(float(1.0 - metrics.recall[i]))])
        w.writerow(["precision"] + [repr(float(v)) for v in metrics.precision]
                   + [repr(float(metrics.accuracy)), ""])
        w.writerow(["fdr"] + [repr(float(1.0 - v)) for v in metrics.precision]
                   + ["", repr(float(1.0 - metrics.accuracy))])


def write_importance_csv(path, forest: ForestModel):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "importance"])
        for name, v in zip(FEATURE_NAMES_24, forest.importance):
            w.writerow([name, repr(float(v))])


def _node_to_dict(node: TreeNode):
    if node.counts is not None:
        return {"counts": node.counts.tolist()}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(doc):
    if "counts" in doc:
        return TreeNode(counts=np.asarray(doc["counts"], dtype=np.float64))
    return TreeNode(feature=int(doc["feature"]), threshold=float(doc["threshold"]),
                    left=_node_from_dict(doc["left"]),
                    right=_node_from_dict(doc["right"]))


def forest_to_dict(forest: ForestModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "forest",
        "class_alphabet": list(forest.class_alphabet),
        "importance": forest.importance.tolist(),
        "oob_accuracy": forest.oob_accuracy,
        "seed": forest.seed,
        "config": {
            "n_trees": forest.config.n_trees,
            "max_depth": forest.config.max_depth,
            "features_per_split": forest.config.features_per_split,
            "min_samples_split": forest.config.min_samples_split,
            "bootstrap": forest.config.bootstrap,
        },
        "trees": [_node_to_dict(t) for t in forest.trees],
    }


def forest_from_dict(doc: dict) -> ForestModel:
    cfg = ForestConfig(**doc["config"])
    return ForestModel(
        class_alphabet=tuple(doc["class_alphabet"]),
        trees=[_node_from_dict(t) for t in doc["trees"]],
        importance=np.asarray(doc["importance"], dtype=np.float64),
        oob_accuracy=float(doc["oob_accuracy"]),
        config=cfg,
        seed=int(doc["seed"]),
    )


def save_forest(forest: ForestModel, path):
    atomic_write_text(path, json.dumps(forest_to_dict(forest)))


def load_forest(path) -> ForestModel:
    doc = _read_json(path, "forest model")
    if doc.get("kind") != "forest":
        raise ArtifactError(f"{path} is not a forest model file")
    try:
        return forest_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"corrupt forest model file {path}: {exc}") from exc
