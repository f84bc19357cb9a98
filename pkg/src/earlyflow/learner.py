"""Cost-weighted sparse one-vs-all logistic regression over prefix features.

For each prefix length j on a training grid, a per-class linear model is fit
by proximal gradient descent on the mean binary cross-entropy plus a
re-weighted l1 penalty: feature i carries penalty lambda0 * c_i / c_bar,
where c_i is its computation cost.  Expensive features must earn their keep.

The full cascade keeps, per grid point, the fitted model, the standardized
training design matrix, and each training trace's expected misclassification
cost 1 - P(true class), which the detector later combines with similarity
weights.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import arrival
from .errors import ArtifactError, ValidationError
from .features import J_MIN, FeatureCostProfile, default_cost_profile, design_matrix
from .traffic import FORMAT_VERSION, atomic_write_text, _read_json

LAMBDA0_GRID = tuple(float(v) for v in np.logspace(-4, 1, 6))


def sigmoid(a):
    """Numerically stable logistic function."""
    a = np.asarray(a, dtype=np.float64)
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@dataclass(frozen=True)
class SolverConfig:
    """Proximal gradient settings."""

    max_iter: int = 1000
    rel_tol: float = 1e-6
    init_step: float = 1.0
    backtrack: float = 0.5
    step_growth: float = 1.25
    max_backtracks: int = 60


def _smooth_loss(scores, z):
    # mean binary cross-entropy of sigmoid(scores) against z, via logaddexp
    return float(np.mean(np.logaddexp(0.0, scores) - z * scores))


def _fit_binary(Xs, z, lam, cfg: SolverConfig):
    """Fit one binary l1 logistic model; returns (w, b, objective_history).

    The objective history is monotone non-increasing: each step satisfies a
    backtracking sufficient-decrease condition.  Converged when the relative
    objective decrease drops below cfg.rel_tol.
    """
    m, d = Xs.shape
    w = np.zeros(d)
    b = 0.0
    t = cfg.init_step
    scores = Xs @ w + b
    f = _smooth_loss(scores, z)
    F = f + float(lam @ np.abs(w))
    history = [F]
    for _ in range(cfg.max_iter):
        p = sigmoid(scores)
        g_w = Xs.T @ (p - z) / m
        g_b = float(np.mean(p - z))
        for _ in range(cfg.max_backtracks):
            w_new = soft_threshold(w - t * g_w, t * lam)
            b_new = b - t * g_b
            dw = w_new - w
            db = b_new - b
            scores_new = Xs @ w_new + b_new
            f_new = _smooth_loss(scores_new, z)
            quad = f + float(g_w @ dw) + g_b * db \
                + (float(dw @ dw) + db * db) / (2.0 * t)
            if f_new <= quad + 1e-15:
                break
            t *= cfg.backtrack
        F_new = f_new + float(lam @ np.abs(w_new))
        w, b, scores, f = w_new, b_new, scores_new, f_new
        history.append(F_new)
        decrease = F - F_new
        F = F_new
        if decrease < cfg.rel_tol * max(1e-12, abs(history[-2])):
            break
        t *= cfg.step_growth
    return w, b, history


@dataclass
class SubsetModel:
    """One-vs-all sparse logistic model for prefixes of length j."""

    j: int
    class_alphabet: tuple
    weights: np.ndarray        # (n_classes, 24)
    intercepts: np.ndarray     # (n_classes,)
    feature_mean: np.ndarray   # (24,)
    feature_std: np.ndarray    # (24,) as computed; constants flagged below
    constant_mask: np.ndarray  # (24,) bool, True where the feature was constant
    lam: np.ndarray            # (24,) effective l1 penalties
    objective_history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.class_alphabet = tuple(self.class_alphabet)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.intercepts = np.asarray(self.intercepts, dtype=np.float64)

    @property
    def n_classes(self) -> int:
        return len(self.class_alphabet)

    @property
    def selected_features(self):
        """0-based feature columns with a nonzero weight in any class."""
        return sorted(int(i) for i in np.flatnonzero(np.any(self.weights != 0.0, axis=0)))

    def standardize(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        scale = np.where(self.constant_mask, 1.0, self.feature_std)
        return (X - self.feature_mean) / scale

    def predict_proba(self, rows) -> np.ndarray:
        """Class probabilities: per-class sigmoid scores normalized to sum 1."""
        X = np.asarray(rows, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if not np.all(np.isfinite(X)):
            raise ValidationError("feature rows must be finite")
        Xs = self.standardize(X)
        scores = Xs @ self.weights.T + self.intercepts
        s = sigmoid(scores)
        probs = s / np.sum(s, axis=1, keepdims=True)
        return probs[0] if single else probs

    def predict(self, rows) -> np.ndarray:
        probs = self.predict_proba(rows)
        if probs.ndim == 1:
            return int(np.argmax(probs))
        return np.argmax(probs, axis=1)


def train_subset(X, y, class_alphabet, cost_profile: FeatureCostProfile = None,
                 lambda0: float = 0.01, solver: SolverConfig = None,
                 j: int = 0) -> SubsetModel:
    """Fit the one-vs-all model on a 24-column design matrix.

    y holds integer class indices into class_alphabet; every class needs at
    least 2 rows.  Features are z-scored from X; constant features are
    flagged and their weights stay 0.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValidationError("X and y must be aligned")
    if not np.all(np.isfinite(X)):
        raise ValidationError("X must be finite")
    if lambda0 < 0 or not np.isfinite(lambda0):
        raise ValidationError(f"lambda0 must be >= 0, got {lambda0}")
    alphabet = tuple(class_alphabet)
    n_classes = len(alphabet)
    if n_classes < 2:
        raise ValidationError("need at least 2 classes")
    counts = np.bincount(y, minlength=n_classes)
    if np.any(counts < 2):
        short = [alphabet[i] for i in np.flatnonzero(counts < 2)]
        raise ValidationError(f"classes with fewer than 2 rows: {short}")
    cost_profile = cost_profile or default_cost_profile()
    solver = solver or SolverConfig()

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = std == 0.0
    Xs = (X - mean) / np.where(constant, 1.0, std)

    costs = cost_profile.cost_vector()
    lam = lambda0 * costs / costs.mean()

    W = np.zeros((n_classes, X.shape[1]))
    B = np.zeros(n_classes)
    histories = []
    for ci in range(n_classes):
        z = (y == ci).astype(np.float64)
        w, b, hist = _fit_binary(Xs, z, lam, solver)
        W[ci] = w
        B[ci] = b
        histories.append(hist)
    return SubsetModel(j=j, class_alphabet=alphabet, weights=W, intercepts=B,
                       feature_mean=mean, feature_std=std, constant_mask=constant,
                       lam=lam, objective_history=histories)


def expected_train_cost(model: SubsetModel, X, y) -> np.ndarray:
    """Per-row expected misclassification cost 1 - P(true class | row)."""
    y = np.asarray(y)
    if np.any(y < 0) or np.any(y >= model.n_classes):
        raise ValidationError("labels outside the model's class range")
    probs = model.predict_proba(np.asarray(X, dtype=np.float64))
    if probs.ndim == 1:
        probs = probs[None, :]
    return 1.0 - probs[np.arange(y.size), y]


# ---------------------------------------------------------------------------
# Metrics

@dataclass
class Metrics:
    """Confusion matrix (rows = true, cols = predicted) with derived scores."""

    class_alphabet: tuple
    confusion: np.ndarray
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f_measure: np.ndarray

    @classmethod
    def from_predictions(cls, y_true, y_pred, class_alphabet):
        alphabet = tuple(class_alphabet)
        k = len(alphabet)
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        if y_true.shape != y_pred.shape or y_true.size == 0:
            raise ValidationError("predictions and labels must align and be non-empty")
        if np.any((y_true < 0) | (y_true >= k)) or np.any((y_pred < 0) | (y_pred >= k)):
            raise ValidationError("labels outside the class alphabet")
        conf = np.zeros((k, k), dtype=np.int64)
        np.add.at(conf, (y_true, y_pred), 1)
        diag = np.diag(conf).astype(np.float64)
        col = conf.sum(axis=0)
        row = conf.sum(axis=1)
        precision = np.divide(diag, col, out=np.zeros(k), where=col > 0)
        recall = np.divide(diag, row, out=np.zeros(k), where=row > 0)
        pr = precision + recall
        f = np.divide(2 * precision * recall, pr, out=np.zeros(k), where=pr > 0)
        return cls(alphabet, conf, float(diag.sum() / conf.sum()),
                   precision, recall, f)


# ---------------------------------------------------------------------------
# Cascade over a prefix-length grid

@dataclass
class CascadeModel:
    """Per-grid-point models plus everything the detector needs at run time."""

    class_alphabet: tuple
    n: int
    grid: tuple
    subsets: dict                 # j -> SubsetModel
    expected_cost: dict           # j -> (m,) expected misclassification cost
    train_matrix: dict            # j -> (m, 24) standardized training features
    train_labels: np.ndarray      # (m,) class indices
    arrival_rates: dict           # label -> exponential rate (1/s)
    arrival_counts: dict          # label -> pooled sample count

    def __post_init__(self):
        self.class_alphabet = tuple(self.class_alphabet)
        self.grid = tuple(int(j) for j in self.grid)

    @property
    def m(self) -> int:
        return int(self.train_labels.size)

    def nearest_grid_j(self, k: int) -> int:
        """Largest trained grid point <= k."""
        if k < self.grid[0]:
            raise ValidationError(f"k={k} is below the first grid point {self.grid[0]}")
        candidates = [j for j in self.grid if j <= k]
        return candidates[-1]


def _grid_from_spec(grid, n):
    grid = tuple(int(j) for j in grid)
    if not grid:
        raise ValidationError("grid must be non-empty")
    if any(grid[i] >= grid[i + 1] for i in range(len(grid) - 1)):
        raise ValidationError("grid must be strictly increasing")
    if grid[0] < J_MIN or grid[-1] > n:
        raise ValidationError(f"grid must lie within [{J_MIN}, {n}]")
    return grid


def train_cascade(dataset, grid, cost_profile: FeatureCostProfile = None,
                  lambda0: float = 0.01, solver: SolverConfig = None,
                  seed: int = 0, threads: int = 1) -> CascadeModel:
    """Train one SubsetModel per grid point and assemble the cascade."""
    grid = _grid_from_spec(grid, dataset.n)
    cost_profile = cost_profile or default_cost_profile()
    solver = solver or SolverConfig()
    y = dataset.labels_index()

    def fit_one(j):
        X, _ = design_matrix(dataset, j)
        model = train_subset(X, y, dataset.class_alphabet, cost_profile,
                             lambda0, solver, j=j)
        E = expected_train_cost(model, X, y)
        return j, model, E, model.standardize(X)

    results = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for j, model, E, Xs in pool.map(fit_one, grid):
                results[j] = (model, E, Xs)
    else:
        for j in grid:
            j, model, E, Xs = fit_one(j)
            results[j] = (model, E, Xs)

    rates = arrival.class_rates(dataset)
    return CascadeModel(
        class_alphabet=dataset.class_alphabet,
        n=dataset.n,
        grid=grid,
        subsets={j: results[j][0] for j in grid},
        expected_cost={j: results[j][1] for j in grid},
        train_matrix={j: results[j][2] for j in grid},
        train_labels=y.copy(),
        arrival_rates=dict(rates.rates),
        arrival_counts=dict(rates.counts),
    )


def evaluate(model_or_cascade, dataset, j: int = None) -> Metrics:
    """Accuracy, per-class precision/recall/F, and confusion at one grid point."""
    if isinstance(model_or_cascade, CascadeModel):
        cascade = model_or_cascade
        if j is None or j not in cascade.subsets:
            raise ValidationError(f"j={j} is not a trained grid point")
        model = cascade.subsets[j]
    else:
        model = model_or_cascade
        j = model.j
    if tuple(dataset.class_alphabet) != tuple(model.class_alphabet):
        raise ValidationError("dataset class alphabet differs from the model's")
    X, y = design_matrix(dataset, j)
    pred = model.predict(X)
    return Metrics.from_predictions(y, pred, model.class_alphabet)


def select_lambda0(dataset, j: int, cost_profile: FeatureCostProfile = None,
                   candidates=LAMBDA0_GRID, solver: SolverConfig = None,
                   seed: int = 0, val_fraction: float = 0.2) -> float:
    """Pick lambda0 by validation accuracy at one grid point.

    Ties prefer the larger lambda0 (cheaper feature set).
    """
    from .traffic import split_dataset
    train, val = split_dataset(dataset, [1.0 - val_fraction, val_fraction], seed)
    Xt, yt = design_matrix(train, j)
    Xv, yv = design_matrix(val, j)
    best_lam, best_acc = None, -1.0
    for lam0 in candidates:
        model = train_subset(Xt, yt, dataset.class_alphabet, cost_profile,
                             lam0, solver, j=j)
        acc = float(np.mean(model.predict(Xv) == yv))
        if acc > best_acc or (acc == best_acc and best_lam is not None
                              and lam0 > best_lam):
            best_acc, best_lam = acc, lam0
    return float(best_lam)


# ---------------------------------------------------------------------------
# Serialization

def _subset_to_dict(sm: SubsetModel) -> dict:
    return {
        "j": sm.j,
        "class_alphabet": list(sm.class_alphabet),
        "weights": sm.weights.tolist(),
        "intercepts": sm.intercepts.tolist(),
        "feature_mean": sm.feature_mean.tolist(),
        "feature_std": sm.feature_std.tolist(),
        "constant_mask": [bool(v) for v in sm.constant_mask],
        "lam": sm.lam.tolist(),
    }


def _subset_from_dict(doc: dict) -> SubsetModel:
    return SubsetModel(
        j=int(doc["j"]),
        class_alphabet=tuple(doc["class_alphabet"]),
        weights=np.asarray(doc["weights"], dtype=np.float64),
        intercepts=np.asarray(doc["intercepts"], dtype=np.float64),
        feature_mean=np.asarray(doc["feature_mean"], dtype=np.float64),
        feature_std=np.asarray(doc["feature_std"], dtype=np.float64),
        constant_mask=np.asarray(doc["constant_mask"], dtype=bool),
        lam=np.asarray(doc["lam"], dtype=np.float64),
    )


def cascade_to_dict(cascade: CascadeModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "cascade",
        "class_alphabet": list(cascade.class_alphabet),
        "n": cascade.n,
        "grid": list(cascade.grid),
        "train_labels": [int(v) for v in cascade.train_labels],
        "arrival_rates": {k: float(v) for k, v in cascade.arrival_rates.items()},
        "arrival_counts": {k: int(v) for k, v in cascade.arrival_counts.items()},
        "subsets": {str(j): _subset_to_dict(cascade.subsets[j]) for j in cascade.grid},
        "expected_cost": {str(j): cascade.expected_cost[j].tolist()
                          for j in cascade.grid},
        "train_matrix": {str(j): cascade.train_matrix[j].tolist()
                         for j in cascade.grid},
    }


def cascade_from_dict(doc: dict) -> CascadeModel:
    grid = tuple(int(j) for j in doc["grid"])
    return CascadeModel(
        class_alphabet=tuple(doc["class_alphabet"]),
        n=int(doc["n"]),
        grid=grid,
        subsets={j: _subset_from_dict(doc["subsets"][str(j)]) for j in grid},
        expected_cost={j: np.asarray(doc["expected_cost"][str(j)], dtype=np.float64)
                       for j in grid},
        train_matrix={j: np.asarray(doc["train_matrix"][str(j)], dtype=np.float64)
                      for j in grid},
        train_labels=np.asarray(doc["train_labels"], dtype=np.int64),
        arrival_rates={k: float(v) for k, v in doc["arrival_rates"].items()},
        arrival_counts={k: int(v) for k, v in doc["arrival_counts"].items()},
    )


def save_cascade(cascade: CascadeModel, path):
    """Write the cascade as JSON; floats round-trip exactly by repr."""
    atomic_write_text(path, json.dumps(cascade_to_dict(cascade)))


def load_cascade(path) -> CascadeModel:
    doc = _read_json(path, "model")
    if doc.get("kind") != "cascade":
        raise ArtifactError(f"{path} is not a cascade model file")
    try:
        return cascade_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"corrupt model file {path}: {exc}") from exc
