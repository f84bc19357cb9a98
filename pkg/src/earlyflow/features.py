"""Statistical features over packet sizes and inter-arrival times.

Twelve summary statistics are computed per stream.  A flow prefix yields a
24-entry feature row: entries 1..12 summarize packet sizes, entries 13..24
apply the same statistics to inter-arrival times.  Each statistic also has a
per-call computation cost (microseconds) used to weight sparsity penalties
during training.
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

J_MIN = 5

# Statistic names in feature order.  The 24-entry row is this list applied to
# sizes, then to inter-arrival times.
FEATURE_FUNCTION_NAMES = (
    "mean", "median", "medad", "std", "skewness", "kurtosis",
    "max", "min", "ms", "rms", "ps", "mad",
)

FEATURE_NAMES_24 = tuple(
    f"{fn}_{stream}" for stream in ("size", "iat") for fn in FEATURE_FUNCTION_NAMES
)

# Reference per-call computation times in microseconds, measured on 100-sample
# inputs.  Used as the default cost profile for cost-weighted penalties.
REFERENCE_COSTS_US = {
    "mean": 0.672,
    "median": 4.365,
    "medad": 8.346,
    "std": 1.608,
    "skewness": 14.917,
    "kurtosis": 14.095,
    "max": 0.464,
    "min": 0.652,
    "ms": 1.147,
    "rms": 1.273,
    "ps": 8.011,
    "mad": 2.531,
}

# Statistics that need at least two samples (sample standard deviation uses
# an N-1 denominator).
_NEEDS_TWO = {"std", "skewness", "kurtosis", "ps"}


@dataclass(frozen=True)
class FeatureId:
    """One of the 24 feature slots: a statistic applied to one stream."""

    index: int            # 1..24
    function: str         # one of FEATURE_FUNCTION_NAMES
    stream: str           # "size" or "iat"

    @property
    def name(self) -> str:
        return f"{self.function}_{self.stream}"


def feature_id(index: int) -> FeatureId:
    """Map a 1-based feature index to its FeatureId."""
    if not 1 <= index <= 24:
        raise ValidationError(f"feature index must be in 1..24, got {index}")
    fn = FEATURE_FUNCTION_NAMES[(index - 1) % 12]
    stream = "size" if index <= 12 else "iat"
    return FeatureId(index, fn, stream)


def _validate_samples(name, x):
    if x.ndim != 1 or x.size == 0:
        raise ValidationError(f"{name}: samples must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"{name}: samples must be finite")


def compute_feature(function: str, samples) -> float:
    """Compute a single named statistic over a 1-d sample sequence.

    Degenerate inputs (zero standard deviation) return 0.0 for the
    standardized-moment statistics instead of dividing by zero.
    """
    if function not in FEATURE_FUNCTION_NAMES:
        raise ValidationError(f"unknown feature function {function!r}")
    x = np.asarray(samples, dtype=np.float64)
    _validate_samples(function, x)
    if function in _NEEDS_TWO and x.size < 2:
        raise ValidationError(f"{function} needs at least 2 samples")

    if function == "mean":
        return float(np.mean(x))
    if function == "median":
        return float(np.median(x))
    if function == "medad":
        return float(np.median(np.abs(x - np.median(x))))
    if function == "std":
        return float(np.std(x, ddof=1))
    if function == "max":
        return float(np.max(x))
    if function == "min":
        return float(np.min(x))
    if function == "ms":
        return float(np.mean(x ** 2))
    if function == "rms":
        return float(np.sqrt(np.mean(x ** 2)))
    if function == "mad":
        return float(np.mean(np.abs(x - np.mean(x))))

    # std-normalized statistics; 0.0 when the spread is zero
    sd = np.std(x, ddof=1)
    if sd == 0.0:
        return 0.0
    if function == "skewness":
        return float(np.mean(((x - np.mean(x)) / sd) ** 3))
    if function == "kurtosis":
        return float(np.mean(((x - np.mean(x)) / sd) ** 4))
    # ps: nonparametric skew, 3 * (mean - median) / std
    return float(3.0 * (np.mean(x) - np.median(x)) / sd)


def _feature_block(samples: np.ndarray) -> np.ndarray:
    """All 12 statistics for each row of a (rows, width) sample matrix."""
    x = np.ascontiguousarray(samples, dtype=np.float64)
    mean = x.mean(axis=1)
    med = np.median(x, axis=1)
    medad = np.median(np.abs(x - med[:, None]), axis=1)
    sd = x.std(axis=1, ddof=1)
    ok = sd > 0.0
    safe = np.where(ok, sd, 1.0)
    z = (x - mean[:, None]) / safe[:, None]
    skew = np.where(ok, (z ** 3).mean(axis=1), 0.0)
    kurt = np.where(ok, (z ** 4).mean(axis=1), 0.0)
    ms = (x ** 2).mean(axis=1)
    ps = np.where(ok, 3.0 * (mean - med) / safe, 0.0)
    mad = np.abs(x - mean[:, None]).mean(axis=1)
    return np.column_stack([
        mean, med, medad, sd, skew, kurt,
        x.max(axis=1), x.min(axis=1), ms, np.sqrt(ms), ps, mad,
    ])


def feature_matrix(sizes: np.ndarray, inter_arrivals: np.ndarray) -> np.ndarray:
    """24-column feature matrix for stacked flows.

    Parameters
    ----------
    sizes : (rows, j) array of packet sizes, j >= J_MIN.
    inter_arrivals : (rows, j-1) array of inter-arrival times in seconds.
    """
    s = np.asarray(sizes, dtype=np.float64)
    t = np.asarray(inter_arrivals, dtype=np.float64)
    if s.ndim != 2 or t.ndim != 2 or s.shape[0] != t.shape[0]:
        raise ValidationError("sizes and inter_arrivals must be aligned 2-d arrays")
    if s.shape[1] < J_MIN:
        raise ValidationError(f"need at least {J_MIN} packets per flow")
    if t.shape[1] != s.shape[1] - 1:
        raise ValidationError("inter_arrivals must have one fewer column than sizes")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(t))):
        raise ValidationError("feature inputs must be finite")
    return np.hstack([_feature_block(s), _feature_block(t)])


def feature_row(trace) -> np.ndarray:
    """24-entry feature row for a single flow prefix (a Trace)."""
    return feature_matrix(
        np.asarray(trace.sizes)[None, :],
        np.asarray(trace.inter_arrivals)[None, :],
    )[0]


def feature_row_subset(sizes, inter_arrivals, selected) -> np.ndarray:
    """Feature row computing only the selected 0-based feature columns.

    Unselected entries are 0.  Each statistic is computed independently so
    the work done tracks the per-feature cost model.
    """
    row = np.zeros(24)
    s = np.asarray(sizes, dtype=np.float64)
    t = np.asarray(inter_arrivals, dtype=np.float64)
    for idx in selected:
        fid = feature_id(int(idx) + 1)
        stream = s if fid.stream == "size" else t
        row[idx] = compute_feature(fid.function, stream)
    return row


def design_matrix(dataset, j: int):
    """Feature matrix and integer labels for every trace prefix of length j.

    Returns
    -------
    X : (m, 24) float array, one row per trace in dataset order.
    y : (m,) int array of class indices into dataset.class_alphabet.
    """
    if not J_MIN <= j <= dataset.n:
        raise ValidationError(f"j must be in [{J_MIN}, {dataset.n}], got {j}")
    X = feature_matrix(dataset.sizes_matrix()[:, :j],
                       dataset.iat_matrix()[:, : j - 1])
    return X, dataset.labels_index()


@dataclass(frozen=True)
class FeatureCostProfile:
    """Per-statistic computation times in microseconds."""

    times_us: dict = field(default_factory=lambda: dict(REFERENCE_COSTS_US))
    sample_size: int = 100

    def __post_init__(self):
        missing = set(FEATURE_FUNCTION_NAMES) - set(self.times_us)
        if missing:
            raise ValidationError(f"cost profile missing entries: {sorted(missing)}")
        for fn, v in self.times_us.items():
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"cost for {fn} must be positive, got {v}")

    def cost_vector(self) -> np.ndarray:
        """Costs aligned with the 24 feature columns (size block, iat block)."""
        base = np.array([self.times_us[fn] for fn in FEATURE_FUNCTION_NAMES])
        return np.concatenate([base, base])


def default_cost_profile() -> FeatureCostProfile:
    """The shipped reference cost profile."""
    return FeatureCostProfile()


def profile_feature_costs(reps: int, sample_size: int = 100,
                          seed: int = 0) -> FeatureCostProfile:
    """Measure per-statistic computation time on this machine.

    Uses a median-of-means estimate over 10 groups of calls; reps is the
    total number of timed calls per statistic and must be at least 100.
    """
    if reps < 100:
        raise ValidationError(f"reps must be >= 100, got {reps}")
    rng = np.random.default_rng(seed)
    samples = rng.uniform(1.0, 1500.0, size=sample_size)
    groups = 10
    per_group = max(1, reps // groups)
    times = {}
    for fn in FEATURE_FUNCTION_NAMES:
        means = []
        for _ in range(groups):
            t0 = time.perf_counter_ns()
            for _ in range(per_group):
                compute_feature(fn, samples)
            dt = time.perf_counter_ns() - t0
            means.append(dt / per_group / 1e3)  # ns -> us
        times[fn] = float(np.median(means))
    return FeatureCostProfile(times_us=times, sample_size=sample_size)


def write_feature_csv(path, X, labels=None):
    """Write a design matrix as CSV with the fixed 24-name header.

    When labels are given, a leading "label" column is added.
    """
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 24:
        raise ValidationError("X must be a (rows, 24) matrix")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if labels is None:
            w.writerow(FEATURE_NAMES_24)
            for row in X:
                w.writerow([repr(float(v)) for v in row])
        else:
            if len(labels) != X.shape[0]:
                raise ValidationError("labels length must match X rows")
            w.writerow(("label",) + FEATURE_NAMES_24)
            for lab, row in zip(labels, X):
                w.writerow([lab] + [repr(float(v)) for v in row])


def write_cost_profile_csv(path, profile: FeatureCostProfile):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["function", "mean_us"])
        for fn in FEATURE_FUNCTION_NAMES:
            w.writerow([fn, repr(float(profile.times_us[fn]))])
