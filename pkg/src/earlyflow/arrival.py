"""Exponential inter-arrival modeling: MLE, goodness of fit, forecast error.

Each traffic class gets a single exponential rate fitted by maximum
likelihood over the pooled inter-arrival samples of its traces.  The fitted
mean 1/rate serves as the deterministic prediction for future inter-arrival
times.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Zero gaps (timestamp collisions) are clamped to this floor in seconds.
ZERO_CLAMP_S = 1e-9

# Large-sample critical values: Kolmogorov-Smirnov at 5% is 1.36/sqrt(n);
# Cramer-von Mises at 5% is 0.461.
KS_CRITICAL_COEFF = 1.36
CVM_CRITICAL = 0.461


def fit_exponential_rate(taus) -> float:
    """Maximum-likelihood exponential rate: count / sum of samples.

    Zeros are clamped to ZERO_CLAMP_S before fitting; negative samples are
    rejected.
    """
    x = np.asarray(taus, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValidationError("need a non-empty 1-d sample of inter-arrivals")
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise ValidationError("inter-arrivals must be finite and >= 0")
    x = np.maximum(x, ZERO_CLAMP_S)
    return float(x.size / np.sum(x))


def exponential_log_likelihood(taus, rate: float) -> float:
    """Log-likelihood of clamped samples under an exponential rate."""
    if not (np.isfinite(rate) and rate > 0):
        raise ValidationError(f"rate must be positive, got {rate}")
    x = np.maximum(np.asarray(taus, dtype=np.float64), ZERO_CLAMP_S)
    return float(x.size * np.log(rate) - rate * np.sum(x))


@dataclass(frozen=True)
class ArrivalModel:
    """Per-class exponential rates with pooled sample counts."""

    rates: dict
    counts: dict

    def mean_interval(self, label) -> float:
        return 1.0 / self.rates[label]


def class_rates(dataset) -> ArrivalModel:
    """Fit one exponential rate per class over pooled trace inter-arrivals."""
    y = dataset.labels_index()
    taus = dataset.iat_matrix()
    rates, counts = {}, {}
    for ci, label in enumerate(dataset.class_alphabet):
        pooled = taus[y == ci].ravel()
        if pooled.size == 0:
            raise ValidationError(f"class {label!r} has no inter-arrival samples")
        rates[label] = fit_exponential_rate(pooled)
        counts[label] = int(pooled.size)
    return ArrivalModel(rates, counts)


def _fitted_cdf(taus, rate):
    x = np.sort(np.asarray(taus, dtype=np.float64))
    if x.size == 0:
        raise ValidationError("need a non-empty sample")
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise ValidationError("inter-arrivals must be finite and >= 0")
    if not (np.isfinite(rate) and rate > 0):
        raise ValidationError(f"rate must be positive, got {rate}")
    return x, 1.0 - np.exp(-rate * x)


def ks_statistic(taus, rate: float) -> float:
    """Kolmogorov-Smirnov distance between the sample and Exp(rate).

    D = max over the sorted sample of max(i/n - F(x_i), F(x_i) - (i-1)/n).
    """
    x, F = _fitted_cdf(taus, rate)
    n = x.size
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - F, F - (i - 1) / n)))


def cvm_statistic(taus, rate: float) -> float:
    """Cramer-von Mises statistic between the sample and Exp(rate).

    omega^2 = 1/(12 n) + sum_i ((2i-1)/(2n) - F(x_i))^2.
    """
    x, F = _fitted_cdf(taus, rate)
    n = x.size
    i = np.arange(1, n + 1)
    return float(1.0 / (12.0 * n) + np.sum(((2 * i - 1) / (2.0 * n) - F) ** 2))


def mse_arrival(true_tail, predicted_tail, p: int, n: int) -> float:
    """Mean squared error of predicted inter-arrivals after packet p.

    Both tails cover the n - p remaining gaps of an n-packet flow, i.e. the
    intervals that close packets p+1 .. n.
    """
    if n <= p:
        raise ValidationError(f"need n > p, got n={n}, p={p}")
    t = np.asarray(true_tail, dtype=np.float64)
    q = np.asarray(predicted_tail, dtype=np.float64)
    if t.shape != (n - p,) or q.shape != (n - p,):
        raise ValidationError(
            f"tails must both have n - p = {n - p} entries, "
            f"got {t.shape} and {q.shape}")
    return float(np.mean((t - q) ** 2))


def write_gof_csv(path, dataset):
    """Per-class goodness-of-fit report.

    Columns: class, samples, rate_hz, ks, ks_critical, cvm, cvm_critical.
    """
    model = class_rates(dataset)
    y = dataset.labels_index()
    taus = dataset.iat_matrix()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "samples", "rate_hz", "ks", "ks_critical",
                    "cvm", "cvm_critical"])
        for ci, label in enumerate(dataset.class_alphabet):
            pooled = np.maximum(taus[y == ci].ravel(), ZERO_CLAMP_S)
            rate = model.rates[label]
            w.writerow([
                label, pooled.size, repr(rate),
                repr(ks_statistic(pooled, rate)),
                repr(float(KS_CRITICAL_COEFF / np.sqrt(pooled.size))),
                repr(cvm_statistic(pooled, rate)),
                repr(CVM_CRITICAL),
            ])
