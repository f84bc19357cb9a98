"""Feature statistics against a plain-Python oracle, plus structural checks."""

import csv
import math

import numpy as np
import pytest

from earlyflow.errors import ValidationError
from earlyflow.features import (
    FEATURE_FUNCTION_NAMES,
    FEATURE_NAMES_24,
    REFERENCE_COSTS_US,
    FeatureCostProfile,
    compute_feature,
    default_cost_profile,
    design_matrix,
    feature_id,
    feature_matrix,
    feature_row,
    feature_row_subset,
    profile_feature_costs,
    write_feature_csv,
)
from earlyflow.traffic import Trace, make_prefix


# ---------------------------------------------------------------------------
# Independent oracle: direct loop translations of the formulas.

def o_mean(xs):
    return sum(xs) / len(xs)


def o_median(xs):
    s = sorted(xs)
    n = len(s)
    mid = n // 2
    return float(s[mid]) if n % 2 else (s[mid - 1] + s[mid]) / 2.0


def o_medad(xs):
    med = o_median(xs)
    return o_median([abs(x - med) for x in xs])


def o_std(xs):
    mu = o_mean(xs)
    return math.sqrt(sum((x - mu) ** 2 for x in xs) / (len(xs) - 1))


def o_skewness(xs):
    sd = o_std(xs)
    if sd == 0.0:
        return 0.0
    mu = o_mean(xs)
    return sum(((x - mu) / sd) ** 3 for x in xs) / len(xs)


def o_kurtosis(xs):
    sd = o_std(xs)
    if sd == 0.0:
        return 0.0
    mu = o_mean(xs)
    return sum(((x - mu) / sd) ** 4 for x in xs) / len(xs)


def o_ms(xs):
    return sum(x * x for x in xs) / len(xs)


def o_ps(xs):
    sd = o_std(xs)
    if sd == 0.0:
        return 0.0
    return 3.0 * (o_mean(xs) - o_median(xs)) / sd


def o_mad(xs):
    mu = o_mean(xs)
    return sum(abs(x - mu) for x in xs) / len(xs)


ORACLES = {
    "mean": o_mean,
    "median": o_median,
    "medad": o_medad,
    "std": o_std,
    "skewness": o_skewness,
    "kurtosis": o_kurtosis,
    "max": max,
    "min": min,
    "ms": o_ms,
    "rms": lambda xs: math.sqrt(o_ms(xs)),
    "ps": o_ps,
    "mad": o_mad,
}


def oracle_row(sizes, taus):
    return np.array([ORACLES[fn](list(sizes)) for fn in FEATURE_FUNCTION_NAMES]
                    + [ORACLES[fn](list(taus)) for fn in FEATURE_FUNCTION_NAMES])


# ---------------------------------------------------------------------------

def test_hand_checked_values():
    assert compute_feature("mean", [2, 4, 6]) == 4.0
    assert compute_feature("medad", [1, 2, 3, 4, 5]) == 1.0
    assert compute_feature("skewness", [3.0, 3.0, 3.0]) == 0.0
    # 5-point kurtosis: fourth standardized moment with 1/N outer weight
    assert compute_feature("kurtosis", [1, 2, 3, 4, 5]) == pytest.approx(
        1.088, rel=1e-12)
    assert compute_feature("kurtosis", [1, 2, 3, 4, 5]) == pytest.approx(
        o_kurtosis([1, 2, 3, 4, 5]), rel=1e-12)


def test_every_function_matches_oracle(rng):
    for _ in range(200):
        n = int(rng.integers(2, 120))
        xs = rng.uniform(0.5, 2000.0, size=n)
        for fn in FEATURE_FUNCTION_NAMES:
            got = compute_feature(fn, xs)
            want = ORACLES[fn](list(xs))
            assert got == pytest.approx(want, rel=1e-10, abs=1e-12), fn


def test_degenerate_spread_returns_zero_not_nan():
    const = [7.0] * 9
    for fn in ("skewness", "kurtosis", "ps"):
        assert compute_feature(fn, const) == 0.0
    assert compute_feature("std", const) == 0.0


def test_validation_errors():
    with pytest.raises(ValidationError):
        compute_feature("mean", [])
    with pytest.raises(ValidationError):
        compute_feature("std", [1.0])
    with pytest.raises(ValidationError):
        compute_feature("mean", [1.0, float("nan")])
    with pytest.raises(ValidationError):
        compute_feature("unheard-of", [1.0, 2.0])


def test_constant_prefix_feature_row():
    tr = Trace("x", [700] * 6, [0.004] * 5)
    row = feature_row(tr)
    names = dict(zip(FEATURE_NAMES_24, row))
    assert names["mean_size"] == 700.0
    assert names["median_size"] == 700.0
    assert names["std_size"] == 0.0
    assert names["skewness_size"] == 0.0
    assert names["kurtosis_size"] == 0.0
    assert names["max_size"] == 700.0
    assert names["min_size"] == 700.0
    assert names["ms_size"] == 700.0 ** 2
    assert names["rms_size"] == 700.0
    assert names["ps_size"] == 0.0
    assert names["mad_size"] == 0.0
    assert names["mean_iat"] == pytest.approx(0.004, rel=1e-12)
    assert names["std_iat"] == 0.0


def test_feature_row_composition(rng):
    sizes = rng.integers(40, 1500, size=17)
    taus = rng.exponential(0.01, size=16)
    tr = Trace(None, sizes, taus)
    row = feature_row(tr)
    for i in range(24):
        fid = feature_id(i + 1)
        samples = sizes if fid.stream == "size" else taus
        assert row[i] == pytest.approx(
            compute_feature(fid.function, samples), rel=1e-12), fid.name


def test_feature_row_random_prefixes_vs_oracle(rng):
    for _ in range(300):
        n = int(rng.integers(5, 80))
        sizes = rng.integers(1, 1500, size=n)
        taus = rng.exponential(0.005, size=n - 1)
        row = feature_row(Trace(None, sizes, taus))
        want = oracle_row(sizes, taus)
        np.testing.assert_allclose(row, want, rtol=1e-10, atol=1e-12)


def test_permutation_invariance(rng):
    xs = rng.uniform(1, 900, size=31)
    perm = rng.permutation(xs)
    for fn in FEATURE_FUNCTION_NAMES:
        assert compute_feature(fn, xs) == pytest.approx(
            compute_feature(fn, perm), rel=1e-9), fn


def test_scale_behavior(rng):
    xs = rng.uniform(1, 900, size=25)
    c = 3.5
    linear = ("mean", "median", "medad", "std", "max", "min", "rms", "mad")
    invariant = ("skewness", "kurtosis", "ps")
    for fn in linear:
        assert compute_feature(fn, c * xs) == pytest.approx(
            c * compute_feature(fn, xs), rel=1e-9), fn
    for fn in invariant:
        assert compute_feature(fn, c * xs) == pytest.approx(
            compute_feature(fn, xs), rel=1e-7, abs=1e-9), fn
    assert compute_feature("ms", c * xs) == pytest.approx(
        c * c * compute_feature("ms", xs), rel=1e-9)


def test_order_statistics_relations(rng):
    for _ in range(50):
        xs = rng.uniform(0.1, 2000, size=int(rng.integers(2, 60)))
        mn = compute_feature("min", xs)
        mx = compute_feature("max", xs)
        med = compute_feature("median", xs)
        assert mn <= med <= mx
        assert compute_feature("medad", xs) <= mx - mn
        assert compute_feature("rms", xs) ** 2 == pytest.approx(
            compute_feature("ms", xs), rel=1e-12)


def test_feature_matrix_matches_rows(rng):
    sizes = rng.integers(1, 1200, size=(9, 15))
    taus = rng.exponential(0.01, size=(9, 14))
    M = feature_matrix(sizes, taus)
    assert M.shape == (9, 24)
    assert np.all(np.isfinite(M))
    for r in range(9):
        np.testing.assert_array_equal(
            M[r], feature_row(Trace(None, sizes[r], taus[r])))


def test_design_matrix_prefix_consistency(three_class_ds):
    ds = three_class_ds
    X10, y = design_matrix(ds, 10)
    assert X10.shape == (ds.m, 24)
    assert y.shape == (ds.m,)
    tr = ds.traces[4]
    np.testing.assert_array_equal(X10[4], feature_row(make_prefix(tr, 10)))
    Xn, _ = design_matrix(ds, ds.n)
    np.testing.assert_array_equal(Xn[4], feature_row(tr))
    with pytest.raises(ValidationError):
        design_matrix(ds, 4)
    with pytest.raises(ValidationError):
        design_matrix(ds, ds.n + 1)


def test_feature_row_subset(rng):
    sizes = rng.integers(1, 900, size=12)
    taus = rng.exponential(0.01, size=11)
    full = feature_row(Trace(None, sizes, taus))
    sel = [0, 3, 13, 23]
    row = feature_row_subset(sizes, taus, sel)
    for i in range(24):
        if i in sel:
            assert row[i] == pytest.approx(full[i], rel=1e-12)
        else:
            assert row[i] == 0.0


def test_reference_cost_profile():
    prof = default_cost_profile()
    assert prof.times_us["skewness"] == 14.917
    assert prof.times_us["max"] == 0.464
    vec = prof.cost_vector()
    assert vec.shape == (24,)
    assert vec[2] == vec[14] == REFERENCE_COSTS_US["medad"]
    with pytest.raises(ValidationError):
        FeatureCostProfile(times_us={"mean": 1.0})
    with pytest.raises(ValidationError):
        FeatureCostProfile(times_us={**REFERENCE_COSTS_US, "mean": -1.0})


def test_profiling_runs_and_validates():
    with pytest.raises(ValidationError):
        profile_feature_costs(reps=99)
    prof = profile_feature_costs(reps=100, sample_size=50, seed=1)
    assert set(prof.times_us) == set(FEATURE_FUNCTION_NAMES)
    assert all(v > 0 for v in prof.times_us.values())
    # simple selections cost less than the heavy standardized moments
    assert prof.times_us["max"] < prof.times_us["skewness"]


def test_feature_csv_header(tmp_path, rng):
    X = rng.uniform(0, 1, size=(3, 24))
    path = tmp_path / "feat.csv"
    write_feature_csv(path, X)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == FEATURE_NAMES_24
    assert rows[0][0] == "mean_size" and rows[0][-1] == "mad_iat"
    back = np.array([[float(v) for v in r] for r in rows[1:]])
    np.testing.assert_array_equal(back, X)
    write_feature_csv(path, X, labels=["a", "b", "c"])
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "label" and len(rows[0]) == 25
