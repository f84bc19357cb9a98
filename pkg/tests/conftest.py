"""Shared fixtures: small synthetic datasets and trained cascades."""

import numpy as np
import pytest

from earlyflow.learner import train_cascade
from earlyflow.traffic import ClassGeneratorSpec, generate_synthetic


def gauss(mean, std):
    return {"kind": "gaussian_mixture", "means": [float(mean)],
            "stds": [float(std)], "weights": [1.0]}


def mixture(means, stds, weights):
    return {"kind": "gaussian_mixture", "means": list(means),
            "stds": list(stds), "weights": list(weights)}


def categorical(values, weights):
    return {"kind": "categorical", "values": list(values),
            "weights": list(weights)}


@pytest.fixture(scope="session")
def two_class_ds():
    """Cleanly separable 2-class dataset, n = 40."""
    specs = [
        ClassGeneratorSpec("slow-small", gauss(200, 40), 60.0),
        ClassGeneratorSpec("fast-large", gauss(900, 80), 200.0),
    ]
    return generate_synthetic(specs, 30, 40, seed=11)


@pytest.fixture(scope="session")
def two_class_cascade(two_class_ds):
    return train_cascade(two_class_ds, [5, 10, 20, 40], lambda0=0.01)


@pytest.fixture(scope="session")
def three_class_ds():
    """3 classes, m = 30 (10 per class), n = 20."""
    specs = [
        ClassGeneratorSpec("one", gauss(150, 30), 50.0),
        ClassGeneratorSpec("two", gauss(500, 60), 120.0),
        ClassGeneratorSpec("three", gauss(1100, 90), 300.0),
    ]
    return generate_synthetic(specs, 10, 20, seed=7)


@pytest.fixture(scope="session")
def three_class_cascade(three_class_ds):
    return train_cascade(three_class_ds, [5, 10, 15, 20], lambda0=0.01)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
