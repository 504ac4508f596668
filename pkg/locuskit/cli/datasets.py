""" datasets v0.1
Seeded synthetic datasets and the fixtures bundled with the package
"""

# Imports
from importlib import resources

import numpy as np
from sklearn.datasets import make_blobs, make_swiss_roll

from locuskit.cli.io import ingest_csv
from locuskit.errors import InvalidParameter
from locuskit.estimators import Dataset
from locuskit.mylog import get_logger

logger = get_logger(__name__)

BLOB_CENTERS = np.array([[0.0, 0.0], [5.0, 0.0], [2.5, 4.5]])
MIXTURE_MEANS = (-2.0, 2.0)
BUNDLED = {
    "two-blobs": "two_blobs.csv",
    "toy-tokens": "toy_tokens.csv",
    "corpus": "corpus.txt",
}


def legacy_seed(seed):
    """sklearn generators take a 32-bit seed"""
    return int(seed) % (1 << 32)


def bundled(name):
    """Filesystem path of a bundled fixture"""
    try:
        filename = BUNDLED[name]
    except KeyError:
        raise InvalidParameter(f"no bundled fixture named {name!r}")
    return str(resources.files("locuskit") / "data" / filename)


def blobs(n, noise, seed, centers=BLOB_CENTERS):
    """Isotropic 2-D blobs with std ``noise`` around centers at least 4 apart"""
    X, labels = make_blobs(
        n_samples=int(n),
        centers=centers,
        cluster_std=noise,
        random_state=legacy_seed(seed),
    )
    return Dataset(X, labels=labels)


def swiss_roll(n, noise, seed):
    """Planar spiral (t cos t, t sin t); the roll parameter t is the target"""
    X, t = make_swiss_roll(
        n_samples=int(n), noise=noise, random_state=legacy_seed(seed)
    )
    return Dataset(X[:, [0, 2]], y=t)


def sine_curve(x):
    return np.sin(x)


def noisy_sine(n, noise, seed):
    x = np.linspace(0.0, 2.0 * np.pi, int(n))
    rng = np.random.default_rng(seed)
    return Dataset(x, y=sine_curve(x) + noise * rng.standard_normal(x.size))


def step_curve(t, n):
    """Piecewise constant 0/1 signal with four equal plateaus"""
    return (np.floor(4.0 * np.asarray(t) / n) % 2).astype(float)


def step_signal(n, noise, seed):
    t = np.arange(int(n), dtype=float)
    rng = np.random.default_rng(seed)
    return Dataset(t, y=step_curve(t, n) + noise * rng.standard_normal(t.size))


def mixture_1d(n, noise, seed):
    """Equal-weight mixture of N(-2, noise^2) and N(2, noise^2), stratified
    so each component gets half of the samples"""
    n = int(n)
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    X = np.take(MIXTURE_MEANS, labels) + noise * rng.standard_normal(n)
    return Dataset(X, labels=labels)


GENERATORS = {
    "blobs": blobs,
    "swiss-roll": swiss_roll,
    "noisy-sine": noisy_sine,
    "step-signal": step_signal,
    "mixture-1d": mixture_1d,
}


def generate(name, n, noise, seed):
    """(str, int, float, seed) -> Dataset"""
    if name == "two-blobs":
        return ingest_csv(bundled("two-blobs"), "features+label")
    if name not in GENERATORS:
        raise InvalidParameter(f"unknown dataset {name!r}")
    data = GENERATORS[name](n, noise, seed)
    logger.info(f"generated {name}: N={data.N}, p={data.p}")
    return data


def clean_target(name, data):
    """Noiseless target of a generated signal, None when there is none"""
    if name == "noisy-sine":
        return sine_curve(data.X[:, 0])
    if name == "step-signal":
        return step_curve(data.X[:, 0], data.N)
    return None
