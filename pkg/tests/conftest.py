import numpy as np
import pytest

from locuskit.estimators import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def line():
    """Five equally spaced points on the real line"""
    return np.arange(5.0).reshape(-1, 1)


@pytest.fixture
def three_blobs():
    """N=300, blob std 0.4, centers at least 4 apart, with true labels"""
    from sklearn.datasets import make_blobs

    centers = np.array([[0.0, 0.0], [5.0, 0.0], [2.5, 4.5]])
    X, labels = make_blobs(
        n_samples=300, centers=centers, cluster_std=0.4, random_state=7
    )
    return Dataset(X, labels=labels)


@pytest.fixture
def noisy_sine():
    x = np.linspace(0.0, 2.0 * np.pi, 100)
    noise = 0.1 * np.random.default_rng(7).standard_normal(x.size)
    return Dataset(x, y=np.sin(x) + noise)


@pytest.fixture
def hadamard16():
    from scipy.linalg import hadamard

    return hadamard(16).astype(float)


@pytest.fixture
def write_config(tmp_path):
    """Writes a JSON run configuration and returns its path"""
    import json

    def write(payload, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    return write
