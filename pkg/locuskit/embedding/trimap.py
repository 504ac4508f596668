""" trimap v0.1
Ternary MDS with the contrast kernel s12 / (s12 + s13)

Minimizes sum over triplets of c(i1, i2, i3) h(d^2(z1, z2) - d^2(z1, z3)) by
gradient descent; Z is centered and rescaled to ||Z||_F^2 = N q after every
step, otherwise the objective is unbounded below.
"""

# Imports
from itertools import permutations

import numpy as np
from scipy.spatial.distance import pdist

from locuskit.embedding.lle import EmbeddingResult
from locuskit.errors import InvalidParameter
from locuskit.kernel_core import Gaussian, Kernel, as_points
from locuskit.mylog import get_logger

logger = get_logger(__name__)

N_INLIERS = 10
N_OUTLIERS = 10
DEFAULT_BUDGET = 100_000


def _h(name):
    if name == "identity":
        return (lambda x: x), (lambda x: np.ones_like(x))
    if name == "log1p":
        return (lambda x: np.sign(x) * np.log1p(np.abs(x))), (
            lambda x: 1.0 / (1.0 + np.abs(x))
        )
    raise InvalidParameter(f"unknown increasing function {name!r}")


def similarity_matrix(X, s=None):
    """Pairwise similarities; defaults to a Gaussian at the median distance"""
    X = as_points(X)
    if s is None:
        dists = pdist(X)
        positive = dists[dists > 0]
        s = Gaussian(h=float(np.median(positive)) if positive.size else 1.0)
    if isinstance(s, Kernel):
        return s.matrix(X, X)
    return np.asarray(s(X, X), dtype=float)


def contrast(S, triplets):
    s12 = S[triplets[:, 0], triplets[:, 1]]
    s13 = S[triplets[:, 0], triplets[:, 2]]
    total = s12 + s13
    safe = np.where(total > 0, total, 1.0)
    return np.where(total > 0, s12 / safe, 0.5)


def sample_triplets(S, seed, budget=DEFAULT_BUDGET):
    """(N x N similarities, seed, int) -> int array (n, 3)

    Every ordered triple of distinct indices when N(N-1)(N-2) fits the budget.
    Otherwise each anchor draws inliers by similarity and outliers uniformly
    and pairs them, dropping inlier == outlier.
    """
    N = S.shape[0]
    if N < 3:
        raise InvalidParameter("triplet embedding needs at least 3 points")
    if N * (N - 1) * (N - 2) <= budget:
        return np.array(list(permutations(range(N), 3)), dtype=int)
    rng = np.random.default_rng(seed)
    per_anchor = max(1, min(N_INLIERS * N_OUTLIERS, budget // N))
    n_in = max(1, min(N_INLIERS, per_anchor))
    n_out = max(1, per_anchor // n_in)
    rows = []
    for i in range(N):
        p = S[i].copy()
        p[i] = 0.0
        others = np.delete(np.arange(N), i)
        if p.sum() > 0:
            inliers = rng.choice(N, size=n_in, p=p / p.sum())
        else:
            inliers = rng.choice(others, size=n_in)
        outliers = rng.choice(others, size=n_out)
        for j in inliers:
            for l in outliers:
                if j != l and j != i:
                    rows.append((i, j, l))
    return np.array(rows, dtype=int)


def trimap_objective(Z, triplets, weights, h="identity"):
    """(ndarray, triplets, weights, str) -> (value, gradient)"""
    hf, dh = _h(h)
    i, j, l = triplets[:, 0], triplets[:, 1], triplets[:, 2]
    d12 = Z[i] - Z[j]
    d13 = Z[i] - Z[l]
    delta = (d12**2).sum(axis=1) - (d13**2).sum(axis=1)
    value = float(weights @ hf(delta))
    g = (weights * dh(delta))[:, None]
    grad = np.zeros_like(Z)
    np.add.at(grad, i, 2.0 * g * (d12 - d13))
    np.add.at(grad, j, -2.0 * g * d12)
    np.add.at(grad, l, 2.0 * g * d13)
    return value, grad


def _normalize(Z):
    Z = Z - Z.mean(axis=0)
    norm2 = (Z**2).sum()
    if norm2 > 0:
        Z = Z * np.sqrt(Z.size / norm2)
    return Z


def trimap_embed(
    X, s=None, q=2, h="identity", steps=200, lr=0.01, seed=0, budget=DEFAULT_BUDGET
):
    """(PointSet, similarity, int, str, int, float, seed) -> EmbeddingResult"""
    X = as_points(X)
    if steps < 1:
        raise InvalidParameter(f"steps must be >= 1, got {steps}")
    if not 1 <= q:
        raise InvalidParameter(f"q must be >= 1, got {q}")
    _h(h)
    S = similarity_matrix(X, s)
    rng = np.random.default_rng(seed)
    triplets = sample_triplets(S, rng, budget)
    weights = contrast(S, triplets) / len(triplets)

    Z = _normalize(rng.standard_normal((X.shape[0], q)))
    trace = []
    for step in range(int(steps)):
        value, grad = trimap_objective(Z, triplets, weights, h)
        trace.append(value)
        logger.debug(f"trimap step {step} objective {value:.6g}")
        Z = _normalize(Z - lr * grad)
    value, _ = trimap_objective(Z, triplets, weights, h)
    trace.append(value)
    return EmbeddingResult(
        Z=Z,
        objective=value,
        meta={
            "method": "trimap",
            "iterations": int(steps),
            "trace": trace,
            "n_triplets": int(len(triplets)),
        },
    )
