""" local_pca v0.2
Kernel-weighted (local) PCA, its nonlinear encoder and the local reconstruction
"""

# Imports
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from locuskit.errors import InvalidParameter, RankDeficient
from locuskit.estimators.dataset import local_weights, require_mass
from locuskit.kernel_core import as_point, as_points, uniform
from locuskit.mylog import get_logger

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Subspace(object):
    """Affine subspace mu + span(V) with orthonormal columns V (p x r)"""

    mean: np.ndarray
    basis: np.ndarray

    def project(self, x):
        c = np.asarray(x, dtype=float) - self.mean
        return self.mean + (c @ self.basis) @ self.basis.T

    def coordinates(self, x):
        return (np.asarray(x, dtype=float) - self.mean) @ self.basis


def sign_convention(V):
    """Flips columns so the largest-magnitude entry of each is positive"""
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def weighted_pca(X, w, r):
    """(ndarray, ndarray, int) -> Subspace

    Top-r right singular vectors of the centered design scaled by sqrt(w).
    """
    total = require_mass(w)
    mean = w @ X / total
    scaled = np.sqrt(w)[:, None] * (X - mean)
    _, s, Vt = np.linalg.svd(scaled, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * max(1.0, s[0] if s.size else 0.0)))
    if X.shape[1] > r and rank < r:
        raise RankDeficient(f"only {rank} independent weighted directions, need {r}")
    if X.shape[1] == r:
        basis = np.eye(r)
    else:
        basis = sign_convention(Vt[:r].T)
    return Subspace(mean=mean, basis=basis)


class LocalPCA(object):
    """Local PCA around query points

    fit(x*) returns the weighted subspace at x*, encode(x) gives the nonlinear
    code V_x^T (x - mu_x) + V^T (mu_x - mu) with (mu, V) the global PCA, and
    reconstruct(x) gives the local reconstruction V_x V_x^T (x - mu_x) + mu_x.
    """

    def __init__(self, k, data, r):
        self.log = get_logger(__name__ + ".LocalPCA")
        self.k = k
        self.X = as_points(data.X if hasattr(data, "X") else data)
        p = self.X.shape[1]
        if not 1 <= int(r) <= p:
            raise InvalidParameter(f"r must lie in [1, {p}], got {r}")
        self.r = int(r)
        self.log.debug(f"LocalPCA over {self.X.shape[0]} points, r={self.r}")

    def fit(self, xstar):
        w = local_weights(self.k, self.X, xstar)
        return weighted_pca(self.X, w, self.r)

    @cached_property
    def global_subspace(self):
        return weighted_pca(self.X, np.ones(self.X.shape[0]), self.r)

    def encode(self, x):
        x = as_point(x)[0]
        local = self.fit(x)
        glob = self.global_subspace
        return local.coordinates(x) + glob.coordinates(local.mean)

    def reconstruct(self, x):
        x = as_point(x)[0]
        return self.fit(x).project(x)

    def shift(self, x):
        """PC-shift vector (I - V_x V_x^T)(mu_x - x)"""
        x = as_point(x)[0]
        return self.reconstruct(x) - x


def local_pca(k, data, xstar, r):
    """(Kernel, Dataset, Point, int) -> (mean, basis)"""
    sub = LocalPCA(k, data, r).fit(xstar)
    return sub.mean, sub.basis


def global_pca(X, r):
    return LocalPCA(uniform(), X, r).global_subspace
