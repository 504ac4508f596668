""" meanshift v0.3
Self-local-mean iterations on continuous points: MeanShift (with the damped
step), its noisy variant, PC-shift, and cluster extraction from the fixed
points
"""

# Imports
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from locuskit.errors import InvalidParameter
from locuskit.estimators.local_pca import LocalPCA
from locuskit.kernel_core import as_points
from locuskit.mylog import get_logger

logger = get_logger(__name__)

DEFAULT_MAX_ITER = 500
TOL_SCALE = 1e-8
MERGE_SCALE = 1e-3


@dataclass(frozen=True, eq=False)
class ShiftResult(object):
    trajectories: List[np.ndarray]
    points: np.ndarray
    labels: np.ndarray
    centers: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    frozen: np.ndarray
    trace: List[float] = field(default_factory=list)

    @property
    def n_clusters(self):
        return int(self.centers.shape[0])


def bbox_diagonal(X):
    X = as_points(X)
    return float(np.linalg.norm(X.max(axis=0) - X.min(axis=0)))


def default_tolerance(X):
    return max(TOL_SCALE * bbox_diagonal(X), 1e-12)


def default_merge_radius(X):
    return max(MERGE_SCALE * bbox_diagonal(X), 1e-12)


def extract_clusters(points, merge_radius):
    """(PointSet, float) -> (labels, centers)

    Single-linkage union of points closer than merge_radius.  Labels follow the
    order in which clusters are first seen; centers are cluster means.
    """
    if not merge_radius > 0:
        raise InvalidParameter(f"merge_radius must be positive, got {merge_radius}")
    P = as_points(points)
    adjacency = csr_matrix(cdist(P, P) <= merge_radius)
    _, comp = connected_components(adjacency, directed=False)
    _, first = np.unique(comp, return_index=True)
    order = np.argsort(first, kind="stable")
    relabel = np.empty(order.size, dtype=int)
    relabel[np.unique(comp)[order]] = np.arange(order.size)
    labels = relabel[comp]
    centers = np.vstack([P[labels == c].mean(axis=0) for c in range(order.size)])
    return labels, centers


def _check_step(alpha, tol):
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameter(f"alpha must lie in (0, 1], got {alpha}")
    if not tol > 0:
        raise InvalidParameter(f"tol must be positive, got {tol}")


def mean_shift(
    k,
    X,
    queries=None,
    alpha=1.0,
    tol=None,
    max_iter=DEFAULT_MAX_ITER,
    overwrite=False,
    merge_radius=None,
):
    """(Kernel, PointSet, PointSet, ...) -> ShiftResult

    Iterates q <- alpha m_K(q; X) + (1 - alpha) q.  A query stops once
    ||m_K(q; X) - q|| < tol.  With overwrite the reference set is replaced by
    the current points after every sweep; otherwise X stays fixed.  Queries
    with zero kernel mass are frozen where they are.
    """
    X = as_points(X)
    Q = X.copy() if queries is None else as_points(queries).copy()
    tol = default_tolerance(X) if tol is None else tol
    merge_radius = default_merge_radius(X) if merge_radius is None else merge_radius
    _check_step(alpha, tol)

    n = Q.shape[0]
    trajectories = [[q.copy()] for q in Q]
    iterations = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    frozen = np.zeros(n, dtype=bool)
    trace = []

    for sweep in range(max_iter):
        active = ~(converged | frozen)
        if not active.any():
            break
        reference = Q.copy() if overwrite else X
        W = k.matrix(Q[active], reference)
        deg = W.sum(axis=1)
        idx = np.flatnonzero(active)
        empty = deg <= 0
        if empty.any():
            logger.warning(f"freezing {int(empty.sum())} queries with no kernel mass")
            frozen[idx[empty]] = True
        ok = ~empty
        idx, W, deg = idx[ok], W[ok], deg[ok]
        m = W @ reference / deg[:, None]
        disp = np.linalg.norm(m - Q[idx], axis=1)
        trace.append(float(disp.max()) if disp.size else 0.0)
        done = disp < tol
        converged[idx[done]] = True
        moving = idx[~done]
        Q[moving] = alpha * m[~done] + (1.0 - alpha) * Q[moving]
        iterations[moving] += 1
        for i in moving:
            trajectories[i].append(Q[i].copy())

    if not converged.all():
        left = int((~converged & ~frozen).sum())
        if left:
            logger.warning(f"{left} queries hit max_iter={max_iter} before settling")

    labels, centers = extract_clusters(Q, merge_radius)
    logger.debug(f"mean shift finished with {centers.shape[0]} clusters")
    return ShiftResult(
        trajectories=[np.array(t) for t in trajectories],
        points=Q,
        labels=labels,
        centers=centers,
        iterations=iterations,
        converged=converged,
        frozen=frozen,
        trace=trace,
    )


def stochastic_mean_shift(k, X, queries, sigma, steps, seed, alpha=1.0):
    """Mean shift with Gaussian noise of std ``sigma`` injected after every
    step; runs exactly ``steps`` steps and records every iterate"""
    if sigma < 0:
        raise InvalidParameter("sigma must be >= 0")
    _check_step(alpha, 1.0)
    X = as_points(X)
    Q = as_points(queries).copy()
    rng = np.random.default_rng(seed)
    trajectories = [[q.copy()] for q in Q]
    frozen = np.zeros(Q.shape[0], dtype=bool)
    for _ in range(int(steps)):
        W = k.matrix(Q, X)
        deg = W.sum(axis=1)
        frozen |= deg <= 0
        safe = np.where(deg > 0, deg, 1.0)
        m = np.where((deg > 0)[:, None], W @ X / safe[:, None], Q)
        noise = sigma * rng.standard_normal(Q.shape)
        Q = np.where(frozen[:, None], Q, alpha * m + (1.0 - alpha) * Q + noise)
        for i, q in enumerate(Q):
            trajectories[i].append(q.copy())
    labels, centers = extract_clusters(Q, default_merge_radius(X))
    return ShiftResult(
        trajectories=[np.array(t) for t in trajectories],
        points=Q,
        labels=labels,
        centers=centers,
        iterations=np.full(Q.shape[0], int(steps)),
        converged=np.zeros(Q.shape[0], dtype=bool),
        frozen=frozen,
    )


def pc_shift(k, X, r, alpha=1.0, tol=None, max_iter=100, queries=None):
    """(Kernel, PointSet, int, ...) -> ShiftResult

    Iterates the local PCA reconstruction q <- q + alpha (V V^T (q - mu) + mu - q)
    against the fixed sample X.  ``trace`` records the total squared distance
    of the queries to their fitted local subspaces before each sweep.
    """
    X = as_points(X)
    tol = default_tolerance(X) if tol is None else tol
    _check_step(alpha, tol)
    lpca = LocalPCA(k, X, r)
    Q = X.copy() if queries is None else as_points(queries).copy()
    n = Q.shape[0]
    trajectories = [[q.copy()] for q in Q]
    iterations = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    trace = []
    for _ in range(max_iter):
        shifts = np.vstack([lpca.shift(q) for q in Q])
        size = np.linalg.norm(shifts, axis=1)
        trace.append(float((size**2).sum()))
        converged = size < tol
        if converged.all():
            break
        move = ~converged
        Q[move] = Q[move] + alpha * shifts[move]
        iterations[move] += 1
        for i in np.flatnonzero(move):
            trajectories[i].append(Q[i].copy())
    labels, centers = extract_clusters(Q, default_merge_radius(X))
    return ShiftResult(
        trajectories=[np.array(t) for t in trajectories],
        points=Q,
        labels=labels,
        centers=centers,
        iterations=iterations,
        converged=converged,
        frozen=np.zeros(n, dtype=bool),
        trace=trace,
    )
