""" classifiers v0.2
Local mode, nearest-neighbour and center/centerless classifiers
"""

# Imports
import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import softmax

from locuskit.errors import EmptyNeighborhood, InvalidParameter, NonConvergence
from locuskit.estimators.dataset import (
    local_weights,
    pairwise_distance,
    require_mass,
)
from locuskit.kernel_core import as_point, as_points
from locuskit.mylog import get_logger

logger = get_logger(__name__)


def local_mode_predict(k, data, xstar):
    """(Kernel, Dataset, Point) -> (int, ndarray)

    delta_c = sum of K(x*, x_i) over samples of class c; the class is the
    argmax with ties to the lowest index.
    """
    labels = data.require_labels()
    w = local_weights(k, data.X, xstar)
    require_mass(w)
    delta = np.bincount(labels, weights=w, minlength=data.n_classes)
    return int(np.argmax(delta)), delta


def local_margin_predict(k, data, xstar):
    """Binary margin form sign(sum K(x*, x_i) s_i) with s_i = +1 for label 1
    and -1 for label 0.  sign(0) is +1."""
    labels = data.require_labels()
    if data.n_classes > 2:
        raise InvalidParameter("the margin form needs binary labels")
    w = local_weights(k, data.X, xstar)
    require_mass(w)
    margin = float(w @ np.where(labels == 1, 1.0, -1.0))
    return (1 if margin >= 0 else -1), margin


def knn_predict(K, data, xstar, weight_kernel=None):
    """(int, Dataset, Point, Kernel) -> prediction

    Mean of the targets (or majority label) over the K nearest samples by
    Euclidean distance, ties in distance to the lower index.  A weight kernel
    reweights inside the neighbour set.
    """
    if not 1 <= int(K) <= data.N:
        raise InvalidParameter(f"K must lie in [1, {data.N}], got {K}")
    q = as_point(xstar)
    order = np.argsort(cdist(q, data.X)[0], kind="stable")[: int(K)]
    if weight_kernel is None:
        w = np.ones(len(order))
    else:
        w = weight_kernel.matrix(q, data.X[order])[0]
    total = require_mass(w, "weight kernel vanishes on every neighbour")
    if data.labels is not None and data.y is None:
        scores = np.bincount(data.labels[order], weights=w, minlength=data.n_classes)
        return int(np.argmax(scores))
    Y = data.target_matrix[order]
    return data.shape_prediction((w @ Y / total)[None, :])[0]


# Centerless classifiers
def local_centerless_classify(k, d, data, xstar, with_dispersion=False):
    """(Kernel, distance, Dataset, Point, bool) -> (int, ndarray)

    delta_c = -sum_{i:c} K_i d(x*, x_i) / sum_{i:c} K_i, plus the weighted
    within-class dispersion sum_{i,j:c} K_i K_j d(x_i, x_j) / (sum_{i:c} K_i)^2
    when requested.  Classes with no kernel mass score -inf.
    """
    labels = data.require_labels()
    q = as_point(xstar)
    w = local_weights(k, data.X, q)
    dq = pairwise_distance(d, q, data.X)[0]
    delta = np.full(data.n_classes, -np.inf)
    for c in range(data.n_classes):
        idx = np.flatnonzero(labels == c)
        mass = w[idx].sum()
        if not mass > 0:
            continue
        delta[c] = -(w[idx] @ dq[idx]) / mass
        if with_dispersion:
            D = pairwise_distance(d, data.X[idx], data.X[idx])
            delta[c] += (w[idx] @ D @ w[idx]) / mass**2
    if np.all(np.isneginf(delta)):
        raise EmptyNeighborhood("no class has kernel mass at the query")
    return int(np.argmax(delta)), delta


def centerless_lazy_step(K, D, R):
    """R -> softmax(-((K o D) R) / (K R)) row-wise, the soft lazy centerless map.

    Entries with zero class mass get a -inf logit.
    """
    K = np.asarray(K, dtype=float)
    D = np.asarray(D, dtype=float)
    R = np.asarray(R, dtype=float)
    num = (K * D) @ R
    den = K @ R
    with np.errstate(divide="ignore", invalid="ignore"):
        logits = np.where(den > 0, -num / np.where(den > 0, den, 1.0), -np.inf)
    empty = np.all(np.isneginf(logits), axis=1)
    logits[empty] = 0.0
    return softmax(logits, axis=1)


def centerless_cluster(k, X, init_labels, d="sqeuclidean", max_iter=100):
    """Iterates the soft centerless step from one-hot initial labels until the
    hard assignment stops changing.  Returns (labels, R)."""
    X = as_points(X)
    labels = np.asarray(init_labels, dtype=int)
    C = int(labels.max()) + 1
    R = np.eye(C)[labels]
    K = k.matrix(X, X)
    D = pairwise_distance(d, X, X)
    for it in range(1, max_iter + 1):
        R = centerless_lazy_step(K, D, R)
        new = np.argmax(R, axis=1)
        if np.array_equal(new, labels):
            logger.debug(f"centerless clustering stable after {it} steps")
            return new, R
        labels = new
    logger.warning(f"centerless clustering still moving after {max_iter} steps")
    raise NonConvergence(f"labels still changing after {max_iter} steps")


def center_classify(data, xstar, d="euclidean"):
    """Global center classifier: delta_c = -d(x*, mu_c) with mu_c the class mean"""
    labels = data.require_labels()
    centers = np.vstack(
        [data.X[labels == c].mean(axis=0) for c in range(data.n_classes)]
    )
    delta = -pairwise_distance(d, as_point(xstar), centers)[0]
    return int(np.argmax(delta)), delta


def centerless_classify(data, xstar, d="euclidean", with_dispersion=True):
    """Global centerless classifier

    delta_c = -(1/N_c) sum d(x*, x_i) + (1/(2 N_c^2)) sum_{i,j} d(x_i, x_j).
    """
    labels = data.require_labels()
    q = as_point(xstar)
    dq = pairwise_distance(d, q, data.X)[0]
    delta = np.full(data.n_classes, -np.inf)
    for c in range(data.n_classes):
        idx = np.flatnonzero(labels == c)
        if idx.size == 0:
            continue
        delta[c] = -dq[idx].mean()
        if with_dispersion:
            D = pairwise_distance(d, data.X[idx], data.X[idx])
            delta[c] += D.sum() / (2.0 * idx.size**2)
    return int(np.argmax(delta)), delta


def centerless_reconstruct(k, d, data, with_dispersion=False):
    """Lazy autoencoder of the local centerless classifier: each sample is
    replaced by the mean of the training class its encoder assigns"""
    labels = data.require_labels()
    centers = np.vstack(
        [data.X[labels == c].mean(axis=0) for c in range(data.n_classes)]
    )
    codes = np.array(
        [
            local_centerless_classify(k, d, data, x, with_dispersion)[0]
            for x in data.X
        ]
    )
    return centers[codes], codes


def local_kmeans(k, X, centers, max_iter=100, tol=1e-9):
    """K-means whose center update is the kernel-weighted local mean of the
    assigned points around the current center.  Returns (labels, centers)."""
    X = as_points(X)
    centers = as_points(centers).copy()
    labels = None
    for it in range(1, max_iter + 1):
        new_labels = np.argmin(cdist(X, centers, "sqeuclidean"), axis=1)
        moved = 0.0
        for c in range(centers.shape[0]):
            members = X[new_labels == c]
            if members.shape[0] == 0:
                continue
            w = k.matrix(centers[c][None, :], members)[0]
            if not w.sum() > 0:
                continue
            new_center = w @ members / w.sum()
            moved = max(moved, float(np.linalg.norm(new_center - centers[c])))
            centers[c] = new_center
        if labels is not None and np.array_equal(labels, new_labels) and moved < tol:
            logger.debug(f"local k-means converged after {it} iterations")
            break
        labels = new_labels
    return new_labels, centers
