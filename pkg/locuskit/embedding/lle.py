""" lle v0.2
Locally linear embedding as a fixed-point problem Z ~ K~ Z, and the global PCA
baseline it is compared against
"""

# Imports
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from locuskit.errors import EigenFailure, InvalidParameter, NotSquare
from locuskit.estimators.local_pca import sign_convention
from locuskit.kernel_core import StochasticMatrix, as_points, normalize_rows
from locuskit.mylog import get_logger

logger = get_logger(__name__)

GRAM_REG = 1e-9


@dataclass(frozen=True, eq=False)
class EmbeddingResult(object):
    Z: np.ndarray
    objective: float
    meta: dict = field(default_factory=dict)


def lle_weights(X, K_nn):
    """(PointSet, int) -> StochasticMatrix

    Row i holds the sum-to-one least-squares weights reconstructing x_i from
    its K_nn nearest neighbours.  Negative weights are clipped and the row is
    renormalized; entries outside the neighbourhood and the diagonal are 0.
    """
    X = as_points(X)
    N = X.shape[0]
    if not 1 <= K_nn < N:
        raise InvalidParameter(f"K_nn must lie in [1, {N - 1}], got {K_nn}")
    D = cdist(X, X)
    np.fill_diagonal(D, np.inf)
    neighbours = np.argsort(D, axis=1, kind="stable")[:, :K_nn]

    W = np.zeros((N, N))
    regularized = 0
    for i in range(N):
        idx = neighbours[i]
        Z = X[idx] - X[i]
        G = Z @ Z.T
        if np.linalg.matrix_rank(G) < K_nn:
            trace = np.trace(G)
            G = G + GRAM_REG * (trace if trace > 0 else 1.0) * np.eye(K_nn)
            regularized += 1
        w = linalg.solve(G, np.ones(K_nn), assume_a="sym")
        w = w / w.sum()
        w = np.clip(w, 0.0, None)
        W[i, idx] = w / w.sum()
    if regularized:
        logger.debug(f"regularized {regularized} singular local Gram matrices")
    return normalize_rows(W)


def _stochastic(Kt):
    values = Kt.values if isinstance(Kt, StochasticMatrix) else np.asarray(Kt, float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise NotSquare(f"need a square stochastic matrix, got {values.shape}")
    return values


def lle_objective(Kt, Z):
    """||(I - K~) Z||_F^2 / N"""
    values = _stochastic(Kt)
    Z = as_points(Z)
    resid = Z - values @ Z
    return float((resid**2).sum() / values.shape[0])


def lle_embed(Kt, r):
    """(StochasticMatrix, int) -> EmbeddingResult

    Bottom-r eigenvectors of M = (I - K~)^T (I - K~) on the orthogonal
    complement of the constant vector, scaled so Z^T Z / N = I.
    """
    values = _stochastic(Kt)
    N = values.shape[0]
    if not 1 <= r < N - 1:
        raise InvalidParameter(f"r must lie in [1, {N - 2}], got {r}")
    L = np.eye(N) - values
    M = L.T @ L
    B = linalg.null_space(np.ones((1, N)))
    try:
        evals, evecs = linalg.eigh(B.T @ M @ B, subset_by_index=[0, r - 1])
    except (linalg.LinAlgError, ValueError) as e:
        raise EigenFailure(f"eigen-solve failed: {e}") from e
    if not np.all(np.isfinite(evals)):
        raise EigenFailure("eigen-solve returned non-finite eigenvalues")
    Z = sign_convention(B @ evecs) * np.sqrt(N)
    objective = float(np.clip(evals, 0.0, None).sum())
    logger.debug(f"lle embedding r={r} objective={objective:.3e}")
    return EmbeddingResult(Z=Z, objective=objective, meta={"method": "lle"})


def pca_embed(X, r):
    """Global PCA coordinates scaled like lle_embed (unit columns times sqrt N)"""
    X = as_points(X)
    N, p = X.shape
    if not 1 <= r <= min(N - 1, p):
        raise InvalidParameter(f"r must lie in [1, {min(N - 1, p)}], got {r}")
    U, s, _ = np.linalg.svd(X - X.mean(axis=0), full_matrices=False)
    Z = sign_convention(U[:, :r]) * np.sqrt(N)
    return EmbeddingResult(
        Z=Z,
        objective=float((s[r:] ** 2).sum()),
        meta={"method": "pca", "singular_values": s[:r]},
    )
