""" multikernel v0.1
Simplex-constrained fitting of multi-kernel weights
"""

# Imports
from dataclasses import dataclass

import numpy as np

from locuskit.errors import EmptyNeighborhood, InvalidParameter
from locuskit.kernel_core import gram, normalize_rows
from locuskit.mylog import get_logger

logger = get_logger(__name__)

MAX_ITER = 500
VERTEX_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MultiKernelFit(object):
    weights: np.ndarray
    objective: float
    loo_error: float
    kkt_residual: float
    iterations: int


def project_simplex(v):
    """Euclidean projection onto {w >= 0, sum w = 1} (sort based)"""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / ind > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.clip(v - theta, 0.0, None)


def _hollow_stochastic(K):
    Kt = normalize_rows(K.hollow())
    if Kt.has_empty_rows:
        raise EmptyNeighborhood(
            f"kernel {K.kernel_id} leaves samples without off-diagonal mass",
            rows=list(Kt.empty_rows),
        )
    return Kt.values


def fit_multikernel(kernels, data, max_iter=MAX_ITER):
    """(list of Kernel, Dataset) -> MultiKernelFit

    Minimizes ||sum_m w_m L~_m y||^2 over the simplex, L~_m = I - K~_m with the
    hollow normalization of each part, by projected gradient from uniform
    weights.  The final iterate is compared with every vertex and only
    replaced by a strictly better one.
    """
    if len(kernels) < 2:
        raise InvalidParameter("a multi-kernel needs at least two parts")
    data.require_targets()
    Y = data.target_matrix
    grams = [gram(k, data.X) for k in kernels]
    parts = [_hollow_stochastic(K) for K in grams]
    A = np.column_stack([(Y - Kt @ Y).reshape(-1) for Kt in parts])
    Q = A.T @ A
    M = len(kernels)

    def f(w):
        return float(w @ Q @ w)

    w = np.full(M, 1.0 / M)
    lipschitz = 2.0 * np.linalg.norm(Q, 2)
    it = 0
    if lipschitz > 0:
        step = 1.0 / lipschitz
        for it in range(1, max_iter + 1):
            new = project_simplex(w - step * 2.0 * Q @ w)
            if np.array_equal(new, w):
                break
            w = new
    best = f(w)
    for m in range(M):
        vertex = np.eye(M)[m]
        if f(vertex) < best - VERTEX_TOL * max(1.0, best):
            w, best = vertex, f(vertex)

    grad = 2.0 * Q @ w
    kkt = float(np.abs(w - project_simplex(w - grad)).max())
    combined = sum(wm * K.values for wm, K in zip(w, grams))
    np.fill_diagonal(combined, 0.0)
    Kt = normalize_rows(combined)
    loo = float(((Y - Kt.values @ Y) ** 2).sum())
    logger.info(f"multi-kernel weights {np.round(w, 4)} objective {best:.4g}")
    return MultiKernelFit(
        weights=w, objective=best, loo_error=loo, kkt_residual=kkt, iterations=it
    )
