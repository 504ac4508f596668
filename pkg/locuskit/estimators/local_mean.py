""" local_mean v0.3
Local decisions and the local mean (Nadaraya-Watson) family

The kernel-weighted mean sum_i K(x*, x_i) y_i / sum_i K(x*, x_i) is the
workhorse of the package; ``lazy_transform`` is its vectorized form and the
other predictors here either reduce to it or iterate it.
"""

# Imports
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.spatial.distance import cdist

from locuskit.errors import (
    EmptyNeighborhood,
    InvalidParameter,
    ZeroDenominator,
)
from locuskit.estimators.dataset import (
    LocalFitResult,
    local_weights,
    pairwise_distance,
    require_mass,
)
from locuskit.kernel_core import SelfKernel, as_point, as_points, gram, normalize_rows
from locuskit.mylog import get_logger

logger = get_logger(__name__)

LOSSES = ("squared", "zero-one", "distance", "nll")
FALLBACKS = ("error", "nearest")

WEISZFELD_MAX_ITER = 200
WEISZFELD_TOL = 1e-9
WEISZFELD_FLOOR = 1e-12


class GaussianLocationModel(object):
    """Isotropic Gaussian with unknown mean, a ready model for local likelihood"""

    def __init__(self, sigma=1.0):
        if not sigma > 0:
            raise InvalidParameter("sigma must be positive")
        self.sigma = sigma

    def theta0(self, Y):
        return np.zeros(Y.shape[1])

    def log_prob(self, Y, theta):
        r2 = ((Y - theta) ** 2).sum(axis=1)
        return -0.5 * r2 / self.sigma**2

    def grad(self, Y, theta):
        return (Y - theta) / self.sigma**2


# Local decisions
def local_fit(
    loss,
    k,
    data,
    xstar,
    metric="euclidean",
    model=None,
    lr=0.5,
    max_iter=500,
    tol=1e-9,
):
    """(str, Kernel, Dataset, Point) -> LocalFitResult

    Minimizes the weighted empirical risk sum_i K(x*, x_i) loss(y_i, theta).
    The distance loss acts on the targets when present and on the design
    otherwise; ``metric`` is "euclidean" (Weiszfeld), "sqeuclidean" (closed
    form) or a callable d(theta, Y) -> per-sample distances.
    """
    if loss not in LOSSES:
        raise InvalidParameter(f"unknown loss {loss!r}")
    w = local_weights(k, data.X, xstar)
    total = require_mass(w)

    if loss == "squared":
        Y = data.target_matrix
        theta = w @ Y / total
        value = float(w @ ((Y - theta) ** 2).sum(axis=1))
        return LocalFitResult(
            theta=data.shape_prediction(theta[None, :])[0],
            loss_value=value,
            weights=w / total,
        )

    if loss == "zero-one":
        labels = data.require_labels()
        scores = np.bincount(labels, weights=w, minlength=data.n_classes)
        theta = int(np.argmax(scores))
        value = float(w[labels != theta].sum())
        return LocalFitResult(theta=theta, loss_value=value)

    Y = data.target_matrix if data.y is not None else data.X
    if loss == "distance":
        return _local_center(w, Y, metric)
    return _local_likelihood(w, Y, model, lr, max_iter, tol)


def _local_center(w, Y, metric):
    total = w.sum()
    start = w @ Y / total
    if metric == "sqeuclidean":
        value = float(w @ ((Y - start) ** 2).sum(axis=1))
        return LocalFitResult(theta=start, loss_value=value)
    if callable(metric):
        res = optimize.minimize(
            lambda th: float(w @ np.asarray(metric(th, Y), dtype=float)),
            start,
            method="Nelder-Mead",
            options={"xatol": WEISZFELD_TOL, "fatol": WEISZFELD_TOL, "maxiter": 5000},
        )
        return LocalFitResult(
            theta=res.x,
            loss_value=float(res.fun),
            converged=bool(res.success),
            iterations=int(res.nit),
        )
    if metric != "euclidean":
        raise InvalidParameter(f"unsupported metric {metric!r}")

    # Weiszfeld iteration for the weighted geometric median
    theta = start
    converged = False
    it = 0
    for it in range(1, WEISZFELD_MAX_ITER + 1):
        dist = np.maximum(np.linalg.norm(Y - theta, axis=1), WEISZFELD_FLOOR)
        coef = w / dist
        new = coef @ Y / coef.sum()
        step = np.linalg.norm(new - theta)
        theta = new
        if step < WEISZFELD_TOL:
            converged = True
            break
    if not converged:
        logger.warning(f"Weiszfeld stopped after {it} iterations without converging")
    value = float(w @ np.linalg.norm(Y - theta, axis=1))
    return LocalFitResult(
        theta=theta, loss_value=value, converged=converged, iterations=it
    )


def _local_likelihood(w, Y, model, lr, max_iter, tol):
    if model is None:
        raise InvalidParameter("negative-log-likelihood loss needs a model")
    wn = w / w.sum()
    theta = np.asarray(model.theta0(Y), dtype=float)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        step = lr * (wn @ np.asarray(model.grad(Y, theta), dtype=float))
        theta = theta + step
        if np.linalg.norm(step) < tol:
            converged = True
            break
    if not converged:
        logger.warning(f"local likelihood ascent stopped after {it} iterations")
    value = -float(w @ model.log_prob(Y, theta))
    return LocalFitResult(
        theta=theta, loss_value=value, converged=converged, iterations=it
    )


# Local mean
def lazy_transform(k, data, queries, fallback="error"):
    """(Kernel, Dataset, PointSet) -> ndarray

    K~ y with K~ = normalize_rows(gram(k, queries, X)), one row per query.
    Queries with no mass raise EmptyNeighborhood, or take the nearest sample's
    target when fallback="nearest".
    """
    if fallback not in FALLBACKS:
        raise InvalidParameter(f"unknown fallback {fallback!r}")
    Q = as_points(queries)
    Y = data.target_matrix
    Kt = normalize_rows(gram(k, Q, data.X))
    P = Kt.values @ Y
    if Kt.has_empty_rows:
        rows = list(Kt.empty_rows)
        if fallback == "error":
            raise EmptyNeighborhood(
                f"{len(rows)} queries have zero kernel mass", rows=rows
            )
        logger.warning(f"nearest-sample fallback used for {len(rows)} queries")
        nearest = np.argmin(cdist(Q[rows], data.X), axis=1)
        P[rows] = Y[nearest]
    return data.shape_prediction(P)


def local_mean_predict(k, data, xstar, fallback="error"):
    """(Kernel, Dataset, Point) -> float | ndarray"""
    return lazy_transform(k, data, as_point(xstar), fallback)[0]


def loo_error(k, data):
    """Leave-one-out squared error of the local mean (hollow normalization)"""
    if data.N < 2:
        raise InvalidParameter("leave-one-out needs at least two samples")
    Y = data.target_matrix
    K = gram(k, data.X).hollow()
    Kt = normalize_rows(K)
    if Kt.has_empty_rows:
        raise EmptyNeighborhood(
            "some samples have no off-diagonal kernel mass", rows=list(Kt.empty_rows)
        )
    resid = Y - Kt.values @ Y
    return float((resid**2).sum())


def lazy_iterate(k, data, n=1):
    """K~^n y, the lazy transformation applied n times to the training targets"""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    Kt = normalize_rows(gram(k, data.X))
    Y = data.target_matrix
    for _ in range(int(n)):
        Y = Kt.values @ Y
    return data.shape_prediction(Y)


def local_constant_encode(k, data, xstar):
    """The local mean of the design itself, m_K(x*; X)"""
    w = local_weights(k, data.X, xstar)
    return w @ data.X / require_mass(w)


def self_kernel_local_mean(k_self, data, xstar, init=None, max_iter=100, tol=1e-10):
    """(SelfKernel, Dataset, Point) -> LocalFitResult

    Fixed point of y* <- sum K1(x*, x_i) K2(y*, y_i) y_i / sum K1 K2.  The
    start is the plain local mean under K1 unless ``init`` is given.
    """
    if not isinstance(k_self, SelfKernel):
        raise InvalidParameter("self_kernel_local_mean needs a self kernel")
    Y = data.target_matrix
    wx = local_weights(k_self.kx, data.X, xstar)
    if init is None:
        current = wx @ Y / require_mass(wx)
    else:
        current = np.asarray(init, dtype=float).reshape(-1)

    converged = False
    it = 0
    w = wx
    for it in range(1, max_iter + 1):
        w = wx * k_self.ky.matrix(current[None, :], Y)[0]
        new = w @ Y / require_mass(w, "joint kernel mass vanished at the iterate")
        delta = np.abs(new - current).max()
        current = new
        if delta < tol:
            converged = True
            break
    if not converged:
        logger.warning(f"self-kernel iteration did not settle in {max_iter} steps")
    value = float(w @ ((Y - current) ** 2).sum(axis=1))
    return LocalFitResult(
        theta=data.shape_prediction(current[None, :])[0],
        loss_value=value,
        converged=converged,
        iterations=it,
    )


# Factorized kernels
@dataclass(frozen=True, eq=False)
class InferenceRules(object):
    """Precomputed Psi^T y and Psi^T 1 for a factorized kernel phi . psi"""

    weighted_value_sum: np.ndarray
    weight_sum: np.ndarray


def inference_precompute(psi, data):
    Psi = np.asarray(psi(data.X), dtype=float).reshape(data.N, -1)
    Y = data.require_targets()
    return InferenceRules(weighted_value_sum=Psi.T @ Y, weight_sum=Psi.sum(axis=0))


def inference_predict(phi, rules, xstar):
    f = np.asarray(phi(as_point(xstar)), dtype=float).reshape(-1)
    den = float(f @ rules.weight_sum)
    if den == 0.0:
        raise ZeroDenominator("phi(x*) . Psi^T 1 is zero")
    return f @ rules.weighted_value_sum / den


# Monte Carlo
def monte_carlo_local_mean(k, data, xstar, n, seed):
    """Averages targets resampled with probability proportional to K(x*, x_i)"""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    w = local_weights(k, data.X, xstar)
    total = require_mass(w)
    rng = np.random.default_rng(seed)
    idx = rng.choice(data.N, size=int(n), p=w / total)
    Y = data.target_matrix
    return data.shape_prediction(Y[idx].mean(axis=0)[None, :])[0]


def distance_loss(d):
    """Wraps a pairwise distance (name or callable) as d(theta, Y) for local_fit"""

    def loss(theta, Y):
        return pairwise_distance(d, np.atleast_2d(theta), Y)[0]

    return loss


