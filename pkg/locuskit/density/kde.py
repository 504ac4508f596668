""" kde v0.2
Kernel density estimates, the mean-shift score estimate and Tweedie denoising

The rest of the package works with unnormalized kernels; this module owns the
conversion to kernels that integrate to one.
"""

# Imports
import numpy as np
from scipy.special import gamma, logsumexp, softmax

from locuskit.errors import EmptyNeighborhood, InvalidParameter
from locuskit.estimators.dataset import local_weights, require_mass
from locuskit.kernel_core import (
    Epanechnikov,
    Feature,
    Gaussian,
    Neighborhood,
    as_point,
    as_points,
)
from locuskit.mylog import get_logger

logger = get_logger(__name__)


def unit_ball_volume(p):
    return np.pi ** (p / 2.0) / gamma(p / 2.0 + 1.0)


def density_scale(k, p):
    """(Kernel, int) -> float

    Factor turning k's unnormalized weights into a density on R^p.
    """
    if isinstance(k, Gaussian):
        return (2.0 * np.pi * k.h**2) ** (-p / 2.0)
    if isinstance(k, Epanechnikov):
        c = (p + 2.0) / (2.0 * unit_ball_volume(p) * k.h**p)
        return c / 0.75
    if isinstance(k, Neighborhood):
        if np.isinf(k.eps):
            raise InvalidParameter("the uniform kernel has no density form")
        return 1.0 / (unit_ball_volume(p) * k.eps**p)
    if isinstance(k, Feature):
        return 1.0
    raise InvalidParameter(f"no density normalization for {k.kind} kernels")


def kde_values(k, X, queries):
    """Density estimate (1/N) sum_i K_h(x - x_i) at every query row"""
    X = as_points(X)
    Q = as_points(queries)
    scale = density_scale(k, X.shape[1])
    return scale * k.matrix(Q, X).mean(axis=1)


def kde(k, X, xstar):
    """(Kernel, PointSet, Point) -> float"""
    return float(kde_values(k, X, as_point(xstar))[0])


def log_gaussian_kde(h, X, xstar):
    """log of the Gaussian KDE, evaluated through logsumexp"""
    X = as_points(X)
    x = as_point(xstar)
    p = X.shape[1]
    r2 = ((X - x) ** 2).sum(axis=1)
    return float(
        logsumexp(-r2 / (2.0 * h**2))
        - np.log(X.shape[0])
        - 0.5 * p * np.log(2.0 * np.pi * h**2)
    )


def gaussian_kde_log_gradient(h, X, xstar):
    """Analytic gradient of log p^(x) for the Gaussian KDE"""
    X = as_points(X)
    x = as_point(xstar)[0]
    r2 = ((X - x) ** 2).sum(axis=1)
    resp = softmax(-r2 / (2.0 * h**2))
    return resp @ (X - x) / h**2


def conditional_kde(k1, k2, pairs, xstar, ystar):
    """(Kernel, Kernel, Dataset, Point, Point) -> float

    sum_i K1(x, x_i) K2(y, y_i) / sum_i K1(x, x_i) with K2 in density form.
    """
    w = local_weights(k1, pairs.X, xstar)
    total = require_mass(w, "no kernel mass at x* for the conditional density")
    Y = pairs.target_matrix
    k2_vals = density_scale(k2, Y.shape[1]) * k2.matrix(as_point(ystar), Y)[0]
    return float(w @ k2_vals / total)


def score_estimate(h, X, xstar):
    """(float, PointSet, Point) -> vector

    (m_K(x*) - x*) / h^2 with the Gaussian local mean m_K, the mean-shift
    estimate of the score grad log p(x*).
    """
    X = as_points(X)
    x = as_point(xstar)
    w = Gaussian(h=h).matrix(x, X)[0]
    total = w.sum()
    if not total > 0:
        raise EmptyNeighborhood("Gaussian weights underflow at the query")
    m = w @ X / total
    return (m - x[0]) / h**2


def gaussian_mixture_score(means, weights, sigma, x):
    """Exact score of the isotropic mixture sum_m pi_m N(mu_m, sigma^2 I)"""
    M = as_points(means)
    pi = np.asarray(weights, dtype=float)
    x = as_point(x)[0]
    r2 = ((M - x) ** 2).sum(axis=1)
    resp = softmax(np.log(pi) - r2 / (2.0 * sigma**2))
    return resp @ (M - x) / sigma**2


def tweedie_denoise(sigma, score, x):
    """(float, callable, Point) -> Point

    Posterior mean under Gaussian noise, x + sigma^2 score(x).
    """
    if not sigma > 0:
        raise InvalidParameter(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=float)
    return x + sigma**2 * np.asarray(score(x), dtype=float)
