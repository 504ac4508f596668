""" bandwidth v0.2
Leave-one-out bandwidth selection over a grid or a bounded bracket
"""

# Imports
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import optimize
from scipy.special import logsumexp
from scipy.spatial.distance import cdist

from locuskit.errors import InvalidParameter, NumericFailure
from locuskit.estimators import local_linear_predict, loo_error
from locuskit.kernel_core import Gaussian, as_points
from locuskit.mylog import get_logger

logger = get_logger(__name__)

PREDICTORS = ("local-mean", "local-linear", "kde-loo")
TIE_TOL = 1e-12
BRACKET_RTOL = 1e-3


@dataclass(frozen=True, eq=False)
class TuneResult(object):
    h: float
    loss: float
    grid: np.ndarray
    losses: np.ndarray
    bracket: Optional[Tuple[float, float]] = None


def loo_kde_nll(h, X):
    """Mean leave-one-out negative log-likelihood of the Gaussian KDE"""
    X = as_points(X)
    N, p = X.shape
    if N < 2:
        raise InvalidParameter("leave-one-out needs at least two samples")
    logk = -cdist(X, X, "sqeuclidean") / (2.0 * h**2)
    np.fill_diagonal(logk, -np.inf)
    logp = (
        logsumexp(logk, axis=1)
        - np.log(N - 1)
        - 0.5 * p * np.log(2.0 * np.pi * h**2)
    )
    return float(-logp.mean())


def _local_linear_loo(h, data):
    k = Gaussian(h=h)
    Y = data.target_matrix
    total = 0.0
    for i in range(data.N):
        fit = local_linear_predict(k, data.without(i), data.X[i])
        total += float(((np.atleast_1d(fit.theta) - Y[i]) ** 2).sum())
    return total / data.N


def loo_loss(predictor, h, data):
    """(str, float, Dataset) -> float, +inf where the estimate breaks down"""
    if not h > 0:
        return np.inf
    try:
        if predictor == "local-mean":
            return loo_error(Gaussian(h=h), data) / data.N
        if predictor == "local-linear":
            return _local_linear_loo(h, data)
        return loo_kde_nll(h, data.X)
    except NumericFailure as e:
        logger.debug(f"h={h:.4g} scored +inf ({type(e).__name__})")
        return np.inf


def _pick(grid, losses):
    finite = np.isfinite(losses)
    if not finite.any():
        raise NumericFailure("every candidate bandwidth failed")
    best = losses[finite].min()
    ties = finite & (losses <= best + TIE_TOL * max(1.0, abs(best)))
    i = int(np.flatnonzero(ties)[0])
    return grid[i], losses[i]


def tune_bandwidth(predictor, data, grid=None, bracket=None):
    """(str, Dataset, grid | (lo, hi)) -> TuneResult

    Grid search keeps the smallest h among (near-)ties.  A bracket runs
    bounded scalar minimization to a relative tolerance of 1e-3.  The full
    evaluated loss curve is returned, sorted by h.
    """
    if predictor not in PREDICTORS:
        raise InvalidParameter(f"unknown predictor {predictor!r}")
    if predictor != "kde-loo":
        data.require_targets()
    if (grid is None) == (bracket is None):
        raise InvalidParameter("give exactly one of grid or bracket")

    if grid is not None:
        grid = np.unique(np.asarray(grid, dtype=float))
        if grid.size == 0 or np.any(grid <= 0):
            raise InvalidParameter("grid must be non-empty and positive")
        losses = np.array([loo_loss(predictor, h, data) for h in grid])
        h, loss = _pick(grid, losses)
        logger.info(f"tuned {predictor} bandwidth h={h:.4g} loss={loss:.4g}")
        return TuneResult(h=float(h), loss=float(loss), grid=grid, losses=losses)

    lo, hi = (float(b) for b in bracket)
    if not 0 < lo < hi:
        raise InvalidParameter(f"bracket must satisfy 0 < lo < hi, got {bracket}")
    seen = {}

    def objective(h):
        if h not in seen:
            seen[h] = loo_loss(predictor, h, data)
        value = seen[h]
        return value if np.isfinite(value) else np.finfo(float).max

    res = optimize.minimize_scalar(
        objective,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": BRACKET_RTOL * hi},
    )
    grid = np.array(sorted(seen))
    losses = np.array([seen[h] for h in grid])
    h, loss = _pick(grid, losses)
    if not res.success:
        logger.warning(f"bandwidth search stopped early: {res.message}")
    logger.info(f"tuned {predictor} bandwidth h={h:.4g} loss={loss:.4g}")
    return TuneResult(
        h=float(h), loss=float(loss), grid=grid, losses=losses, bracket=(lo, hi)
    )
