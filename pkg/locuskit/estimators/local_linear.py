""" local_linear v0.2
Local linear and local ridge regression with their equivalent kernels
"""

# Imports
import warnings

import numpy as np
from scipy import linalg

from locuskit.errors import InvalidParameter, SingularSystem
from locuskit.estimators.dataset import LocalFitResult, local_weights
from locuskit.kernel_core import as_point, as_points
from locuskit.mylog import get_logger

logger = get_logger(__name__)

JITTER = 1e-10


def _augment(X):
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _solve(A, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", linalg.LinAlgWarning)
        return linalg.solve(A, b, assume_a="sym")


def local_linear_predict(k, data, xstar, lam=0.0):
    """(Kernel, Dataset, Point, float) -> LocalFitResult

    y^ = x~*^T (X~^T D X~ + lam I)^-1 X~^T D y with D = diag K(x*, x_i) and an
    intercept column prepended to X.  ``weights`` holds the equivalent kernel
    row l with y^ = l . y.  At lam = 0 a singular system gets one jitter of
    1e-10 trace before giving up.
    """
    if lam < 0:
        raise InvalidParameter(f"ridge lambda must be >= 0, got {lam}")
    Y = data.target_matrix
    Xa = _augment(data.X)
    xa = _augment(as_point(xstar))[0]
    w = local_weights(k, data.X, xstar)
    A = Xa.T @ (w[:, None] * Xa) + lam * np.eye(Xa.shape[1])

    jittered = False
    rhs = np.column_stack([xa, Xa.T @ (w[:, None] * Y)])
    try:
        sol = _solve(A, rhs)
    except (linalg.LinAlgError, linalg.LinAlgWarning):
        if lam > 0:
            raise SingularSystem("ridge system is singular")
        bump = JITTER * np.trace(A)
        logger.warning(f"singular local design, adding jitter {bump:.3g}")
        jittered = True
        try:
            sol = _solve(A + bump * np.eye(A.shape[0]), rhs)
        except (linalg.LinAlgError, linalg.LinAlgWarning):
            raise SingularSystem("local design stays singular after jitter")

    z, beta = sol[:, 0], sol[:, 1:]
    eq = w * (Xa @ z)
    prediction = eq @ Y
    resid = Y - Xa @ beta
    value = float(w @ (resid**2).sum(axis=1))
    return LocalFitResult(
        theta=data.shape_prediction(prediction[None, :])[0],
        loss_value=value,
        weights=eq,
        jittered=jittered,
    )


def local_linear_transform(k, data, queries, lam=0.0):
    """Predictions and equivalent-kernel rows for a batch of queries"""
    Q = as_points(queries)
    fits = [local_linear_predict(k, data, q, lam) for q in Q]
    preds = np.array([f.theta for f in fits])
    weights = np.vstack([f.weights for f in fits])
    return preds, weights
