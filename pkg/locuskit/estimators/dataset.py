""" dataset v0.1
Sample containers shared by the local estimators
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from locuskit.errors import DimensionMismatch, EmptyNeighborhood, InvalidParameter
from locuskit.kernel_core import as_point, as_points


@dataclass(frozen=True, eq=False)
class Dataset(object):
    """N x p design with optional real targets ``y`` and/or integer ``labels``"""

    X: np.ndarray
    y: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        X = as_points(self.X)
        if X.shape[0] < 1:
            raise InvalidParameter("a dataset needs at least one sample")
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.asarray(self.y, dtype=float)
            if y.ndim not in (1, 2) or y.shape[0] != X.shape[0]:
                raise DimensionMismatch(
                    f"targets of shape {y.shape} do not match {X.shape[0]} samples"
                )
            object.__setattr__(self, "y", y)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.ndim != 1 or labels.shape[0] != X.shape[0]:
                raise DimensionMismatch("labels must be one per sample")
            if np.any(labels != np.round(labels)) or np.any(labels < 0):
                raise InvalidParameter("labels must be integers in 0..C-1")
            object.__setattr__(self, "labels", labels.astype(int))

    @property
    def N(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def n_classes(self):
        return int(self.require_labels().max()) + 1

    def require_targets(self):
        if self.y is None:
            raise InvalidParameter("this estimator needs real targets")
        return self.y

    def require_labels(self):
        if self.labels is None:
            raise InvalidParameter("this estimator needs class labels")
        return self.labels

    @property
    def target_matrix(self):
        y = self.require_targets()
        return y.reshape(self.N, -1)

    def shape_prediction(self, P):
        """Drops the trailing axis again when the targets are a plain vector"""
        if self.y is not None and self.y.ndim == 1:
            return P[..., 0]
        return P

    def without(self, i):
        """Copy with sample i removed"""
        keep = np.arange(self.N) != i
        return Dataset(
            X=self.X[keep],
            y=None if self.y is None else self.y[keep],
            labels=None if self.labels is None else self.labels[keep],
        )


@dataclass(frozen=True, eq=False)
class LocalFitResult(object):
    """theta(x*) with its local loss and, for linear-in-y fits, the
    equivalent weight row"""

    theta: object
    loss_value: float
    weights: Optional[np.ndarray] = None
    converged: bool = True
    jittered: bool = False
    iterations: int = 0


# Helper functions
def local_weights(k, X, xstar):
    """Row of kernel weights K(x*, x_i)"""
    return k.matrix(as_point(xstar), X)[0]


def require_mass(w, message="all kernel weights are zero at the query"):
    total = w.sum()
    if not total > 0:
        raise EmptyNeighborhood(message)
    return total


def pairwise_distance(d, A, B):
    """Distance matrix for a metric name understood by cdist or a callable
    d(A, B) returning the full matrix"""
    A = as_points(A)
    B = as_points(B)
    if callable(d):
        return np.asarray(d(A, B), dtype=float)
    return cdist(A, B, d)
