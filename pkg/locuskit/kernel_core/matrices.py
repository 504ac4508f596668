""" matrices v0.2
Kernel matrices, their row normalization and Laplacians, and the smoothing
space utilities built on them
"""

# Imports
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from locuskit.errors import (
    DesmoothingInput,
    DimensionMismatch,
    InvalidParameter,
    NotSquare,
)
from locuskit.kernel_core.kernels import as_points, point_set_id
from locuskit.mylog import get_logger

logger = get_logger(__name__)


def _frozen(values):
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class KernelMatrix(object):
    """N x M weight matrix with the provenance of the kernel and point sets"""

    values: np.ndarray
    kernel_id: str = "explicit"
    row_id: str = ""
    col_id: str = ""
    desmoothing: bool = False

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise DimensionMismatch(f"kernel matrix must be 2-D, got {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    @property
    def is_square(self):
        return self.values.shape[0] == self.values.shape[1]

    def hollow(self):
        """Copy with the diagonal zeroed"""
        if not self.is_square:
            raise NotSquare("only square kernel matrices can be hollowed")
        values = self.values.copy()
        np.fill_diagonal(values, 0.0)
        return KernelMatrix(
            values,
            self.kernel_id + "+hollow",
            self.row_id,
            self.col_id,
            self.desmoothing,
        )


@dataclass(frozen=True, eq=False)
class StochasticMatrix(object):
    """Row-normalized kernel matrix D^-1 K

    ``degrees`` keeps the original row sums; rows with zero degree stay zero and
    are listed in ``empty_rows``.
    """

    values: np.ndarray
    degrees: np.ndarray
    empty_rows: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "degrees", _frozen(self.degrees))
        object.__setattr__(self, "empty_rows", tuple(int(i) for i in self.empty_rows))

    @property
    def shape(self):
        return self.values.shape

    @property
    def has_empty_rows(self):
        return len(self.empty_rows) > 0

    def apply(self, y):
        """K~ y for a vector or matrix of targets"""
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.values.shape[1]:
            raise DimensionMismatch(
                f"targets have {y.shape[0]} rows, "
                f"matrix has {self.values.shape[1]} columns"
            )
        return self.values @ y

    def power(self, n):
        """K~^n, itself a stochastic matrix on the rows that stay non-empty"""
        if self.values.shape[0] != self.values.shape[1]:
            raise NotSquare("matrix powers need a square matrix")
        if n < 1:
            raise InvalidParameter(f"power must be >= 1, got {n}")
        return normalize_rows(np.linalg.matrix_power(self.values, int(n)))


@dataclass(frozen=True, eq=False)
class LaplacianView(object):
    raw: np.ndarray
    normalized: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "raw", _frozen(self.raw))
        object.__setattr__(self, "normalized", _frozen(self.normalized))


# Functions
def gram(k, rows, cols=None):
    """(Kernel, PointSet, PointSet) -> KernelMatrix

    values[i, j] = K(rows[i], cols[j]).  cols defaults to rows.
    """
    rows = as_points(rows)
    cols = rows if cols is None else as_points(cols)
    values = k.matrix(rows, cols)
    return KernelMatrix(
        values=values,
        kernel_id=k.kernel_id,
        row_id=point_set_id(rows),
        col_id=point_set_id(cols),
        desmoothing=k.desmoothing,
    )


def _values_of(K):
    if isinstance(K, (KernelMatrix, StochasticMatrix)):
        return K.values
    return np.asarray(K, dtype=float)


def normalize_rows(K):
    """(KernelMatrix | ndarray) -> StochasticMatrix"""
    if isinstance(K, KernelMatrix) and K.desmoothing:
        raise DesmoothingInput(
            f"kernel {K.kernel_id} is desmoothing and cannot be row-normalized"
        )
    values = _values_of(K)
    if values.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got {values.shape}")
    if np.any(values < 0):
        raise DesmoothingInput("matrix has negative entries")
    degrees = values.sum(axis=1)
    empty = np.flatnonzero(degrees <= 0)
    safe = np.where(degrees > 0, degrees, 1.0)
    normalized = values / safe[:, None]
    if empty.size:
        logger.debug(f"{empty.size} empty rows left as zero rows")
    return StochasticMatrix(values=normalized, degrees=degrees, empty_rows=empty)


def laplacian_of(K):
    """(KernelMatrix | ndarray) -> LaplacianView

    raw = D - K, normalized = I - D^-1 K.
    """
    values = _values_of(K)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise NotSquare(f"Laplacian needs a square matrix, got {values.shape}")
    Kt = normalize_rows(K)
    raw = np.diag(Kt.degrees) - values
    normalized = np.eye(values.shape[0]) - Kt.values
    return LaplacianView(raw=raw, normalized=normalized)


def _stochastic_values(Kt):
    if isinstance(Kt, StochasticMatrix):
        return Kt.values
    return np.asarray(Kt, dtype=float)


def smoothing_norm(Kt, f, m=1):
    """(StochasticMatrix, vector, int) -> float

    ||(I - K~)^m f||_2 (Frobenius norm for matrix-valued f).
    """
    values = _stochastic_values(Kt)
    f = np.asarray(f, dtype=float)
    if f.shape[0] != values.shape[1] or values.shape[0] != values.shape[1]:
        raise DimensionMismatch(f"f has {f.shape[0]} rows, matrix is {values.shape}")
    if m < 1:
        raise InvalidParameter(f"order m must be >= 1, got {m}")
    r = f
    for _ in range(int(m)):
        r = r - values @ r
    return float(np.linalg.norm(r))


def smoothing_distance(Kt, f, g):
    """||K~ (f - g)||_2, the discrepancy of two signals after smoothing"""
    values = _stochastic_values(Kt)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.shape[0] != values.shape[1]:
        raise DimensionMismatch("signals must match each other and the matrix")
    return float(np.linalg.norm(values @ (f - g)))


def filter_solve(Kt, g, lam):
    """(StochasticMatrix, vector, float) -> vector

    Minimizes ||f - g||^2 + lam ||(I - K~) f||^2 by solving
    (I + lam L^T L) f = g with L = I - K~.
    """
    if not lam > 0:
        raise InvalidParameter(f"lambda must be positive, got {lam}")
    values = _stochastic_values(Kt)
    g = np.asarray(g, dtype=float)
    n = values.shape[0]
    if values.shape[1] != n or g.shape[0] != n:
        raise DimensionMismatch(f"g has {g.shape[0]} rows, matrix is {values.shape}")
    L = np.eye(n) - values
    A = np.eye(n) + lam * (L.T @ L)
    return linalg.solve(A, g, assume_a="pos")
