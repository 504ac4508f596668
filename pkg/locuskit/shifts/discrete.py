""" discrete v0.2
Shift iterations whose states are discrete: ModeShift (Hopfield recall),
MedoidShift, nearest-neighbour shift and relaxation labeling
"""

# Imports
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from locuskit.errors import EmptyNeighborhood, InvalidParameter
from locuskit.estimators.dataset import pairwise_distance
from locuskit.kernel_core import as_points, normalize_rows
from locuskit.mylog import get_logger
from locuskit.shifts.meanshift import extract_clusters

logger = get_logger(__name__)


def sign(v):
    """Elementwise sign with sign(0) = +1"""
    return np.where(np.asarray(v) >= 0, 1.0, -1.0)


def hopfield_energy(X, q):
    """-q^T G q with G = X^T X"""
    X = as_points(X)
    q = np.asarray(q, dtype=float)
    Gq = X.T @ (X @ q)
    return -float(q @ Gq)


@dataclass(frozen=True, eq=False)
class ModeShiftResult(object):
    patterns: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    cycled: np.ndarray
    previous: np.ndarray
    energy: List[List[float]]


def _check_binary(A, name):
    A = as_points(A)
    if not np.all(np.isin(A, (-1.0, 1.0))):
        raise InvalidParameter(f"{name} entries must be +1 or -1")
    return A


def _field(k, q, X):
    # sign of the unnormalized weighted sum equals the sign of m_K whenever the
    # degree is positive, and matches the Hopfield field G q for the dot kernel
    return k.matrix(q[None, :], X)[0] @ X


def mode_shift(k, X, queries, max_iter=100, update="sync"):
    """(Kernel, +-1 matrix, +-1 matrix, int, str) -> ModeShiftResult

    Iterates q <- sign(m_K(q; X)).  ``sync`` updates all coordinates at once
    and stops on a fixed point or a period-2 cycle (flagged, last two states
    returned).  ``async`` updates coordinates one at a time in index order;
    one iteration is one full sweep.
    """
    if update not in ("sync", "async"):
        raise InvalidParameter(f"unknown update {update!r}")
    X = _check_binary(X, "stored patterns")
    Q = _check_binary(queries, "queries").copy()
    n = Q.shape[0]
    iterations = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    cycled = np.zeros(n, dtype=bool)
    previous = Q.copy()
    energy = [[hopfield_energy(X, q)] for q in Q]

    for i in range(n):
        q = Q[i].copy()
        before = None
        for _ in range(max_iter):
            if update == "sync":
                new = sign(_field(k, q, X))
            else:
                new = q.copy()
                for j in range(new.size):
                    new[j] = sign(_field(k, new, X)[j])
            if np.array_equal(new, q):
                converged[i] = True
                break
            if before is not None and np.array_equal(new, before):
                cycled[i] = True
                logger.warning(f"query {i} oscillates with period 2")
                previous[i] = q
                q = new
                iterations[i] += 1
                break
            before = q
            previous[i] = q
            q = new
            iterations[i] += 1
            energy[i].append(hopfield_energy(X, q))
        Q[i] = q
    return ModeShiftResult(
        patterns=Q,
        iterations=iterations,
        converged=converged,
        cycled=cycled,
        previous=previous,
        energy=energy,
    )


@dataclass(frozen=True, eq=False)
class MedoidShiftResult(object):
    mapping: np.ndarray
    representatives: np.ndarray
    labels: np.ndarray
    medoids: np.ndarray

    @property
    def n_clusters(self):
        return int(self.medoids.size)


def _follow(mapping):
    """Terminal representative of every index: the minimum index of the cycle
    the mapping eventually enters"""
    n = mapping.size
    rep = np.full(n, -1)
    for start in range(n):
        if rep[start] >= 0:
            continue
        path = []
        seen = {}
        i = start
        while rep[i] < 0 and i not in seen:
            seen[i] = len(path)
            path.append(i)
            i = mapping[i]
        if rep[i] >= 0:
            target = rep[i]
        else:
            cycle = path[seen[i] :]
            target = min(cycle)
        for j in path:
            rep[j] = target
    return rep


def _densify(values):
    _, first = np.unique(values, return_index=True)
    order = np.unique(values)[np.argsort(first, kind="stable")]
    lookup = {v: c for c, v in enumerate(order)}
    return np.array([lookup[v] for v in values]), order


def medoid_shift(k, X, d="sqeuclidean", merge_radius=None):
    """(Kernel, PointSet, distance) -> MedoidShiftResult

    Maps i -> argmin_j (K~ D)_ij (lowest j on ties), follows the mapping to
    its terminal cycle and represents each cycle by its minimum index.  With
    a merge_radius, representatives closer than it are merged afterwards.
    """
    X = as_points(X)
    Kt = normalize_rows(k.matrix(X, X))
    if Kt.has_empty_rows:
        raise EmptyNeighborhood(
            "medoid shift row without kernel mass", rows=list(Kt.empty_rows)
        )
    D = pairwise_distance(d, X, X)
    mapping = np.argmin(Kt.values @ D, axis=1)
    rep = _follow(mapping)
    if merge_radius is not None:
        reps = np.unique(rep)
        merged, _ = extract_clusters(X[reps], merge_radius)
        head = {}
        for r, c in zip(reps, merged):
            head.setdefault(c, r)
        rep = np.array([head[merged[np.searchsorted(reps, r)]] for r in rep])
    labels, medoids = _densify(rep)
    return MedoidShiftResult(
        mapping=mapping, representatives=rep, labels=labels, medoids=medoids
    )


@dataclass(frozen=True, eq=False)
class NNShiftResult(object):
    labels: np.ndarray
    edges: List[Tuple[int, int]]
    sweeps: int


def nn_shift(X, seeds, delta, seed_labels=None):
    """(PointSet, indices, float) -> NNShiftResult

    Each sweep labels every unlabeled point that has a labeled point closer
    than delta, taking the nearest such point (lowest index on ties) as its
    parent.  Unreached points keep -1.
    """
    if not delta > 0:
        raise InvalidParameter(f"delta must be positive, got {delta}")
    X = as_points(X)
    seeds = np.asarray(seeds, dtype=int)
    if seeds.size == 0:
        raise InvalidParameter("nn_shift needs at least one seed")
    labels = np.full(X.shape[0], -1)
    labels[seeds] = (
        np.arange(seeds.size) if seed_labels is None else np.asarray(seed_labels)
    )
    D = cdist(X, X)
    edges = []
    sweeps = 0
    while True:
        known = np.flatnonzero(labels >= 0)
        todo = np.flatnonzero(labels < 0)
        if todo.size == 0:
            break
        sub = D[np.ix_(todo, known)]
        sub = np.where(sub < delta, sub, np.inf)
        best = np.argmin(sub, axis=1)
        reach = np.isfinite(sub[np.arange(todo.size), best])
        if not reach.any():
            break
        sweeps += 1
        for u, b in zip(todo[reach], best[reach]):
            parent = known[b]
            labels[u] = labels[parent]
            edges.append((int(parent), int(u)))
    reached = int((labels >= 0).sum())
    logger.debug(f"nn shift labeled {reached} points in {sweeps} sweeps")
    return NNShiftResult(labels=labels, edges=edges, sweeps=sweeps)


@dataclass(frozen=True, eq=False)
class RelaxationResult(object):
    labels: np.ndarray
    R: np.ndarray
    iterations: int
    converged: bool
    frozen: Tuple[int, ...]


def relaxation_label(k, X, init, mode="soft", max_iter=100, tol=1e-10):
    """(Kernel, PointSet, labels | R, str) -> RelaxationResult

    soft: R <- normalize_rows(K) R with rows renormalized, until the largest
    change drops below tol.  hard: labels <- argmax of class weight sums.
    Rows without kernel mass keep their initial assignment.
    """
    if mode not in ("soft", "hard"):
        raise InvalidParameter(f"unknown mode {mode!r}")
    X = as_points(X)
    init = np.asarray(init)
    if init.ndim == 1:
        R = np.eye(int(init.max()) + 1)[init.astype(int)]
    else:
        R = np.asarray(init, dtype=float)
        if np.any(R < 0) or not np.allclose(R.sum(axis=1), 1.0):
            raise InvalidParameter("rows of R must be probability vectors")
    if R.shape[0] != X.shape[0]:
        raise InvalidParameter("one initial assignment per point is required")
    K = k.matrix(X, X)
    Kt = normalize_rows(K)
    frozen = np.zeros(X.shape[0], dtype=bool)
    frozen[list(Kt.empty_rows)] = True
    if frozen.any():
        logger.warning(f"{int(frozen.sum())} rows without kernel mass stay frozen")

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if mode == "soft":
            new = Kt.values @ R
            new[frozen] = R[frozen]
            new = new / new.sum(axis=1, keepdims=True)
            change = np.abs(new - R).max()
            R = new
            if change < tol:
                converged = True
                break
        else:
            scores = K @ R
            hard = np.argmax(scores, axis=1)
            new = np.eye(R.shape[1])[hard]
            new[frozen] = R[frozen]
            same = np.array_equal(new, R)
            R = new
            if same:
                converged = True
                break
    return RelaxationResult(
        labels=np.argmax(R, axis=1),
        R=R,
        iterations=it,
        converged=converged,
        frozen=tuple(np.flatnonzero(frozen)),
    )
