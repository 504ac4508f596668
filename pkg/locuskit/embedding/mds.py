""" mds v0.2
Asymmetric MDS factorizations K ~ Phi Psi^T and the co-occurrence word
embedding built on them
"""

# Imports
import re
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations
from typing import List

import numpy as np

from locuskit.errors import EmptyCorpus, InvalidParameter, NegativeInputForNMF
from locuskit.kernel_core import KernelMatrix
from locuskit.mylog import get_logger

logger = get_logger(__name__)

NMF_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Factorization(object):
    phi: np.ndarray
    psi: np.ndarray
    strain: float
    trace: List[float] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class WordVectors(object):
    vocabulary: List[str]
    inputs: np.ndarray
    outputs: np.ndarray
    counts: np.ndarray

    def index(self, word):
        return self.vocabulary.index(word)

    def similarity(self, a, b):
        """v_I(a) . v_O(b)"""
        return float(self.inputs[self.index(a)] @ self.outputs[self.index(b)])


def strain(K, phi, psi):
    return float(((K - phi @ psi.T) ** 2).sum())


def _signed_svd(K, q):
    U, s, Vt = np.linalg.svd(K, full_matrices=False)
    U, s, V = U[:, :q], s[:q], Vt[:q].T
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(q)])
    signs[signs == 0] = 1.0
    root = np.sqrt(s)
    return U * signs * root, V * signs * root


def amds_factorize(K, q, method="svd", iters=200, seed=0):
    """(KernelMatrix | ndarray, int, str) -> Factorization

    svd: Phi = U_q S_q^1/2, Psi = V_q S_q^1/2, the best rank-q approximation.
    nmf: Lee-Seung multiplicative updates from a seeded positive start; the
    strain after every sweep is kept in ``trace``.
    """
    K = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    if K.ndim != 2:
        raise InvalidParameter(f"expected a 2-D matrix, got {K.shape}")
    if not 1 <= q <= min(K.shape):
        raise InvalidParameter(f"q must lie in [1, {min(K.shape)}], got {q}")

    if method == "svd":
        phi, psi = _signed_svd(K, q)
        value = strain(K, phi, psi)
        return Factorization(phi=phi, psi=psi, strain=value, trace=[value])
    if method != "nmf":
        raise InvalidParameter(f"unknown factorization method {method!r}")
    if np.any(K < 0):
        raise NegativeInputForNMF("NMF needs a non-negative matrix")
    if iters < 1:
        raise InvalidParameter(f"iters must be >= 1, got {iters}")

    rng = np.random.default_rng(seed)
    scale = np.sqrt(max(K.mean(), NMF_FLOOR) / q)
    phi = scale * rng.uniform(0.5, 1.5, (K.shape[0], q))
    psi = scale * rng.uniform(0.5, 1.5, (K.shape[1], q))
    trace = [strain(K, phi, psi)]
    for _ in range(int(iters)):
        psi *= (K.T @ phi) / (psi @ (phi.T @ phi) + NMF_FLOOR)
        phi *= (K @ psi) / (phi @ (psi.T @ psi) + NMF_FLOOR)
        trace.append(strain(K, phi, psi))
    logger.debug(f"nmf strain {trace[0]:.4g} -> {trace[-1]:.4g} over {iters} sweeps")
    return Factorization(phi=phi, psi=psi, strain=trace[-1], trace=trace)


def cooccurrence_counts(windows):
    """Sorted vocabulary and the count matrix over ordered position pairs"""
    windows = [list(w) for w in windows if len(w) > 0]
    vocabulary = sorted({s for w in windows for s in w})
    if not vocabulary:
        raise EmptyCorpus("no symbols in the corpus")
    lookup = {s: i for i, s in enumerate(vocabulary)}
    pairs = Counter()
    for w in windows:
        for a, b in permutations(range(len(w)), 2):
            pairs[(lookup[w[a]], lookup[w[b]])] += 1
    C = np.zeros((len(vocabulary), len(vocabulary)))
    for (i, j), n in pairs.items():
        C[i, j] = n
    return vocabulary, C


def cooccurrence_embed(windows, d):
    """(list of symbol windows, int) -> WordVectors

    Rank-d SVD of log(1 + counts): inputs U_d S_d^1/2, outputs V_d S_d^1/2.
    """
    vocabulary, C = cooccurrence_counts(windows)
    if not 1 <= d < len(vocabulary):
        raise InvalidParameter(f"d must lie in [1, {len(vocabulary) - 1}], got {d}")
    inputs, outputs = _signed_svd(np.log1p(C), d)
    return WordVectors(vocabulary=vocabulary, inputs=inputs, outputs=outputs, counts=C)


def read_corpus(path, window):
    """Lowercased whitespace tokens of a text file cut into sliding windows"""
    if window < 1:
        raise InvalidParameter(f"window must be >= 1, got {window}")
    with open(path, encoding="utf-8") as fh:
        tokens = re.split(r"\s+", fh.read().lower().strip())
    tokens = [t for t in tokens if t]
    if not tokens:
        raise EmptyCorpus(f"no tokens in {path}")
    if len(tokens) <= window:
        return [tokens]
    return [tokens[i : i + window] for i in range(len(tokens) - window + 1)]
