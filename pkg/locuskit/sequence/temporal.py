""" temporal v0.2
Sequences, temporal kernel matrices and temporal local means
"""

# Imports
from dataclasses import dataclass
from typing import Optional

import numpy as np

from locuskit.errors import DimensionMismatch, InvalidParameter
from locuskit.kernel_core import (
    KernelMatrix,
    PositionEncoding,
    TemporalKernel,
    as_points,
    gram,
    normalize_rows,
    sinusoidal_table,
)
from locuskit.mylog import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Sequence(object):
    """T x p tokens with strictly increasing times (default 0..T-1)"""

    tokens: np.ndarray
    times: Optional[np.ndarray] = None

    def __post_init__(self):
        tokens = as_points(self.tokens)
        T = tokens.shape[0]
        if T < 1:
            raise InvalidParameter("a sequence needs at least one token")
        times = (
            np.arange(T, dtype=float)
            if self.times is None
            else np.asarray(self.times, dtype=float).reshape(-1)
        )
        if times.size != T:
            raise DimensionMismatch(f"{times.size} times for {T} tokens")
        if np.any(np.diff(times) <= 0):
            raise InvalidParameter("times must be strictly increasing")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "times", times)

    @property
    def T(self):
        return self.tokens.shape[0]

    @property
    def p(self):
        return self.tokens.shape[1]

    @property
    def points(self):
        """[t | x] rows, the input format of temporal kernels"""
        return np.column_stack([self.times, self.tokens])

    def append(self, token):
        token = np.asarray(token, dtype=float).reshape(1, -1)
        return Sequence(
            np.vstack([self.tokens, token]), np.append(self.times, self.times[-1] + 1.0)
        )

    def with_tokens(self, tokens):
        return Sequence(tokens, self.times)


def sinusoidal_encoding(T, p, base=10000.0):
    """T x p absolute position table: sin on even columns, cos on odd ones"""
    return sinusoidal_table(np.arange(T, dtype=float), p, base)


def temporal_gram(static_k, pe, seq, causal=False, hollow=False):
    """(Kernel, PositionEncoding, Sequence, bool, bool) -> KernelMatrix

    K(x_t, t, x_s, s) = K1(x_t, x_s) K2(t, s) per the encoding; causal zeroes
    s > t and hollow zeroes the diagonal.
    """
    pe = pe if pe is not None else PositionEncoding()
    K = gram(TemporalKernel(static=static_k, encoding=pe, causal=causal), seq.points)
    return K.hollow() if hollow else K


def temporal_local_mean(seq, gram_matrix):
    """(Sequence, KernelMatrix) -> Sequence

    x^_t = sum_s K_ts x_s / sum_s K_ts.  Rows without mass pass through.
    """
    values = (
        gram_matrix.values
        if isinstance(gram_matrix, KernelMatrix)
        else np.asarray(gram_matrix, dtype=float)
    )
    if values.shape != (seq.T, seq.T):
        raise DimensionMismatch(f"gram is {values.shape}, sequence has T={seq.T}")
    Kt = normalize_rows(values)
    out = Kt.values @ seq.tokens
    if Kt.has_empty_rows:
        rows = list(Kt.empty_rows)
        logger.debug(f"{len(rows)} positions without visible keys pass through")
        out[rows] = seq.tokens[rows]
    return seq.with_tokens(out)
