""" transformer v0.2
Attention layers, the encoder stack f_L(m_KL(... f_1(m_K1(x)) ...)), the
hierarchical local-local mean and autoregressive completion
"""

# Imports
from dataclasses import dataclass
from typing import Optional

import numpy as np

from locuskit.adaptive.qkv import attention_from_features, visible_keys
from locuskit.errors import EmptyNeighborhood, InvalidParameter, ShapeMismatch
from locuskit.kernel_core import (
    PositionEncoding,
    as_points,
    gram,
    normalize_rows,
    uniform,
)
from locuskit.mylog import get_logger
from locuskit.sequence.temporal import (
    Sequence,
    sinusoidal_encoding,
    temporal_gram,
    temporal_local_mean,
)

logger = get_logger(__name__)

DEFAULT_DEPTH = 6
LAYER_MODES = ("qkv", "uniform", "dirac")
ACTIVATIONS = {
    "identity": lambda Z: Z,
    "relu": lambda Z: np.maximum(Z, 0.0),
    "tanh": np.tanh,
}


def attention_weights(Phi, Psi, causal=False, hollow=False):
    """softmax(Phi Psi^T / sqrt d + mask); rows with no visible key are zero"""
    Phi = as_points(Phi)
    Psi = as_points(Psi)
    if Phi.shape != Psi.shape:
        raise ShapeMismatch(f"queries {Phi.shape} and keys {Psi.shape} differ")
    A, _, _ = attention_from_features(
        Phi, Psi, "softmax", visible_keys(Phi.shape[0], causal, hollow)
    )
    return A


def _attend(A, V):
    out = A @ V
    empty = A.sum(axis=1) == 0
    out[empty] = V[empty]
    return out


def attention_layer(V, Phi, Psi, causal=False):
    """(T x q, T x d, T x d, bool) -> T x q"""
    V = as_points(V)
    A = attention_weights(Phi, Psi, causal)
    if V.shape[0] != A.shape[0]:
        raise ShapeMismatch(f"{V.shape[0]} values for {A.shape[0]} positions")
    return _attend(A, V)


@dataclass(frozen=True, eq=False)
class Mlp(object):
    """Pointwise two-layer map relu(x W1 + b1) W2 + b2"""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __call__(self, X):
        if X.shape[1] != self.w1.shape[0]:
            raise ShapeMismatch(
                f"mlp expects width {self.w1.shape[0]}, got {X.shape[1]}"
            )
        return np.maximum(X @ self.w1 + self.b1, 0.0) @ self.w2 + self.b2


@dataclass(frozen=True, eq=False)
class TransformerLayer(object):
    """One attention local mean followed by an optional MLP

    qkv: attention with queries X wq, keys X wk and values X wv (X when wv is
    None).  uniform: equal weight on every visible key.  dirac: identity.
    """

    mode: str = "qkv"
    wq: Optional[np.ndarray] = None
    wk: Optional[np.ndarray] = None
    wv: Optional[np.ndarray] = None
    mlp: Optional[Mlp] = None

    def __post_init__(self):
        if self.mode not in LAYER_MODES:
            raise InvalidParameter(f"unknown layer mode {self.mode!r}")
        if self.mode == "qkv" and (self.wq is None or self.wk is None):
            raise InvalidParameter("qkv layers need query and key projections")
        if self.mode == "qkv" and self.wq.shape != self.wk.shape:
            raise ShapeMismatch("query and key projections must share a shape")

    def weights(self, X, causal=False):
        T = X.shape[0]
        if self.mode == "dirac":
            return np.eye(T)
        if self.mode == "uniform":
            A = visible_keys(T, causal).astype(float)
            return A / A.sum(axis=1, keepdims=True)
        if X.shape[1] != self.wq.shape[0]:
            raise ShapeMismatch(
                f"layer expects width {self.wq.shape[0]}, got {X.shape[1]}"
            )
        return attention_weights(X @ self.wq, X @ self.wk, causal)

    def __call__(self, X, causal=False):
        A = self.weights(X, causal)
        V = X if self.wv is None else X @ self.wv
        out = _attend(A, V)
        return out if self.mlp is None else self.mlp(out)


def transformer_encode(seq, layers, causal=False, residual=False, encoding="none"):
    """(Sequence, list of TransformerLayer, bool, bool, str) -> Sequence

    Plain alternation of attention local means and pointwise MLPs.  With
    ``residual`` each layer adds its input back.  ``encoding="sinusoidal"``
    adds the absolute position table to the tokens first.
    """
    if encoding not in ("none", "sinusoidal"):
        raise InvalidParameter(f"unknown encoding {encoding!r}")
    X = seq.tokens
    if encoding == "sinusoidal":
        X = X + sinusoidal_encoding(seq.T, seq.p)
    for layer in layers:
        out = layer(X, causal)
        if residual:
            if out.shape != X.shape:
                raise ShapeMismatch("residual layers must keep the token width")
            out = X + out
        X = out
    return Sequence(X, seq.times)


def init_layers(p, d, H, L=DEFAULT_DEPTH, seed=0):
    """Random qkv layers of width p with d-dim attention and MLP width H"""
    if min(p, d, H, L) < 1:
        raise InvalidParameter("p, d, H and L must all be >= 1")
    rng = np.random.default_rng(seed)
    layers = []
    for _ in range(int(L)):
        mlp = Mlp(
            w1=rng.standard_normal((p, H)) / np.sqrt(p),
            b1=np.zeros(H),
            w2=rng.standard_normal((H, p)) / np.sqrt(H),
            b2=np.zeros(p),
        )
        layers.append(
            TransformerLayer(
                mode="qkv",
                wq=rng.standard_normal((p, d)) / np.sqrt(p),
                wk=rng.standard_normal((p, d)) / np.sqrt(p),
                wv=rng.standard_normal((p, p)) / np.sqrt(p),
                mlp=mlp,
            )
        )
    return layers


def _smooth(k, X):
    Kt = normalize_rows(gram(k, X))
    if Kt.has_empty_rows:
        raise EmptyNeighborhood(
            "local-local mean row without kernel mass", rows=list(Kt.empty_rows)
        )
    return Kt.values @ X


def local_local_mean(X, k1, k2, f="identity"):
    """X^ = K~' f(K~ X) with K~' built over the intermediate points"""
    if f not in ACTIVATIONS:
        raise InvalidParameter(f"unknown nonlinearity {f!r}")
    inner = ACTIVATIONS[f](_smooth(k1, as_points(X)))
    return _smooth(k2, inner)


def causal_window_mean(delta):
    """Model whose output at t is the mean of tokens in the causal window"""
    pe = PositionEncoding(kind="window", delta=delta)

    def model(seq):
        return temporal_local_mean(seq, temporal_gram(uniform(), pe, seq, causal=True))

    return model


def causal_transformer(layers, residual=False):
    def model(seq):
        return transformer_encode(seq, layers, causal=True, residual=residual)

    return model


def autoregressive_complete(prefix, model, steps):
    """(Sequence, model, int) -> Sequence

    Appends model(seq) at the last position as the next token, ``steps``
    times, with unit time increments.
    """
    if steps < 1:
        raise InvalidParameter(f"steps must be >= 1, got {steps}")
    seq = prefix
    for _ in range(int(steps)):
        out = model(seq)
        tokens = out.tokens if isinstance(out, Sequence) else as_points(out)
        seq = seq.append(tokens[-1])
    return seq


def previous_token(seq):
    """Dirac-at-previous model: the output at t is x_t itself"""
    return seq.with_tokens(seq.tokens.copy())

