""" qkv v0.2
Query-key-value self local means: the linear and softmax attention forms, the
multi-head autoencoder and plain gradient-descent fitting

A head holds per-token query features phi, key features psi and values.  The
token at sequence position t attends to position s with weight
F(phi[tok_t] + pos_t, psi[tok_s] + pos_s) normalized over the visible keys,
where F is exp(<.,.> / sqrt d) (softmax form) or <softplus ., softplus .>
(linear form).  Positions without a visible key pass their own value through.
"""

# Imports
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit, softmax

from locuskit.errors import InvalidParameter, NonFiniteLoss, ShapeMismatch
from locuskit.mylog import get_logger

logger = get_logger(__name__)

QKV_FORMS = ("linear", "softmax")
INITS = ("uniform", "zeros")
INIT_SCALE = 0.1


@dataclass(frozen=True, eq=False)
class QkvHead(object):
    phi: np.ndarray
    psi: np.ndarray
    values: np.ndarray
    decoder: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class QkvParams(object):
    heads: Tuple[QkvHead, ...]
    form: str = "softmax"

    def __post_init__(self):
        if self.form not in QKV_FORMS:
            raise InvalidParameter(f"unknown attention form {self.form!r}")
        if len(self.heads) < 1:
            raise ShapeMismatch("at least one head is required")
        first = self.heads[0]
        for head in self.heads:
            if head.phi.ndim != 2 or head.phi.shape != head.psi.shape:
                raise ShapeMismatch("query and key features must share one n x d shape")
            if head.phi.shape != first.phi.shape:
                raise ShapeMismatch("every head needs the same feature shape")
            if head.values.ndim != 2 or head.values.shape[0] != head.phi.shape[0]:
                raise ShapeMismatch("one value row per token is required")
            if (head.decoder is None) != (first.decoder is None):
                raise ShapeMismatch("either every head has a decoder or none")
            if head.decoder is not None and (
                head.decoder.ndim != 2 or head.decoder.shape[1] != head.values.shape[1]
            ):
                raise ShapeMismatch("decoder columns must match the value width")
        if first.phi.shape[1] < 1:
            raise ShapeMismatch("feature dimension d must be >= 1")

    @property
    def d(self):
        return self.heads[0].phi.shape[1]

    @property
    def M(self):
        return len(self.heads)

    def arrays(self):
        """Flat name -> array mapping used by the objective and gradcheck"""
        out = {}
        for m, head in enumerate(self.heads):
            out[f"phi{m}"] = head.phi
            out[f"psi{m}"] = head.psi
            out[f"values{m}"] = head.values
            if head.decoder is not None:
                out[f"decoder{m}"] = head.decoder
        return out


@dataclass(frozen=True, eq=False)
class QkvFit(object):
    params: QkvParams
    trace: List[float]
    loss: float


def visible_keys(T, causal=False, hollow=False):
    """Boolean T x T mask of the keys each position may attend to"""
    mask = np.ones((T, T), dtype=bool)
    if causal:
        mask &= np.tri(T, dtype=bool)
    if hollow:
        np.fill_diagonal(mask, False)
    return mask


def softplus(Z):
    return np.logaddexp(0.0, Z)


def attention_from_features(Q, K, form, visible):
    """(T x d, T x d, str, mask) -> (A, empty rows, S)

    Rows of A sum to one over the visible keys; rows without visible keys are
    all zero and flagged in ``empty``.
    """
    empty = ~visible.any(axis=1)
    if form == "softmax":
        S = np.where(visible, Q @ K.T / np.sqrt(Q.shape[1]), -np.inf)
        S[empty] = 0.0
        A = softmax(S, axis=1)
    else:
        S = (softplus(Q) @ softplus(K).T) * visible
        r = S.sum(axis=1, keepdims=True)
        A = S / np.where(r > 0, r, 1.0)
    A[empty] = 0.0
    return A, empty, S


def _inputs(n, tokens, positions, d):
    tok = np.arange(n) if tokens is None else np.asarray(tokens, dtype=int)
    if tok.ndim != 1 or tok.size < 1 or tok.min() < 0 or tok.max() >= n:
        raise ShapeMismatch(f"tokens must index the {n} parameter rows")
    if positions is None:
        return tok, np.zeros((tok.size, d))
    pos = np.asarray(positions, dtype=float)
    if pos.shape != (tok.size, d):
        raise ShapeMismatch(f"position features must be {tok.size} x {d}")
    return tok, pos


def _forward(phi, psi, values, form, tok, pos, visible):
    Q = phi[tok] + pos
    K = psi[tok] + pos
    Vt = values[tok]
    A, empty, S = attention_from_features(Q, K, form, visible)
    H = A @ Vt
    H[empty] = Vt[empty]
    return H, (Q, K, Vt, A, empty, S)


def head_output(head, form, tokens=None, positions=None, causal=False, hollow=False):
    """V^ of one head, a T x q matrix"""
    tok, pos = _inputs(head.phi.shape[0], tokens, positions, head.phi.shape[1])
    visible = visible_keys(tok.size, causal, hollow)
    H, _ = _forward(head.phi, head.psi, head.values, form, tok, pos, visible)
    return H


def _backward(form, cache, G_H, tok, n, pos_shape):
    Q, K, Vt, A, empty, S = cache
    G_A = G_H @ Vt.T
    G_Vt = A.T @ G_H
    G_Vt[empty] += G_H[empty]
    centered = G_A - (G_A * A).sum(axis=1, keepdims=True)
    if form == "softmax":
        G_S = A * centered
        scale = 1.0 / np.sqrt(Q.shape[1])
        G_Q = G_S @ K * scale
        G_K = G_S.T @ Q * scale
    else:
        r = S.sum(axis=1, keepdims=True)
        G_S = np.where(S > 0, centered / np.where(r > 0, r, 1.0), 0.0)
        G_S[empty] = 0.0
        G_Q = (G_S @ softplus(K)) * expit(Q)
        G_K = (G_S.T @ softplus(Q)) * expit(K)
    g_phi = np.zeros((n, pos_shape[1]))
    g_psi = np.zeros((n, pos_shape[1]))
    g_values = np.zeros((n, Vt.shape[1]))
    np.add.at(g_phi, tok, G_Q)
    np.add.at(g_psi, tok, G_K)
    np.add.at(g_values, tok, G_Vt)
    return g_phi, g_psi, g_values


def qkv_objective(
    V,
    form="softmax",
    tokens=None,
    positions=None,
    causal=False,
    hollow=True,
    target=None,
):
    """Builds f(arrays) -> (loss, gradients) for the QKV reconstruction loss

    Without a target the loss is ||V[tok] - mean_m V^_m||^2 with V fixed.
    With a target X it is ||X - mean_m V^_m W_m^T||^2 and every ``values{m}``
    and ``decoder{m}`` entry present in ``arrays`` is differentiated too.
    """
    if form not in QKV_FORMS:
        raise InvalidParameter(f"unknown attention form {form!r}")
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise ShapeMismatch(f"values must be a matrix, got {V.shape}")
    n = V.shape[0]
    X = None if target is None else np.asarray(target, dtype=float)

    def objective(arrays):
        M = sum(1 for key in arrays if key.startswith("phi"))
        d = arrays["phi0"].shape[1]
        tok, pos = _inputs(n, tokens, positions, d)
        visible = visible_keys(tok.size, causal, hollow)
        outs = []
        for m in range(M):
            values = arrays.get(f"values{m}", V)
            phi, psi = arrays[f"phi{m}"], arrays[f"psi{m}"]
            outs.append(_forward(phi, psi, values, form, tok, pos, visible))

        grads = {}
        if X is None:
            resid = sum(H for H, _ in outs) / M - V[tok]
            G_H = [2.0 * resid / M] * M
        else:
            if X.shape[0] != tok.size:
                raise ShapeMismatch("one target row per sequence position is required")
            decoded = sum(H @ arrays[f"decoder{m}"].T for m, (H, _) in enumerate(outs))
            resid = decoded / M - X
            G = 2.0 * resid
            G_H = []
            for m, (H, _) in enumerate(outs):
                W = arrays[f"decoder{m}"]
                G_H.append(G @ W / M)
                grads[f"decoder{m}"] = G.T @ H / M
        for m, (_, cache) in enumerate(outs):
            g_phi, g_psi, g_values = _backward(form, cache, G_H[m], tok, n, pos.shape)
            grads[f"phi{m}"] = g_phi
            grads[f"psi{m}"] = g_psi
            if f"values{m}" in arrays:
                grads[f"values{m}"] = g_values
        return float((resid**2).sum()), grads

    return objective


def _initial_arrays(V, d, heads, init, target, learn_values, rng):
    n = V.shape[0]
    arrays = {}
    for m in range(heads):
        for name in ("phi", "psi"):
            if init == "zeros":
                arrays[f"{name}{m}"] = np.zeros((n, d))
            else:
                arrays[f"{name}{m}"] = rng.uniform(-INIT_SCALE, INIT_SCALE, (n, d))
        if learn_values:
            arrays[f"values{m}"] = V.copy()
        if target is not None:
            arrays[f"decoder{m}"] = rng.uniform(
                -INIT_SCALE, INIT_SCALE, (target.shape[1], V.shape[1])
            )
    return arrays


def fit_qkv(
    V,
    d,
    form="softmax",
    lr=0.1,
    steps=500,
    seed=0,
    tokens=None,
    positions=None,
    causal=False,
    hollow=True,
    target=None,
    heads=1,
    learn_values=False,
    init="uniform",
):
    """(values, int, str, float, int, seed, ...) -> QkvFit

    Gradient descent with a fixed learning rate.  ``trace`` holds the loss
    before every step and after the last one.  Learned values start from V
    and need a decoder target.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise ShapeMismatch(f"values must be a matrix, got {V.shape}")
    if d < 1 or steps < 1 or heads < 1:
        raise InvalidParameter("d, steps and heads must all be >= 1")
    if not lr > 0:
        raise InvalidParameter(f"learning rate must be positive, got {lr}")
    if init not in INITS:
        raise InvalidParameter(f"unknown init {init!r}")
    if learn_values and target is None:
        raise InvalidParameter("learned values need a decoder target")
    X = None if target is None else np.asarray(target, dtype=float)

    rng = np.random.default_rng(seed)
    arrays = _initial_arrays(V, int(d), int(heads), init, X, learn_values, rng)
    objective = qkv_objective(V, form, tokens, positions, causal, hollow, X)

    trace = []
    for step in range(int(steps)):
        loss, grads = objective(arrays)
        trace.append(loss)
        if not np.isfinite(loss):
            raise NonFiniteLoss(trace, step)
        for key, g in grads.items():
            arrays[key] = arrays[key] - lr * g
    loss, _ = objective(arrays)
    trace.append(loss)
    if not np.isfinite(loss):
        raise NonFiniteLoss(trace, int(steps))
    logger.info(f"qkv {form} fit: loss {trace[0]:.4g} -> {loss:.4g} in {steps} steps")

    head_list = tuple(
        QkvHead(
            phi=arrays[f"phi{m}"],
            psi=arrays[f"psi{m}"],
            values=arrays.get(f"values{m}", V),
            decoder=arrays.get(f"decoder{m}"),
        )
        for m in range(int(heads))
    )
    return QkvFit(params=QkvParams(heads=head_list, form=form), trace=trace, loss=loss)


def multihead_reconstruct(params, X, tokens=None, positions=None, causal=False):
    """(QkvParams, data) -> X^

    (1/M) sum_m V^_m W_m^T, or the plain mean of the V^_m when the heads
    carry no decoder.  Attention is evaluated without the hollow mask.
    """
    X = np.asarray(X, dtype=float)
    outs = []
    for head in params.heads:
        H = head_output(head, params.form, tokens, positions, causal, hollow=False)
        outs.append(H if head.decoder is None else H @ head.decoder.T)
    Xhat = sum(outs) / params.M
    if Xhat.shape != X.shape:
        raise ShapeMismatch(f"reconstruction is {Xhat.shape}, data is {X.shape}")
    return Xhat
