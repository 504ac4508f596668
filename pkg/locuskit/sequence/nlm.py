""" nlm v0.1
Non-local means for sequences and grayscale images, and the Gaussian moving
average baseline
"""

# Imports
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.spatial.distance import cdist

from locuskit.errors import DimensionMismatch, InvalidParameter
from locuskit.kernel_core import as_points
from locuskit.mylog import get_logger

logger = get_logger(__name__)


def _check(rho, h, search):
    if rho < 0:
        raise InvalidParameter(f"patch radius must be >= 0, got {rho}")
    if search < rho:
        raise InvalidParameter(f"search radius {search} is smaller than the patch")
    if not h > 0:
        raise InvalidParameter(f"h must be positive, got {h}")


def _band(T, search):
    t = np.arange(T)
    return np.abs(t[:, None] - t[None, :]) <= search


def _as_signal(signal):
    values = np.asarray(signal, dtype=float)
    return values.ndim == 1, as_points(values)


def patches(Y, rho):
    """T x (2 rho + 1) p zero-padded patches centered on every position"""
    T = Y.shape[0]
    padded = np.pad(Y, ((rho, rho), (0, 0)))
    return np.concatenate([padded[i : i + T] for i in range(2 * rho + 1)], axis=1)


def nlm_denoise(signal, rho, h, search):
    """(signal, int, float, int) -> signal

    y^_t = sum_{|s-t| <= search} w_ts y_s / sum w_ts with
    w_ts = exp(-||patch(t) - patch(s)||^2 / (2 h^2 patch_size)).
    """
    _check(rho, h, search)
    flat, Y = _as_signal(signal)
    P = patches(Y, int(rho))
    W = np.exp(-cdist(P, P, "sqeuclidean") / (2.0 * h**2 * P.shape[1]))
    W = W * _band(Y.shape[0], search)
    out = W @ Y / W.sum(axis=1, keepdims=True)
    return out[:, 0] if flat else out


def gaussian_moving_average(signal, search):
    """Gaussian-in-time average over |s - t| <= search with sigma = search / 2"""
    if search < 1:
        raise InvalidParameter(f"search radius must be >= 1, got {search}")
    flat, Y = _as_signal(signal)
    t = np.arange(Y.shape[0])
    sigma = search / 2.0
    W = np.exp(-((t[:, None] - t[None, :]) ** 2) / (2.0 * sigma**2))
    W = W * _band(Y.shape[0], search)
    out = W @ Y / W.sum(axis=1, keepdims=True)
    return out[:, 0] if flat else out


def nlm_denoise_image(img, rho, h, search):
    """(H x W image, int, float, int) -> H x W image

    Square (2 rho + 1)^2 patches, zero padded, compared over a square window of
    half-width ``search``.
    """
    _check(rho, h, search)
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D image, got {img.shape}")
    H, W = img.shape
    size = (2 * rho + 1) ** 2
    padded = np.pad(img, rho)
    P = sliding_window_view(padded, (2 * rho + 1, 2 * rho + 1)).reshape(H, W, size)

    num = np.zeros_like(img)
    den = np.zeros_like(img)
    for dr in range(-search, search + 1):
        for dc in range(-search, search + 1):
            r0, r1 = max(0, -dr), min(H, H - dr)
            c0, c1 = max(0, -dc), min(W, W - dc)
            if r0 >= r1 or c0 >= c1:
                continue
            here = P[r0:r1, c0:c1]
            there = P[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
            w = np.exp(-((here - there) ** 2).sum(axis=-1) / (2.0 * h**2 * size))
            num[r0:r1, c0:c1] += w * img[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
            den[r0:r1, c0:c1] += w
    logger.debug(f"nlm image {H}x{W} rho={rho} search={search}")
    return num / den
