""" diffusion v0.2
Noising, DAE noising/denoising chains and the Gaussian local-mean diffusion
sampler
"""

# Imports
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from locuskit.errors import InvalidParameter, InvalidSchedule, UnsampleableKernel
from locuskit.kernel_core import Epanechnikov, Gaussian, Kernel, as_point, as_points
from locuskit.mylog import get_logger

logger = get_logger(__name__)

DEFAULT_ALPHA = 0.8


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def epanechnikov_inverse_cdf(u):
    """Inverse CDF of 0.75 (1 - t^2) on [-1, 1]"""
    u = np.asarray(u, dtype=float)
    return 2.0 * np.sin(np.arcsin(2.0 * u - 1.0) / 3.0)


@dataclass(frozen=True, eq=False)
class NoiseSpec(object):
    """Gaussian noise of std ``sigma``, or draws from a samplable kernel"""

    kind: str = "gaussian"
    sigma: float = 0.0
    kernel: Optional[Kernel] = None


def noise_sample(kind, X, seed, sigma=None, kernel=None):
    """(str, PointSet, seed, ...) -> PointSet

    One independent draw per point.  kind="gaussian" adds N(0, sigma^2 I);
    kind="kernel" draws x~ | x from a Gaussian or Epanechnikov kernel of
    bandwidth h, the latter coordinate-wise by inverse CDF.
    """
    X = as_points(X)
    rng = _rng(seed)
    if kind == "gaussian":
        if sigma is None or not sigma > 0:
            raise InvalidParameter(f"sigma must be positive, got {sigma}")
        return X + sigma * rng.standard_normal(X.shape)
    if kind != "kernel":
        raise InvalidParameter(f"unknown noise kind {kind!r}")
    if isinstance(kernel, Gaussian):
        return X + kernel.h * rng.standard_normal(X.shape)
    if isinstance(kernel, Epanechnikov):
        return X + kernel.h * epanechnikov_inverse_cdf(rng.random(X.shape))
    raise UnsampleableKernel(
        f"cannot sample from a {getattr(kernel, 'kind', kernel)!r} kernel"
    )


def _apply_noise(noise, X, rng):
    if noise is None:
        return X
    if noise.kind == "gaussian" and noise.sigma == 0.0:
        return X
    return noise_sample(noise.kind, X, rng, sigma=noise.sigma, kernel=noise.kernel)


def local_mean_denoiser(k, X):
    """Point map x -> m_K(x; X); zero-mass points go to the nearest sample"""
    X = as_points(X)

    def denoise(x):
        q = as_point(x)
        w = k.matrix(q, X)[0]
        total = w.sum()
        if total > 0:
            return w @ X / total
        return X[int(np.argmin(cdist(q, X)[0]))].copy()

    return denoise


def dae_chain(denoiser, noise, x0, steps, seed):
    """(callable, NoiseSpec | None, Point, int, seed) -> ndarray

    Alternates x~_t = noise(x_t) and x_{t+1} = denoiser(x~_t); returns the
    (steps + 1) x p chain including x0.
    """
    if steps < 1:
        raise InvalidParameter(f"steps must be >= 1, got {steps}")
    rng = _rng(seed)
    x = as_point(x0)
    chain = [x[0].copy()]
    for _ in range(int(steps)):
        noised = _apply_noise(noise, x, rng)
        x = as_point(denoiser(noised[0]))
        chain.append(x[0].copy())
    return np.array(chain)


class DiffusionSchedule(object):
    """Forward process x_t = a_t x_{t-1} + eps_t, Var eps_t = sigma2_t

    Cumulatively x_t = b_t x_0 + eta_t with b_t = prod a and
    s2_t = a_t^2 s2_{t-1} + sigma2_t.
    """

    def __init__(self, a, sigma2):
        a = np.asarray(a, dtype=float).reshape(-1)
        sigma2 = np.asarray(sigma2, dtype=float).reshape(-1)
        if a.size < 1 or a.size != sigma2.size:
            raise InvalidSchedule("a and sigma2 must be non-empty and equally long")
        if np.any(a <= 0) or np.any(a > 1):
            raise InvalidSchedule("scale factors must lie in (0, 1]")
        if np.any(sigma2 <= 0):
            raise InvalidSchedule("noise variances must be positive")
        self.a = a
        self.sigma2 = sigma2
        s2 = np.empty_like(sigma2)
        acc = 0.0
        for t in range(a.size):
            acc = a[t] ** 2 * acc + sigma2[t]
            s2[t] = acc
        self.b = np.cumprod(a)
        self.s2 = s2

    @classmethod
    def linear(cls, T, lo=1e-4, hi=0.2):
        """Variance-preserving schedule with sigma2 linear from lo to hi"""
        if T < 1 or not 0 < lo <= hi < 1:
            raise InvalidSchedule("need T >= 1 and 0 < lo <= hi < 1")
        sigma2 = np.linspace(lo, hi, int(T))
        return cls(np.sqrt(1.0 - sigma2), sigma2)

    @property
    def T(self):
        return self.a.size

    def marginal(self, x0, t, seed):
        """Draws x_t | x_0 for t in 1..T"""
        if not 1 <= t <= self.T:
            raise InvalidSchedule(f"t must lie in 1..{self.T}")
        X0 = as_points(x0)
        rng = _rng(seed)
        return self.b[t - 1] * X0 + np.sqrt(self.s2[t - 1]) * rng.standard_normal(
            X0.shape
        )

    def forward(self, X0, seed):
        """Cached noised sets [X_0, X_1, ..., X_T] via the per-step recursion"""
        rng = _rng(seed)
        sets = [as_points(X0)]
        for t in range(self.T):
            prev = sets[-1]
            noise = np.sqrt(self.sigma2[t]) * rng.standard_normal(prev.shape)
            sets.append(self.a[t] * prev + noise)
        return sets


def diffusion_generate(X0, schedule, n, seed, alpha=DEFAULT_ALPHA, h=None):
    """(PointSet, DiffusionSchedule, int, seed, float | array, array) -> PointSet

    Forward pass caches X_1..X_T.  The reverse pass starts from a zero-mean
    Gaussian matching the empirical variance of X_T and applies
    X'_{t-1} = alpha_t m_K(X'_t; X_{t-1}) + (1 - alpha_t) X'_t with a
    Gaussian kernel of bandwidth h_t (default sqrt(sigma2_t)).
    """
    if not isinstance(schedule, DiffusionSchedule):
        raise InvalidSchedule("schedule must be a DiffusionSchedule")
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    T = schedule.T
    alphas = np.broadcast_to(np.asarray(alpha, dtype=float), (T,))
    if np.any(alphas <= 0) or np.any(alphas > 1):
        raise InvalidParameter("reverse damping must lie in (0, 1]")
    hs = np.sqrt(schedule.sigma2) if h is None else np.broadcast_to(
        np.asarray(h, dtype=float), (T,)
    )
    rng = _rng(seed)
    sets = schedule.forward(X0, rng)

    var = sets[-1].var(axis=0)
    current = np.sqrt(var) * rng.standard_normal((int(n), sets[-1].shape[1]))
    for t in range(T, 0, -1):
        reference = sets[t - 1]
        denoise = local_mean_denoiser(Gaussian(h=float(hs[t - 1])), reference)
        target = np.vstack([denoise(x) for x in current])
        current = alphas[t - 1] * target + (1.0 - alphas[t - 1]) * current
    logger.debug(f"generated {current.shape[0]} samples over {T} reverse steps")
    return current
