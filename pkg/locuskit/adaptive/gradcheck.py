""" gradcheck v0.1
Central-difference gradient check
"""

# Imports
import numpy as np

from locuskit.errors import InvalidParameter
from locuskit.mylog import get_logger

logger = get_logger(__name__)


def finite_diff_gradcheck(objective, params, eps=1e-5, floor=1e-12):
    """(callable, dict, float, float) -> float

    objective(params) returns (value, {name: gradient}).  Returns the largest
    |fd - g| / max(floor, |g|) over every coordinate of every parameter.
    """
    if not 1e-8 <= eps <= 1e-3:
        raise InvalidParameter(f"eps must lie in [1e-8, 1e-3], got {eps}")
    params = {k: np.array(v, dtype=float) for k, v in params.items()}
    _, grads = objective(params)
    worst = 0.0
    for name, value in params.items():
        g = np.asarray(grads.get(name, np.zeros_like(value)), dtype=float)
        for idx in np.ndindex(value.shape):
            orig = value[idx]
            value[idx] = orig + eps
            up, _ = objective(params)
            value[idx] = orig - eps
            down, _ = objective(params)
            value[idx] = orig
            fd = (up - down) / (2.0 * eps)
            err = abs(fd - g[idx]) / max(floor, abs(g[idx]))
            worst = max(worst, err)
    logger.debug(f"gradcheck max relative error {worst:.3e}")
    return worst
