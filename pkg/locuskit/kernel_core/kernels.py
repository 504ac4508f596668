""" kernels v0.3
Localization kernels and the operator algebra over them

Every kernel is an immutable evaluator.  ``matrix(A, B)`` evaluates the kernel
on all ordered pairs of rows of two point sets, which may come from different
spaces when the kind allows it.  Base kinds never return negative weights;
only ``Difference`` (and anything built on it) carries the desmoothing flag.
"""

# Imports
import hashlib
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from locuskit.errors import (
    DimensionMismatch,
    DomainError,
    InvalidParameter,
    UnsupportedComposition,
)
from locuskit.mylog import get_logger

logger = get_logger(__name__)

POSITION_KINDS = ("none", "window", "sinusoidal", "relative")


# Point helpers
def as_points(A):
    """(array_like) -> ndarray

    Returns a float point set of shape (n, p).  A 1-D array is read as n points
    on the line, a scalar as a single 1-D point.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A.reshape(-1, 1)
    elif A.ndim > 2:
        raise DimensionMismatch(f"point sets must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidParameter("points must have finite coordinates")
    return A


def as_point(x):
    """(array_like) -> ndarray

    A single point as a (1, p) array.
    """
    x = np.asarray(x, dtype=float)
    return as_points(x.reshape(1, -1))


def point_set_id(A):
    """Short content digest used as provenance for kernel matrices"""
    A = np.ascontiguousarray(A, dtype=float)
    digest = hashlib.sha1(A.tobytes())
    digest.update(str(A.shape).encode())
    return digest.hexdigest()[:12]


def sinusoidal_table(times, p, base=10000.0):
    """(array_like, int, float) -> ndarray

    Classic absolute position table: column 2i holds sin(t / base**(2i/p)) and
    column 2i+1 holds cos of the same angle.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    i = np.arange(p)
    rates = base ** (-(2 * (i // 2)) / p)
    angles = times[:, None] * rates[None, :]
    return np.where(i % 2 == 0, np.sin(angles), np.cos(angles))


def _check_same_dim(A, B):
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(
            f"points have dimension {A.shape[1]} and {B.shape[1]}"
        )


def _check_bandwidth(name, value):
    if not value > 0:
        raise InvalidParameter(f"{name} must be positive, got {value}")


# Kernel kinds
@dataclass(frozen=True, eq=False)
class Kernel(object):
    """Base class of every localization kernel"""

    kind = "abstract"

    @property
    def desmoothing(self):
        return False

    @property
    def kernel_id(self):
        return f"{self.kind}-{hashlib.sha1(repr(self).encode()).hexdigest()[:10]}"

    def matrix(self, A, B=None):
        """(Kernel, array_like, array_like) -> ndarray

        Returns the |A| x |B| matrix of weights K(a, b).  B defaults to A.
        """
        A = as_points(A)
        B = A if B is None else as_points(B)
        return self._values(A, B)

    def __call__(self, x, y):
        return eval_kernel(self, x, y)

    def _values(self, A, B):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Gaussian(Kernel):
    h: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        _check_bandwidth("h", self.h)

    def _values(self, A, B):
        _check_same_dim(A, B)
        return np.exp(-cdist(A, B, "sqeuclidean") / (2.0 * self.h**2))


@dataclass(frozen=True, eq=False)
class Epanechnikov(Kernel):
    h: float = 1.0
    kind = "epanechnikov"

    def __post_init__(self):
        _check_bandwidth("h", self.h)

    def _values(self, A, B):
        _check_same_dim(A, B)
        t2 = cdist(A, B, "sqeuclidean") / self.h**2
        return 0.75 * np.clip(1.0 - t2, 0.0, None)


@dataclass(frozen=True, eq=False)
class Neighborhood(Kernel):
    """Indicator of d(x, y) < eps; eps = inf gives the uniform kernel"""

    eps: float = 1.0
    kind = "neighborhood"

    def __post_init__(self):
        _check_bandwidth("eps", self.eps)

    def _values(self, A, B):
        _check_same_dim(A, B)
        if np.isinf(self.eps):
            return np.ones((A.shape[0], B.shape[0]))
        return (cdist(A, B) < self.eps).astype(float)


@dataclass(frozen=True, eq=False)
class Dirac(Kernel):
    kind = "dirac"

    def _values(self, A, B):
        _check_same_dim(A, B)
        return (cdist(A, B, "sqeuclidean") == 0.0).astype(float)


@dataclass(frozen=True, eq=False)
class Knn(Kernel):
    """Empirical k-nearest-neighbour kernel over a captured reference set

    K(x, y) = 1 when y is one of the k reference points closest to x.
    Distance ties go to the lower reference index.
    """

    k: int = 1
    reference: Optional[np.ndarray] = None
    kind = "knn"

    def __post_init__(self):
        if self.reference is None:
            raise InvalidParameter("knn kernel needs a reference set")
        ref = as_points(self.reference).copy()
        ref.setflags(write=False)
        object.__setattr__(self, "reference", ref)
        if not 1 <= int(self.k) <= ref.shape[0]:
            raise InvalidParameter(
                f"k must lie in [1, {ref.shape[0]}], got {self.k}"
            )
        object.__setattr__(self, "k", int(self.k))

    def neighbours(self, A):
        """Indices (n, k) of the nearest reference points to each row of A"""
        A = as_points(A)
        _check_same_dim(A, self.reference)
        order = np.argsort(cdist(A, self.reference), axis=1, kind="stable")
        return order[:, : self.k]

    def _values(self, A, B):
        _check_same_dim(A, B)
        idx = self.neighbours(A)
        chosen = np.zeros((A.shape[0], self.reference.shape[0]))
        np.put_along_axis(chosen, idx, 1.0, axis=1)
        member = (cdist(B, self.reference, "sqeuclidean") == 0.0).astype(float)
        return (chosen @ member.T > 0).astype(float)


@dataclass(frozen=True, eq=False)
class Feature(Kernel):
    """K(x, y) = F(phi(x), psi(y)) with F the dot product or its exponential"""

    phi: Optional[Callable] = None
    psi: Optional[Callable] = None
    relation: str = "dot"
    kind = "feature"

    def __post_init__(self):
        if self.relation not in ("dot", "exp-dot"):
            raise InvalidParameter(f"unknown relation {self.relation!r}")
        if self.phi is None:
            object.__setattr__(self, "phi", _identity)
        if self.psi is None:
            object.__setattr__(self, "psi", self.phi)

    def _values(self, A, B):
        FA = np.asarray(self.phi(A), dtype=float).reshape(A.shape[0], -1)
        FB = np.asarray(self.psi(B), dtype=float).reshape(B.shape[0], -1)
        if FA.shape[1] != FB.shape[1]:
            raise DimensionMismatch(
                f"feature maps return {FA.shape[1]} and {FB.shape[1]} features"
            )
        G = FA @ FB.T
        if self.relation == "exp-dot":
            return np.exp(G)
        return G


def _identity(A):
    return A


@dataclass(frozen=True, eq=False)
class Concrete(Kernel):
    """Kernel given as a matrix over an indexed finite domain

    Points are integer indices (one column).
    """

    values: Optional[np.ndarray] = None
    kind = "concrete"

    def __post_init__(self):
        M = np.asarray(self.values, dtype=float)
        if M.ndim != 2:
            raise InvalidParameter("concrete kernel needs a 2-D matrix")
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "values", M)

    @property
    def desmoothing(self):
        return bool(np.any(self.values < 0))

    @staticmethod
    def _indices(A, size):
        if A.shape[1] != 1:
            raise DimensionMismatch("concrete kernel points are single indices")
        idx = A[:, 0]
        if np.any(idx != np.round(idx)) or np.any(idx < 0) or np.any(idx >= size):
            raise DomainError(f"index outside the domain 0..{size - 1}")
        return idx.astype(int)

    def _values(self, A, B):
        i = self._indices(A, self.values.shape[0])
        j = self._indices(B, self.values.shape[1])
        return self.values[np.ix_(i, j)]


# Derived kinds
@dataclass(frozen=True, eq=False)
class Dual(Kernel):
    base: Optional[Kernel] = None
    kind = "dual"

    @property
    def desmoothing(self):
        return self.base.desmoothing

    def _values(self, A, B):
        return self.base.matrix(B, A).T


@dataclass(frozen=True, eq=False)
class Product(Kernel):
    """(K' * K)(x, y) = sum over anchors z of K'(x, z) K(z, y)"""

    left: Optional[Kernel] = None
    right: Optional[Kernel] = None
    anchors: Optional[np.ndarray] = None
    kind = "product"

    def __post_init__(self):
        if self.anchors is None:
            raise UnsupportedComposition(
                "product of non-concrete kernels needs an anchor set"
            )
        anchors = as_points(self.anchors).copy()
        anchors.setflags(write=False)
        object.__setattr__(self, "anchors", anchors)

    @property
    def desmoothing(self):
        return self.left.desmoothing or self.right.desmoothing

    def _values(self, A, B):
        return self.left.matrix(A, self.anchors) @ self.right.matrix(self.anchors, B)


@dataclass(frozen=True, eq=False)
class Regularized(Kernel):
    """alpha K + (1 - alpha) delta"""

    base: Optional[Kernel] = None
    alpha: float = 1.0
    kind = "regularized"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameter(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def desmoothing(self):
        return self.base.desmoothing

    def _values(self, A, B):
        delta = Dirac()._values(A, B)
        if self.alpha == 0.0:
            return delta
        return self.alpha * self.base.matrix(A, B) + (1.0 - self.alpha) * delta


@dataclass(frozen=True, eq=False)
class Hollow(Kernel):
    """Zeroes K(x, y) for x = y or d(x, y) < eps0"""

    base: Optional[Kernel] = None
    eps0: float = 0.0
    kind = "hollow"

    def __post_init__(self):
        if self.eps0 < 0:
            raise InvalidParameter(f"eps0 must be >= 0, got {self.eps0}")

    @property
    def desmoothing(self):
        return self.base.desmoothing

    def _values(self, A, B):
        values = self.base.matrix(A, B)
        if _is_concrete(self.base):
            d = np.abs(A[:, :1] - B[:, :1].T)
        else:
            d = cdist(A, B)
        mask = (d == 0.0) | (d < self.eps0)
        return np.where(mask, 0.0, values)


@dataclass(frozen=True, eq=False)
class Multi(Kernel):
    """Non-negative mixture sum_m w_m K_m"""

    weights: Tuple[float, ...] = ()
    parts: Tuple[Kernel, ...] = ()
    kind = "multi"

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        parts = tuple(self.parts)
        if len(weights) != len(parts) or not parts:
            raise InvalidParameter("multi kernel needs one weight per part")
        if any(w < 0 for w in weights):
            raise InvalidParameter("multi kernel weights must be non-negative")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "parts", parts)

    @property
    def desmoothing(self):
        return any(p.desmoothing for p in self.parts)

    def _values(self, A, B):
        total = np.zeros((A.shape[0], B.shape[0]))
        for w, part in zip(self.weights, self.parts):
            total += w * part.matrix(A, B)
        return total


@dataclass(frozen=True, eq=False)
class Difference(Kernel):
    """K1 - K2, a desmoothing kernel (e.g. difference of Gaussians)"""

    first: Optional[Kernel] = None
    second: Optional[Kernel] = None
    kind = "difference"

    @property
    def desmoothing(self):
        return True

    def _values(self, A, B):
        return self.first.matrix(A, B) - self.second.matrix(A, B)


@dataclass(frozen=True, eq=False)
class SelfKernel(Kernel):
    """Separable kernel on joint points [x | y]: K_x(x, x') K_y(y, y')"""

    kx: Optional[Kernel] = None
    ky: Optional[Kernel] = None
    x_dim: int = 1
    kind = "self"

    def __post_init__(self):
        if self.x_dim < 1:
            raise InvalidParameter("x_dim must be >= 1")

    @property
    def desmoothing(self):
        return self.kx.desmoothing or self.ky.desmoothing

    def split(self, A):
        if A.shape[1] <= self.x_dim:
            raise DimensionMismatch(
                f"joint points need more than {self.x_dim} coordinates"
            )
        return A[:, : self.x_dim], A[:, self.x_dim :]

    def _values(self, A, B):
        ax, ay = self.split(A)
        bx, by = self.split(B)
        return self.kx.matrix(ax, bx) * self.ky.matrix(ay, by)


@dataclass(frozen=True, eq=False)
class PositionEncoding(object):
    """How time enters a temporal kernel

    none: K2 = 1.  window: K2 = [|t - s| < delta].  sinusoidal: the classic
    table is added to the tokens before the static kernel.  relative: K2 is
    the ``factor`` kernel evaluated on the times.
    """

    kind: str = "none"
    delta: Optional[float] = None
    factor: Optional[Kernel] = None
    base: float = 10000.0

    def __post_init__(self):
        if self.kind not in POSITION_KINDS:
            raise InvalidParameter(f"unknown position encoding {self.kind!r}")
        if self.kind == "window" and not (self.delta is not None and self.delta > 0):
            raise InvalidParameter("window encoding needs delta > 0")
        if self.kind == "relative" and self.factor is None:
            raise InvalidParameter("relative encoding needs a factor kernel")


@dataclass(frozen=True, eq=False)
class TemporalKernel(Kernel):
    """Kernel on [t | x] rows combining a static token kernel with time"""

    static: Optional[Kernel] = None
    encoding: PositionEncoding = PositionEncoding()
    causal: bool = False
    kind = "temporal"

    @property
    def desmoothing(self):
        return self.static.desmoothing

    def _values(self, A, B):
        if A.shape[1] < 2 or B.shape[1] < 2:
            raise DimensionMismatch("temporal points are [t, token...] rows")
        ta, xa = A[:, 0], A[:, 1:]
        tb, xb = B[:, 0], B[:, 1:]
        enc = self.encoding
        if enc.kind == "sinusoidal":
            xa = xa + sinusoidal_table(ta, xa.shape[1], enc.base)
            xb = xb + sinusoidal_table(tb, xb.shape[1], enc.base)
        G = self.static.matrix(xa, xb)
        if enc.kind == "window":
            G = G * (np.abs(ta[:, None] - tb[None, :]) < enc.delta)
        elif enc.kind == "relative":
            G = G * enc.factor.matrix(ta, tb)
        if self.causal:
            G = np.where(tb[None, :] > ta[:, None], 0.0, G)
        return G


def _is_concrete(k):
    if isinstance(k, Concrete):
        return True
    if isinstance(k, (Dual, Regularized, Hollow)):
        return _is_concrete(k.base)
    return False


# Constructors
def gaussian(h=1.0):
    return Gaussian(h=h)


def epanechnikov(h=1.0):
    return Epanechnikov(h=h)


def neighborhood(eps):
    return Neighborhood(eps=eps)


def uniform():
    return Neighborhood(eps=np.inf)


def dirac():
    return Dirac()


def knn(k, reference):
    return Knn(k=k, reference=reference)


def linear():
    """The dot-product kernel x . y (Hopfield weights)"""
    return Feature(relation="dot")


def feature(phi, psi=None, relation="dot"):
    return Feature(phi=phi, psi=psi, relation=relation)


def concrete(values):
    return Concrete(values=values)


_BASE_BUILDERS = {
    "gaussian": lambda s: Gaussian(h=s.get("h", 1.0)),
    "epanechnikov": lambda s: Epanechnikov(h=s.get("h", 1.0)),
    "neighborhood": lambda s: Neighborhood(eps=s["eps"]),
    "uniform": lambda s: uniform(),
    "dirac": lambda s: Dirac(),
    "knn": lambda s: Knn(k=s["k"], reference=s["reference"]),
    "linear": lambda s: linear(),
    "feature": lambda s: Feature(
        phi=s.get("phi"), psi=s.get("psi"), relation=s.get("relation", "dot")
    ),
    "concrete": lambda s: Concrete(values=s["values"]),
}


def make_kernel(spec):
    """(dict | Kernel) -> Kernel

    Builds a kernel from a descriptor such as ``{"kind": "gaussian", "h": 1}``.
    Composite descriptors nest their operands under ``base``/``parts``.
    """
    if isinstance(spec, Kernel):
        return spec
    if hasattr(spec, "model_dump"):
        spec = spec.model_dump(exclude_none=True)
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind in _BASE_BUILDERS:
        try:
            return _BASE_BUILDERS[kind](spec)
        except KeyError as e:
            raise InvalidParameter(f"{kind} kernel is missing {e.args[0]!r}")
    if kind in DERIVE_OPS:
        if kind in ("multi", "product", "difference"):
            bases = [make_kernel(p) for p in spec.pop("parts", [])]
        else:
            bases = make_kernel(spec.pop("base"))
        return derive_kernel(bases, kind, **spec)
    if kind == "self":
        return SelfKernel(
            kx=make_kernel(spec["kx"]),
            ky=make_kernel(spec["ky"]),
            x_dim=spec.get("x_dim", 1),
        )
    if kind == "temporal":
        enc = dict(spec.get("encoding", {"kind": "none"}))
        if "factor" in enc:
            enc["factor"] = make_kernel(enc["factor"])
        return TemporalKernel(
            static=make_kernel(spec["static"]),
            encoding=PositionEncoding(**enc),
            causal=spec.get("causal", False),
        )
    raise InvalidParameter(f"unknown kernel kind {kind!r}")


DERIVE_OPS = (
    "dual",
    "product",
    "power",
    "regularized",
    "hollow",
    "multi",
    "difference",
)


def derive_kernel(base, op, **params):
    """(Kernel | list, str, ...) -> Kernel

    Applies one algebra operation.  ``base`` is a single kernel for dual,
    power, regularized and hollow, and a sequence of kernels for product,
    multi and difference.
    """
    if op not in DERIVE_OPS:
        raise InvalidParameter(f"unknown kernel operation {op!r}")
    if op == "dual":
        return Dual(base=base)
    if op == "regularized":
        return Regularized(base=base, alpha=params.get("alpha", 1.0))
    if op == "hollow":
        return Hollow(base=base, eps0=params.get("eps0", 0.0))
    if op == "multi":
        parts = list(base)
        weights = params.get("weights", [1.0 / len(parts)] * len(parts))
        return Multi(weights=tuple(weights), parts=tuple(parts))
    if op == "difference":
        first, second = base
        return Difference(first=first, second=second)
    if op == "product":
        left, right = base
        if isinstance(left, Concrete) and isinstance(right, Concrete):
            if left.values.shape[1] != right.values.shape[0]:
                raise UnsupportedComposition("concrete factors do not chain")
            return Concrete(values=left.values @ right.values)
        return Product(left=left, right=right, anchors=params.get("anchors"))
    # power
    n = int(params.get("n", 1))
    if n < 1:
        raise InvalidParameter(f"power must be >= 1, got {n}")
    if isinstance(base, Concrete):
        rows, cols = base.values.shape
        if rows != cols:
            raise UnsupportedComposition("power of a non-square concrete kernel")
        return Concrete(values=np.linalg.matrix_power(base.values, n))
    if n == 1:
        return base
    anchors = params.get("anchors")
    if anchors is None:
        raise UnsupportedComposition(
            "power of a non-concrete kernel needs an anchor set"
        )
    result = base
    for _ in range(n - 1):
        result = Product(left=result, right=base, anchors=anchors)
    return result


def eval_kernel(k, x, y):
    """(Kernel, Point, Point) -> float"""
    return float(k.matrix(as_point(x), as_point(y))[0, 0])
