from locuskit.kernel_core.kernels import (
    Concrete,
    Difference,
    Dirac,
    Dual,
    Epanechnikov,
    Feature,
    Gaussian,
    Hollow,
    Kernel,
    Knn,
    Multi,
    Neighborhood,
    PositionEncoding,
    Product,
    Regularized,
    SelfKernel,
    TemporalKernel,
    as_point,
    as_points,
    concrete,
    derive_kernel,
    dirac,
    epanechnikov,
    eval_kernel,
    feature,
    gaussian,
    knn,
    linear,
    make_kernel,
    neighborhood,
    sinusoidal_table,
    uniform,
)
from locuskit.kernel_core.matrices import (
    KernelMatrix,
    LaplacianView,
    StochasticMatrix,
    filter_solve,
    gram,
    laplacian_of,
    normalize_rows,
    smoothing_distance,
    smoothing_norm,
)
