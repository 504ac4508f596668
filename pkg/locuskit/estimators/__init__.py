from locuskit.estimators.classifiers import (
    center_classify,
    centerless_classify,
    centerless_cluster,
    centerless_lazy_step,
    centerless_reconstruct,
    knn_predict,
    local_centerless_classify,
    local_kmeans,
    local_margin_predict,
    local_mode_predict,
)
from locuskit.estimators.dataset import Dataset, LocalFitResult
from locuskit.estimators.local_linear import (
    local_linear_predict,
    local_linear_transform,
)
from locuskit.estimators.local_mean import (
    GaussianLocationModel,
    InferenceRules,
    distance_loss,
    inference_precompute,
    inference_predict,
    lazy_iterate,
    lazy_transform,
    local_constant_encode,
    local_fit,
    local_mean_predict,
    loo_error,
    monte_carlo_local_mean,
    self_kernel_local_mean,
)
from locuskit.estimators.local_pca import (
    LocalPCA,
    Subspace,
    global_pca,
    local_pca,
    sign_convention,
    weighted_pca,
)
