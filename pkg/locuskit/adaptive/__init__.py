from locuskit.adaptive.bandwidth import (
    TuneResult,
    loo_kde_nll,
    loo_loss,
    tune_bandwidth,
)
from locuskit.adaptive.gradcheck import finite_diff_gradcheck
from locuskit.adaptive.multikernel import (
    MultiKernelFit,
    fit_multikernel,
    project_simplex,
)
from locuskit.adaptive.qkv import (
    QkvFit,
    QkvHead,
    QkvParams,
    attention_from_features,
    fit_qkv,
    head_output,
    multihead_reconstruct,
    qkv_objective,
    softplus,
    visible_keys,
)
