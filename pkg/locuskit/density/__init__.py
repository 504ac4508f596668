from locuskit.density.diffusion import (
    DiffusionSchedule,
    NoiseSpec,
    dae_chain,
    diffusion_generate,
    epanechnikov_inverse_cdf,
    local_mean_denoiser,
    noise_sample,
)
from locuskit.density.kde import (
    conditional_kde,
    density_scale,
    gaussian_kde_log_gradient,
    gaussian_mixture_score,
    kde,
    kde_values,
    log_gaussian_kde,
    score_estimate,
    tweedie_denoise,
)
