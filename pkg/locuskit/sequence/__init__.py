from locuskit.sequence.nlm import (
    gaussian_moving_average,
    nlm_denoise,
    nlm_denoise_image,
    patches,
)
from locuskit.sequence.temporal import (
    Sequence,
    sinusoidal_encoding,
    temporal_gram,
    temporal_local_mean,
)
from locuskit.sequence.transformer import (
    ACTIVATIONS,
    Mlp,
    TransformerLayer,
    attention_layer,
    attention_weights,
    autoregressive_complete,
    causal_transformer,
    causal_window_mean,
    init_layers,
    local_local_mean,
    previous_token,
    transformer_encode,
)
