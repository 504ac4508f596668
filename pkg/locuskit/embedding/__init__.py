from locuskit.embedding.lle import (
    EmbeddingResult,
    lle_embed,
    lle_objective,
    lle_weights,
    pca_embed,
)
from locuskit.embedding.mds import (
    Factorization,
    WordVectors,
    amds_factorize,
    cooccurrence_counts,
    cooccurrence_embed,
    read_corpus,
    strain,
)
from locuskit.embedding.trimap import (
    contrast,
    sample_triplets,
    similarity_matrix,
    trimap_embed,
    trimap_objective,
)
