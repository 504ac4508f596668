""" locuskit v0.3
Localization kernels: local means, shift iterations, density estimates,
embeddings, adaptive kernels and attention on sequences
"""

__version__ = "0.3.0"
