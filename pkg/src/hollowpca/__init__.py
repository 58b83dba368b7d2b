"""Hollowed-Gram spectral embedding and clustering.

Spectral methods built on the entrywise-deleted (hollowed) Gram matrix
H(X X^T), with synthetic mixture and block-model generators, clustering
estimators, and a reproducible experiment harness.
"""

from . import errors
from .estimators import (
    CsbmEstimate,
    HollowedEmbedding,
    HollowedSpectralClustering,
    KMeansResult,
    SpectralEmbedding,
    csbm_aggregated,
    csbm_modified,
    hollowed_embedding,
    kmeans_approx,
    leave_one_out_gram,
    oracle_lda,
    oracle_lda_all,
    sign_estimator,
    spectral_cluster,
)
from .kernels import KernelSpec, kernel_gram
from .linalg import (
    DESCENDING_BY_ABS,
    DESCENDING_BY_VALUE,
    EigenDecomposition,
    eigh,
    gram,
    hollow,
    matrix_sign,
    norm_2p,
    svd_small,
    symmetrize,
    top_window,
    window_eigh,
)
from .metrics import (
    RESIDUAL_KINDS,
    Diagnostics,
    ResidualReport,
    diagnostics,
    istar,
    lp_residuals,
    markov_outlier_count,
    misclassification,
    rate_function,
    snr_gmm,
    snr_mixture,
)
from .models import (
    CsbmParams,
    GmmParams,
    LabelVector,
    NoiseCov,
    SbmParams,
    Seed,
    sample_csbm,
    sample_gmm,
    sample_sbm,
)
from . import experiments

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "errors",
    "experiments",
    # linear algebra
    "DESCENDING_BY_ABS",
    "DESCENDING_BY_VALUE",
    "EigenDecomposition",
    "eigh",
    "gram",
    "hollow",
    "matrix_sign",
    "norm_2p",
    "svd_small",
    "symmetrize",
    "top_window",
    "window_eigh",
    # kernels
    "KernelSpec",
    "kernel_gram",
    # models
    "CsbmParams",
    "GmmParams",
    "LabelVector",
    "NoiseCov",
    "SbmParams",
    "Seed",
    "sample_csbm",
    "sample_gmm",
    "sample_sbm",
    # estimators
    "CsbmEstimate",
    "HollowedEmbedding",
    "HollowedSpectralClustering",
    "KMeansResult",
    "SpectralEmbedding",
    "csbm_aggregated",
    "csbm_modified",
    "hollowed_embedding",
    "kmeans_approx",
    "leave_one_out_gram",
    "oracle_lda",
    "oracle_lda_all",
    "sign_estimator",
    "spectral_cluster",
    # metrics
    "Diagnostics",
    "RESIDUAL_KINDS",
    "ResidualReport",
    "diagnostics",
    "istar",
    "lp_residuals",
    "markov_outlier_count",
    "misclassification",
    "rate_function",
    "snr_gmm",
    "snr_mixture",
]
