"""Scalable kernel power k-means with random Fourier features."""

from ._core import (
    InvalidInput,
    KernelSpec,
    KpkmResult,
    MkpkmResult,
    PowerSchedule,
    RffMap,
    accuracy,
    fit_kpkm,
    fit_mkpkm,
    gaussian_kernel,
    gradient_weights,
    kernel_matrix,
    kkm_cost_euclidean,
    kkm_cost_kernel,
    make_blobs,
    map_features,
    nmi,
    power_mean,
    purity,
    recommended_dim,
    sample_rff,
)

__version__ = "0.1.0"

__all__ = [
    "InvalidInput",
    "KernelSpec",
    "KpkmResult",
    "MkpkmResult",
    "PowerSchedule",
    "RffMap",
    "accuracy",
    "fit_kpkm",
    "fit_mkpkm",
    "gaussian_kernel",
    "gradient_weights",
    "kernel_matrix",
    "kkm_cost_euclidean",
    "kkm_cost_kernel",
    "make_blobs",
    "map_features",
    "nmi",
    "power_mean",
    "purity",
    "recommended_dim",
    "sample_rff",
]
