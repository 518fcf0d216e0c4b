"""Hypoelliptic diffusion Monte Carlo and semigroup inequality checks."""

from .simulate import (
    DiffusionConfig,
    DiffusionEnsemble,
    ensemble_from_bytes,
    ensemble_to_bytes,
    group_product,
    is_group_model,
    simulate_paths,
)
from .estimators import KernelEstimate, PtfEstimate, estimate_kernel, estimate_Ptf
from .checks import (
    BallVolume,
    GaussianRateCheck,
    GlobalBoundCheck,
    HarnackReport,
    InsufficientSamplingError,
    Lambda1Estimate,
    LiYauReport,
    NotCompactError,
    SemigroupCheck,
    ball_volume,
    gaussian_rate_check,
    global_kernel_bound_check,
    harnack_check,
    lambda1_estimate,
    liyau_check,
    semigroup_check,
    volume_growth_fit,
)

__all__ = [
    "DiffusionConfig", "DiffusionEnsemble", "simulate_paths", "group_product",
    "is_group_model", "ensemble_to_bytes", "ensemble_from_bytes",
    "estimate_Ptf", "estimate_kernel", "PtfEstimate", "KernelEstimate",
    "liyau_check", "harnack_check", "ball_volume", "volume_growth_fit",
    "lambda1_estimate", "semigroup_check", "global_kernel_bound_check",
    "gaussian_rate_check", "LiYauReport", "HarnackReport", "BallVolume",
    "Lambda1Estimate", "SemigroupCheck", "GlobalBoundCheck", "GaussianRateCheck",
    "InsufficientSamplingError", "NotCompactError",
]
