"""Windowed structural similarity metrics, gradients, and reconstruction optimizers.

Images are float64 numpy arrays shaped (H, W) or (C, H, W) with intensities
in [0, 1]. All scores average over valid windows, then over channels.
"""

from ._core import (
    DivergenceError,
    FormatError,
    IoError,
    UnsupportedConfigError,
    compare_losses,
    compute_report,
    grad_lwssim,
    grad_lwssim_loss,
    grad_mse,
    grad_ssim,
    load_image,
    lwssim,
    lwssim_level,
    lwssim_loss,
    mae,
    mse,
    optimize_bottleneck,
    optimize_pixels,
    save_image,
    score_map,
    ssim,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "DivergenceError",
    "FormatError",
    "IoError",
    "UnsupportedConfigError",
    "compare_losses",
    "compute_report",
    "grad_lwssim",
    "grad_lwssim_loss",
    "grad_mse",
    "grad_ssim",
    "load_image",
    "lwssim",
    "lwssim_level",
    "lwssim_loss",
    "mae",
    "mse",
    "optimize_bottleneck",
    "optimize_pixels",
    "save_image",
    "score_map",
    "ssim",
    "synthesize",
]
