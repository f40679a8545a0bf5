"""Mask-quality metrics and sweep experiments."""
from .binning import BinningReport, binning_report, fourier_ratio, spatial_ratio, truncation_ratio
from .bounds import BoundReport, condition_number, perturbation_report, predicted_bound
from .frc import (FrcCurve, Spectrum, average_curves, frc, frc_crossing, frc_resolution, power_spectrum,
                  ring_power, smooth_ring_power)
from .metrics import forward_gradient, gradient_norm, image_error, nmse, rmse
from .psf import PsfResult, compute_psf, fwhm_2d, profile_fwhm
from .stride import StrideCurve, fov_windows, spectrum_scores, stride_scan
from .svd import SvdReport, stable_rank, svd_metrics, svd_report
from .sweeps import circle_phantoms, dose_sweep, noise_resolution_sweep

__all__ = [
    "BinningReport", "binning_report", "fourier_ratio", "spatial_ratio", "truncation_ratio",
    "BoundReport", "FrcCurve", "PsfResult", "Spectrum", "StrideCurve", "SvdReport",
    "average_curves", "circle_phantoms", "compute_psf", "condition_number", "dose_sweep",
    "forward_gradient", "fov_windows", "frc", "frc_crossing", "frc_resolution", "fwhm_2d",
    "gradient_norm", "image_error", "nmse", "noise_resolution_sweep", "perturbation_report",
    "power_spectrum", "predicted_bound", "profile_fwhm", "ring_power", "smooth_ring_power", "rmse", "spectrum_scores",
    "stable_rank", "stride_scan", "svd_metrics", "svd_report",
]
