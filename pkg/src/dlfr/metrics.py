"""Reconstruction quality metrics: windowed SSIM and PSNR.

SSIM follows the canonical single-scale recipe: an 11x11 Gaussian window
(sigma 1.5) slid with stride 1, constants C1 = (0.01*255)^2 and
C2 = (0.03*255)^2, and only windows fully inside the frame contribute
(no padding), so small frames have exact, reproducible scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError
from .video import Clip

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
DYNAMIC_RANGE = 255.0
C1 = (0.01 * DYNAMIC_RANGE) ** 2
C2 = (0.03 * DYNAMIC_RANGE) ** 2

#: PSNR marker for a zero-error reconstruction.
PSNR_INF = math.inf


@lru_cache(maxsize=None)
def _gaussian_window(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("frames must be 2-D arrays")
    if a.shape != b.shape:
        raise DimensionError(f"frame shapes differ: {a.shape} vs {b.shape}")
    return a, b


def _window_stats(x: np.ndarray, kernel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    windows = sliding_window_view(x, kernel.shape)
    mean = np.tensordot(windows, kernel, axes=([2, 3], [0, 1]))
    mean_sq = np.tensordot(windows**2, kernel, axes=([2, 3], [0, 1]))
    return mean, mean_sq


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM between two equally sized frames."""
    a, b = _check_pair(a, b)
    if min(a.shape) < WINDOW_SIZE:
        raise DimensionError(
            f"frame {a.shape} is smaller than the {WINDOW_SIZE}x{WINDOW_SIZE} SSIM window"
        )
    kernel = _gaussian_window()
    mu_a, mean_a2 = _window_stats(a, kernel)
    mu_b, mean_b2 = _window_stats(b, kernel)
    windows_ab = sliding_window_view(a * b, kernel.shape)
    mean_ab = np.tensordot(windows_ab, kernel, axes=([2, 3], [0, 1]))

    var_a = mean_a2 - mu_a**2
    var_b = mean_b2 - mu_b**2
    cov = mean_ab - mu_a * mu_b

    num = (2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)
    den = (mu_a**2 + mu_b**2 + C1) * (var_a + var_b + C2)
    return float(np.mean(num / den))


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _check_pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical frames."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(DYNAMIC_RANGE**2 / err)


@dataclass(frozen=True)
class QualityScore:
    """Clip-level reconstruction quality."""

    ssim: float
    psnr: float


def clip_quality(ref: Clip, rec: Clip) -> QualityScore:
    """Frame-averaged SSIM and pooled-MSE PSNR between two clips."""
    if ref.n_frames != rec.n_frames:
        raise DimensionError(
            f"clip lengths differ: {ref.n_frames} vs {rec.n_frames} frames"
        )
    if ref.frames.shape != rec.frames.shape:
        raise DimensionError(
            f"clip shapes differ: {ref.frames.shape} vs {rec.frames.shape}"
        )
    ssim_values = [ssim(ref.frames[i], rec.frames[i]) for i in range(ref.n_frames)]
    pooled_mse = float(np.mean((ref.frames - rec.frames) ** 2))
    if pooled_mse == 0.0:
        pooled_psnr = PSNR_INF
    else:
        pooled_psnr = 10.0 * math.log10(DYNAMIC_RANGE**2 / pooled_mse)
    return QualityScore(ssim=float(np.mean(ssim_values)), psnr=pooled_psnr)
