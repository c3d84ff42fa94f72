"""Temporal frequency analysis of pixel and latent signals.

A segment's temporal signal is the set of per-pixel time series on a
stride-subsampled grid, each with its temporal mean removed so the DC
component never competes with the detection threshold. Magnitudes use the
one-sided amplitude normalization 2/L (DC keeps the plain 1/L mean
amplitude), which makes an integer-bin sinusoid of amplitude A show up as
a bin of magnitude A regardless of the window length.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionError, ParameterError
from .video import Segment

if TYPE_CHECKING:  # pragma: no cover
    from .pipeline import LatentSegment

DEFAULT_GRID_STRIDE = 8
DEFAULT_EPSILON = 1.8


@dataclass(frozen=True)
class SpectrumReport:
    """One-sided amplitude spectrum averaged over spatial traces."""

    bin_freqs: np.ndarray  # Hz, bin k at k * fps / L
    magnitudes: np.ndarray
    fps: float
    epsilon: float | None = None
    f_eff: float | None = None

    def with_threshold(self, epsilon: float) -> "SpectrumReport":
        """Attach a threshold and the resulting effective frequency."""
        return dataclasses.replace(
            self, epsilon=epsilon, f_eff=effective_frequency(self, epsilon)
        )


def temporal_signal(segment: Segment, grid_stride: int = DEFAULT_GRID_STRIDE) -> np.ndarray:
    """Mean-removed per-pixel time series on a subsampled spatial grid.

    Returns an (n_traces, L) array where L is the segment frame count.
    """
    if grid_stride < 1:
        raise ParameterError(f"grid_stride must be >= 1, got {grid_stride}")
    frames = segment.frames
    if frames.shape[0] < 1:
        raise ParameterError("segment has no frames")
    traces = frames[:, ::grid_stride, ::grid_stride].reshape(frames.shape[0], -1).T
    return traces - traces.mean(axis=1, keepdims=True)


def dft_magnitude(traces: np.ndarray, fps: float) -> SpectrumReport:
    """Average one-sided DFT amplitude spectrum of a set of traces."""
    traces = np.asarray(traces, dtype=np.float64)
    if traces.ndim == 1:
        traces = traces[None, :]
    if traces.ndim != 2:
        raise DimensionError(f"traces must be 1-D or 2-D, got shape {traces.shape}")
    length = traces.shape[1]
    if length < 2:
        raise DimensionError(f"traces must have length >= 2, got {length}")
    spectrum = np.abs(np.fft.rfft(traces, axis=1))
    scale = np.full(spectrum.shape[1], 2.0 / length)
    scale[0] = 1.0 / length
    magnitudes = (spectrum * scale).mean(axis=0)
    bin_freqs = np.arange(spectrum.shape[1]) * fps / length
    return SpectrumReport(bin_freqs=bin_freqs, magnitudes=magnitudes, fps=float(fps))


def effective_frequency(report: SpectrumReport, epsilon: float) -> float | None:
    """Highest non-DC bin frequency with magnitude >= epsilon, else None."""
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be > 0, got {epsilon}")
    qualifying = np.nonzero(report.magnitudes[1:] >= epsilon)[0]
    if qualifying.size == 0:
        return None
    return float(report.bin_freqs[qualifying[-1] + 1])


def required_rate(f_eff: float | None, min_rate: float) -> float:
    """Nyquist-minimal sampling rate 2*f_eff, floored at ``min_rate``.

    ``min_rate`` is the lowest configured rate-class frequency; it is
    returned for effectively static segments (f_eff None or 0).
    """
    if f_eff is None or f_eff == 0.0:
        return float(min_rate)
    if f_eff < 0:
        raise ParameterError(f"f_eff must be >= 0, got {f_eff}")
    return 2.0 * f_eff


def dominant_frequency(report: SpectrumReport) -> float | None:
    """Frequency of the strongest non-DC bin; None for an empty spectrum."""
    if report.magnitudes.shape[0] < 2:
        return None
    k = int(np.argmax(report.magnitudes[1:])) + 1
    if report.magnitudes[k] == 0.0:
        return None
    return float(report.bin_freqs[k])


def latent_spectrum(latent_seg: "LatentSegment") -> SpectrumReport:
    """Spectrum of a latent segment's per-channel spatially averaged traces."""
    data = np.asarray(latent_seg.data, dtype=np.float64)
    if data.shape[0] < 2:
        raise DimensionError(
            f"latent segment needs >= 2 temporal steps, got {data.shape[0]}"
        )
    traces = data.mean(axis=(2, 3)).T  # (channels, T')
    traces = traces - traces.mean(axis=1, keepdims=True)
    return dft_magnitude(traces, fps=latent_seg.latent_rate)
