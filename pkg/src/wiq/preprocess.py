"""Trace denoising and gradient computation.

The gradient sequence (raw first difference per tick) is the substrate
for boundary detection and for the quality features; denoising runs
before it so near-zero gradient windows stay near zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import wavelet
from .signal_sim import RssTrace


@dataclass
class WaveletConfig:
    family: str = "daub4"
    decomposition_levels: int = 4
    threshold_rule: str = "soft"
    threshold_scale: float = 1.0

    def __post_init__(self):
        if self.family not in wavelet.FAMILIES:
            raise ValueError(f"unknown wavelet family {self.family!r}")
        if self.decomposition_levels < 1:
            raise ValueError("decomposition_levels must be >= 1")
        if self.threshold_rule not in ("soft", "hard"):
            raise ValueError("threshold_rule must be 'soft' or 'hard'")
        if self.threshold_scale <= 0:
            raise ValueError("threshold_scale must be positive")


@dataclass
class GradientSequence:
    """First differences of a trace, dB per tick."""

    values: np.ndarray
    tick_seconds: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("gradient values must be finite")

    def __len__(self) -> int:
        return self.values.size


def denoise(trace: RssTrace, cfg: WaveletConfig | None = None) -> RssTrace:
    """Wavelet-denoise a trace; length, tick spacing, and ground truth carry through."""
    cfg = cfg or WaveletConfig()
    n = trace.samples.size
    if n < (1 << cfg.decomposition_levels):
        raise ValueError(
            f"trace of {n} samples too short for {cfg.decomposition_levels} levels"
        )
    cleaned = wavelet.denoise_signal(
        trace.samples,
        cfg.family,
        cfg.decomposition_levels,
        cfg.threshold_rule,
        cfg.threshold_scale,
    )
    return RssTrace(
        samples=cleaned,
        tick_seconds=trace.tick_seconds,
        ground_truth=[replace(iv) for iv in trace.ground_truth],
        snr_db=trace.snr_db,
    )


def gradient(trace: RssTrace) -> GradientSequence:
    if trace.samples.size < 2:
        raise ValueError("gradient needs at least 2 samples")
    return GradientSequence(np.diff(trace.samples), trace.tick_seconds)


def noise_scale(samples: np.ndarray) -> float:
    """Robust per-sample noise level estimate from first differences."""
    diffs = np.diff(np.asarray(samples, dtype=float))
    if diffs.size == 0:
        return 0.0
    mad = float(np.median(np.abs(diffs - np.median(diffs))))
    return mad / 0.6745 / math.sqrt(2.0)


def adaptive_delta(
    history: np.ndarray, percentile: float = 0.9, floor: float = 0.05
) -> float:
    """Near-zero gradient threshold learned from a quiet strength window.

    Each sample is compared against the window minimum in the linear
    power domain; the smallest ratio that at least `percentile` of the
    samples stay below is mapped back to dB. A quiet channel with a wide
    idle wobble therefore yields a wider threshold.
    """
    history = np.asarray(history, dtype=float)
    if history.size == 0:
        raise ValueError("history window is empty")
    if not 0.0 < percentile <= 1.0:
        raise ValueError("percentile must lie in (0, 1]")
    linear = 10.0 ** (history / 10.0)
    low = float(linear.min())
    if low <= 0.0 or not math.isfinite(low):
        raise ValueError("window strengths must be finite")
    ratios = np.sort(linear / low)
    idx = min(ratios.size - 1, max(0, math.ceil(percentile * ratios.size) - 1))
    delta = 10.0 * math.log10(float(ratios[idx]))
    return max(delta, floor)
