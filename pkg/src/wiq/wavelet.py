"""Minimal orthogonal wavelet transform for trace denoising.

Periodized filter-bank DWT over a symmetric extension of the input,
soft/hard thresholding of the detail bands with the universal threshold.
Only the two families the denoiser needs are provided.
"""

from __future__ import annotations

import math

import numpy as np

_SQ3 = math.sqrt(3.0)
_NORM = 4.0 * math.sqrt(2.0)

# Orthonormal low-pass filters (coefficients sum to sqrt(2)).
_LOWPASS = {
    "haar": np.array([1.0, 1.0]) / math.sqrt(2.0),
    "daub4": np.array([1.0 + _SQ3, 3.0 + _SQ3, 3.0 - _SQ3, 1.0 - _SQ3]) / _NORM,
}

FAMILIES = tuple(sorted(_LOWPASS))


def filters(family: str) -> tuple[np.ndarray, np.ndarray]:
    if family not in _LOWPASS:
        raise ValueError(f"unknown wavelet family {family!r}; choose from {FAMILIES}")
    h = _LOWPASS[family]
    g = ((-1.0) ** np.arange(h.size)) * h[::-1]
    return h, g


def _analysis_step(x: np.ndarray, filt: np.ndarray) -> np.ndarray:
    n = x.size
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(filt.size)[None, :]) % n
    return x[idx] @ filt


def _synthesis_step(approx: np.ndarray, detail: np.ndarray, h: np.ndarray, g: np.ndarray) -> np.ndarray:
    n = 2 * approx.size
    x = np.zeros(n)
    base = 2 * np.arange(approx.size)
    for m in range(h.size):
        pos = (base + m) % n
        np.add.at(x, pos, h[m] * approx + g[m] * detail)
    return x


def wavedec(x: np.ndarray, family: str, levels: int) -> list[np.ndarray]:
    """Decompose into [approx_J, detail_J, ..., detail_1]; len(x) must be a multiple of 2**levels."""
    h, g = filters(family)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if x.size % (1 << levels):
        raise ValueError("input length must be divisible by 2**levels")
    details = []
    approx = np.asarray(x, dtype=float)
    for _ in range(levels):
        detail = _analysis_step(approx, g)
        approx = _analysis_step(approx, h)
        details.append(detail)
    return [approx] + details[::-1]


def waverec(coeffs: list[np.ndarray], family: str) -> np.ndarray:
    h, g = filters(family)
    approx = coeffs[0]
    for detail in coeffs[1:]:
        approx = _synthesis_step(approx, detail, h, g)
    return approx


def universal_threshold(finest_detail: np.ndarray, n: int, scale: float = 1.0) -> float:
    """sigma * sqrt(2 ln n), sigma estimated robustly from the finest detail band.

    Falls back to the band's standard deviation when the median absolute
    deviation degenerates to zero (sparse disturbances on a flat trace).
    """
    med = float(np.median(finest_detail))
    mad = float(np.median(np.abs(finest_detail - med)))
    sigma = mad / 0.6745 if mad > 0 else float(finest_detail.std())
    return scale * sigma * math.sqrt(2.0 * math.log(max(n, 2)))


def apply_threshold(coeffs: np.ndarray, threshold: float, rule: str) -> np.ndarray:
    if rule == "soft":
        return np.sign(coeffs) * np.maximum(np.abs(coeffs) - threshold, 0.0)
    if rule == "hard":
        return np.where(np.abs(coeffs) > threshold, coeffs, 0.0)
    raise ValueError(f"unknown threshold rule {rule!r}")


def denoise_signal(
    x: np.ndarray, family: str, levels: int, rule: str, threshold_scale: float
) -> np.ndarray:
    """Denoise a 1-D signal; the approximation band passes through untouched."""
    x = np.asarray(x, dtype=float)
    n = x.size
    block = 1 << levels
    if n < block:
        raise ValueError(f"signal of {n} samples too short for {levels} levels")
    # Symmetric extension away from both edges, rounded up to a full block.
    target = math.ceil((n + 16) / block) * block
    pad_left = (target - n) // 2
    pad_right = target - n - pad_left
    padded = np.pad(x, (pad_left, pad_right), mode="symmetric")
    coeffs = wavedec(padded, family, levels)
    threshold = universal_threshold(coeffs[-1], padded.size, threshold_scale)
    cleaned = [coeffs[0]] + [apply_threshold(d, threshold, rule) for d in coeffs[1:]]
    rebuilt = waverec(cleaned, family)
    return rebuilt[pad_left : pad_left + n]
