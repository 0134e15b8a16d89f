"""Fragment feature matrices: ten segments by ten features.

A fragment is split into ten contiguous segments. The quality flavor
summarizes each segment's gradient (timing, speed, and spread of the
motion); the action flavor summarizes each segment's raw strengths.
Matrices are z-scored per feature with statistics fitted on the training
split only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import Fragment
from .preprocess import noise_scale

SEGMENTS = 10

QUALITY_FEATURES = (
    "duration",
    "grad_max",
    "grad_min",
    "grad_mean",
    "grad_var",
    "first_minus_last",
    "first_minus_max",
    "first_minus_min",
    "last_minus_max",
    "last_minus_min",
)

ACTION_FEATURES = (
    "average",
    "range",
    "mad",
    "variance",
    "third_moment",
    "kurtosis",
    "iqr",
    "sum",
    "rms",
    "skewness",
)

FLAVORS = ("quality", "action")


@dataclass
class NormalizationStats:
    """Per-feature shift/scale fitted on a training split."""

    shift: np.ndarray
    scale: np.ndarray
    flavor: str

    def __post_init__(self):
        self.shift = np.asarray(self.shift, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float)
        if self.shift.shape != (SEGMENTS,) or self.scale.shape != (SEGMENTS,):
            raise ValueError("normalization stats must hold one entry per feature")
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")


@dataclass
class FeatureMatrix:
    """10x10 matrix of per-segment features, quality or action flavor."""

    values: np.ndarray
    flavor: str
    normalization: NormalizationStats | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (SEGMENTS, SEGMENTS):
            raise ValueError(f"feature matrix must be 10x10, got {self.values.shape}")
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix entries must be finite")


def segment10(sample_count: int) -> list[tuple[int, int]]:
    """Split `sample_count` samples into 10 contiguous half-open ranges.

    Lengths differ by at most one; the remainder goes to the leading
    segments.
    """
    if sample_count < SEGMENTS:
        raise ValueError(f"fragment of {sample_count} samples too short to segment")
    base, rem = divmod(sample_count, SEGMENTS)
    ranges = []
    pos = 0
    for i in range(SEGMENTS):
        length = base + (1 if i < rem else 0)
        ranges.append((pos, pos + length))
        pos += length
    return ranges


def _quality_row(grads: np.ndarray, seg_samples: int, tick_seconds: float) -> list[float]:
    g_max = float(grads.max())
    g_min = float(grads.min())
    g_mean = float(grads.mean())
    g_var = float(np.sum((grads - g_mean) ** 2))
    first = float(grads[0])
    last = float(grads[-1])
    return [
        tick_seconds * (seg_samples - 1),
        g_max,
        g_min,
        g_mean,
        g_var,
        first - last,
        first - g_max,
        first - g_min,
        last - g_max,
        last - g_min,
    ]


def quality_features(fragment: Fragment) -> FeatureMatrix:
    """Per-segment gradient statistics.

    Each segment's row is computed over the gradient values between its
    own samples, so every segment needs at least two samples (fragments of
    20+ samples always qualify).
    """
    s = fragment.sample_count
    rows = []
    for a, b in segment10(s):
        grads = fragment.gradient[a : b - 1]
        if grads.size == 0:
            raise ValueError(
                f"fragment of {s} samples leaves a segment without gradient values"
            )
        rows.append(_quality_row(grads, b - a, fragment.tick_seconds))
    return FeatureMatrix(np.array(rows), "quality")


def _action_row(x: np.ndarray) -> list[float]:
    n = x.size
    mean = float(x.mean())
    centered = x - mean
    m2 = float(np.mean(centered**2))
    if m2 > 0.0:
        skew = float(np.mean(centered**3)) / m2**1.5
        kurt = float(np.mean(centered**4)) / m2**2 - 3.0
    else:
        skew = 0.0
        kurt = 0.0
    q1, q3 = np.percentile(x, [25.0, 75.0])
    return [
        mean,
        float(x.max() - x.min()),
        float(np.mean(np.abs(centered))),
        float(np.sum(centered**2)),
        float(np.mean(x**3)),
        kurt,
        float(q3 - q1),
        float(x.sum()),
        math.sqrt(float(np.mean(x**2))),
        skew,
    ]


def action_features(fragment: Fragment) -> FeatureMatrix:
    """Per-segment strength statistics."""
    rows = []
    for a, b in segment10(fragment.sample_count):
        rows.append(_action_row(fragment.samples[a:b]))
    return FeatureMatrix(np.array(rows), "action")


def motion_distance(fragment: Fragment, noise_level: float | None = None) -> float:
    """Strength oscillation range covered by the motion, in dB.

    When an interior extremum stands out from the start-to-end chord by
    more than three times the noise level (clutch/brake shape), the path
    through it is measured; otherwise the plain start-to-end difference is
    used (throttle, monotone shape).
    """
    samples = fragment.samples
    s_a = fragment.start_strength
    s_e = fragment.end_strength
    if samples.size <= 2:
        return abs(s_a - s_e)
    if noise_level is None:
        noise_level = noise_scale(samples)
    chord = np.linspace(s_a, s_e, samples.size)
    deviation = samples - chord
    interior = deviation[1:-1]
    peak = int(np.argmax(np.abs(interior))) + 1
    if abs(deviation[peak]) > 3.0 * noise_level:
        s_m = float(samples[peak])
        return abs(s_a - s_m) + abs(s_m - s_e)
    return abs(s_a - s_e)


def fit_normalization(matrices: list[FeatureMatrix]) -> NormalizationStats:
    """Fit per-feature z-scoring stats over all segments of the given matrices."""
    if not matrices:
        raise ValueError("cannot fit normalization on an empty set")
    flavors = {m.flavor for m in matrices}
    if len(flavors) != 1:
        raise ValueError("cannot mix flavors when fitting normalization")
    rows = np.vstack([m.values for m in matrices])
    shift = rows.mean(axis=0)
    scale = rows.std(axis=0)
    scale = np.where(scale > 0.0, scale, 1.0)
    return NormalizationStats(shift=shift, scale=scale, flavor=flavors.pop())


def normalize(matrix: FeatureMatrix, stats: NormalizationStats) -> FeatureMatrix:
    """Apply fitted shift/scale; not idempotent unless stats are refitted."""
    if matrix.flavor != stats.flavor:
        raise ValueError(f"flavor mismatch: {matrix.flavor} vs {stats.flavor}")
    values = (matrix.values - stats.shift) / stats.scale
    return FeatureMatrix(values, matrix.flavor, normalization=stats)


def save_matrix(matrix: FeatureMatrix, path: str) -> None:
    lines = [matrix.flavor]
    for row in matrix.values:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path: str) -> FeatureMatrix:
    with open(path) as fh:
        flavor = fh.readline().strip()
        values = np.loadtxt(fh, delimiter=",")
    return FeatureMatrix(values, flavor)
