"""Action boundary detection on the gradient sequence.

A sliding scan flags candidate start/end points where the gradient
switches between a near-zero window and a strongly deviating one; the
candidates are then pruned to the non-overlapping fragment pairing that
maximizes the mean recognizer confidence.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .preprocess import GradientSequence
from .signal_sim import RssTrace


@dataclass
class BoundaryParams:
    """Sliding-scan settings: window half-length, stride, and the two thresholds."""

    half_window: int = 5
    stride: int = 2
    ratio_threshold: float = 5.0
    quiet_threshold: float = 0.5

    def __post_init__(self):
        if self.half_window < 1:
            raise ValueError("half_window must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.ratio_threshold <= 1:
            raise ValueError("ratio_threshold must be > 1")
        if self.quiet_threshold <= 0:
            raise ValueError("quiet_threshold must be > 0")


@dataclass
class BoundaryPoint:
    index: int
    kind: str  # "start" or "end"

    def __post_init__(self):
        if self.kind not in ("start", "end"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")


@dataclass
class Fragment:
    """Contiguous trace slice holding one action, with its edge statistics.

    `start_gradient`/`end_gradient` come from the enclosing gradient
    sequence at the boundary indices; `gradient` holds the fragment's own
    first differences.
    """

    start_index: int
    end_index: int
    samples: np.ndarray
    gradient: np.ndarray
    tick_seconds: float
    start_strength: float
    end_strength: float
    start_gradient: float
    end_gradient: float

    @property
    def sample_count(self) -> int:
        return self.end_index - self.start_index + 1


def detect_boundaries(gs: GradientSequence, params: BoundaryParams) -> list[BoundaryPoint]:
    """Scan the gradient sequence for unpruned start/end candidates.

    At each scanned position the window means before and after the point
    are compared: a start needs a quiet pre-window and a post-window
    deviating by more than the ratio threshold, an end the mirror image.
    The final position, whose post-window is clipped by the sequence end,
    is scanned with the shorter window.
    """
    vals = gs.values
    g = vals.size
    half = params.half_window
    if g <= 2 * half:
        raise ValueError(f"gradient sequence of {g} values too short for half_window={half}")
    points = []
    for y in range(half, g - half + 1, params.stride):
        pre = vals[y - half : y]
        post = vals[y + 1 : y + 1 + half]
        a_r = abs(float(pre.mean()))
        a_o = abs(float(post.mean())) if post.size else 0.0
        if a_o > params.ratio_threshold * a_r and a_r <= params.quiet_threshold:
            points.append(BoundaryPoint(y, "start"))
        elif a_r > params.ratio_threshold * a_o and a_o <= params.quiet_threshold:
            points.append(BoundaryPoint(y, "end"))
    return points


def fragment_trace(
    trace: RssTrace, spans: Iterable[tuple[int, int] | Sequence[int]]
) -> list[Fragment]:
    """Materialize fragments for (start, end) sample-index pairs."""
    samples = trace.samples
    grad = np.diff(samples)
    fragments = []
    for span in spans:
        start, end = int(span[0]), int(span[1])
        if not (0 <= start < end <= samples.size - 1):
            raise ValueError(f"fragment [{start}, {end}] outside trace of {samples.size}")
        fragments.append(
            Fragment(
                start_index=start,
                end_index=end,
                samples=samples[start : end + 1],
                gradient=grad[start:end],
                tick_seconds=trace.tick_seconds,
                start_strength=float(samples[start]),
                end_strength=float(samples[end]),
                start_gradient=float(grad[start]),
                end_gradient=float(grad[min(end, grad.size - 1)]),
            )
        )
    return fragments


def dedupe_candidates(
    points: Sequence[BoundaryPoint], max_gap: int = 4
) -> list[BoundaryPoint]:
    """Collapse runs of same-kind candidates into one representative each.

    The scan emits one point per stride while its conditions hold, so a
    single physical edge shows up as a short run. The window geometry
    triggers starts early and keeps ends ringing late, so a run of starts
    is represented by its last point and a run of ends by its first.
    """
    out = []
    for kind in ("start", "end"):
        indices = sorted(p.index for p in points if p.kind == kind)
        runs: list[list[int]] = []
        for idx in indices:
            if runs and idx - runs[-1][-1] <= max_gap:
                runs[-1].append(idx)
            else:
                runs.append([idx])
        out.extend(
            BoundaryPoint(run[-1] if kind == "start" else run[0], kind) for run in runs
        )
    return sorted(out, key=lambda p: (p.index, p.kind))


def edge_plausibility(trace: RssTrace, window: int = 12) -> Callable[[int, bool], float]:
    """Edge plausibility in (0, 1) from level statistics around a point.

    A genuine boundary separates a flat stretch from a moving one, so a
    point is scored by two mean comparisons on the raw samples: the two
    quiet-side windows must agree in level (flatness), and the motion-side
    window must sit at a visibly different level than the adjacent quiet
    window (step). Both tests are normalized by the window-mean noise
    error derived from the trace's first differences, and the score is
    averaged over the point and its two neighbours to smooth the search
    landscape. Works on raw traces; denoised inputs only sharpen it.
    """
    samples = trace.samples
    diffs = np.diff(samples)
    mad = float(np.median(np.abs(diffs - np.median(diffs))))
    sigma = max(mad / 0.6745 / math.sqrt(2.0), 1e-4)
    mean_error = sigma / math.sqrt(window)
    n = samples.size

    def mean_of(lo: int, hi: int) -> float | None:
        lo, hi = max(0, lo), min(n, hi)
        if hi - lo < 4:
            return None
        return float(samples[lo:hi].mean())

    def single(idx: int, motion_right: bool) -> float:
        if motion_right:
            far = mean_of(idx - 2 * window, idx - window)
            near = mean_of(idx - window, idx)
            inner = mean_of(idx + 1, idx + 1 + window)
        else:
            far = mean_of(idx + 1 + window, idx + 1 + 2 * window)
            near = mean_of(idx + 1, idx + 1 + window)
            inner = mean_of(idx - window, idx)
        if far is None or near is None or inner is None:
            return 0.0
        flat = 1.0 / (1.0 + (abs(near - far) / (2.0 * mean_error)) ** 2)
        step = abs(inner - near)
        return flat * step * step / (step * step + (6.0 * mean_error) ** 2)

    def edge(idx: int, motion_right: bool) -> float:
        return (
            single(idx - 1, motion_right)
            + single(idx, motion_right)
            + single(idx + 1, motion_right)
        ) / 3.0

    return edge


def level_step_scorer(
    trace: RssTrace, window: int = 12
) -> Callable[[Fragment], tuple[str, float]]:
    """Model-free fragment scorer for pruning when no recognizer is loaded.

    The fragment score is the product of the edge plausibilities of its
    two boundaries; the action label is unknown.
    """
    edge = edge_plausibility(trace, window)

    def score(fragment: Fragment) -> tuple[str, float]:
        return "?", edge(fragment.start_index, True) * edge(fragment.end_index, False)

    return score


def prune_boundaries(
    candidates: Sequence[BoundaryPoint],
    trace: RssTrace,
    action_scorer: Callable[[Fragment], tuple[str, float]],
    *,
    min_length: int = 10,
    max_length: int | None = None,
) -> list[Fragment]:
    """Pick the fragment pairing maximizing mean recognizer confidence.

    Feasible pairings match each chosen start with a later end, fragments
    at least `min_length` samples long and pairwise non-overlapping. The
    objective is (1/U) * sum of per-fragment confidences; ties prefer
    more fragments, then earlier starts, then earlier ends. Solved by
    chain dynamic programming with suffix maxima, linear in the number of
    feasible (start, end) pairs per chain length. `max_length` restricts
    the feasible set when the caller knows an upper bound on action span.

    Returns an empty list when no pairing is feasible.
    """
    starts = sorted(c.index for c in candidates if c.kind == "start")
    ends = sorted(c.index for c in candidates if c.kind == "end")
    spans = []
    for s in starts:
        for e in ends:
            length = e - s + 1
            if length >= max(min_length, 2) and (max_length is None or length <= max_length):
                spans.append((s, e))
    if not spans:
        return []
    spans.sort()
    fragments = fragment_trace(trace, spans)
    probs = [float(action_scorer(f)[1]) for f in fragments]
    n = len(spans)
    span_starts = [s for s, _ in spans]

    # A chain of length c starting at fragment j continues with the best
    # chain of length c-1 among fragments starting after j's end. Equal
    # totals resolve toward the smaller (start, end) successor, which
    # yields the lexicographically earliest chain among the maximizers.
    total = [[float("-inf")] * n]  # total[c-1][j], chains of length c
    succ: list[list[int]] = [[-1] * n]
    total[0] = probs[:]
    max_len = 1
    while True:
        prev = total[max_len - 1]
        # suffix_best[i] = (best total over j >= i, its smallest j)
        suffix_best = [None] * (n + 1)
        best = (float("-inf"), -1)
        for i in range(n - 1, -1, -1):
            if prev[i] >= best[0]:
                best = (prev[i], i)
            suffix_best[i] = best
        cur = [float("-inf")] * n
        cur_succ = [-1] * n
        alive = False
        for j in range(n):
            pos = bisect.bisect_right(span_starts, spans[j][1])
            if pos >= n:
                continue
            sub_total, sub_j = suffix_best[pos]
            if sub_j < 0 or sub_total == float("-inf"):
                continue
            cur[j] = probs[j] + sub_total
            cur_succ[j] = sub_j
            alive = True
        if not alive:
            break
        total.append(cur)
        succ.append(cur_succ)
        max_len += 1
        if max_len > n:
            break

    winner = None  # (mean, c, j)
    for c_idx, row in enumerate(total):
        c = c_idx + 1
        for j in range(n):
            if row[j] == float("-inf"):
                continue
            mean = row[j] / c
            if winner is None or (
                mean > winner[0]
                or (mean == winner[0] and c > winner[1])
                or (mean == winner[0] and c == winner[1] and j < winner[2])
            ):
                winner = (mean, c, j)

    chain = []
    c, j = winner[1], winner[2]
    while c >= 1:
        chain.append(j)
        j = succ[c - 1][j]
        c -= 1
    return [fragments[j] for j in chain]
