"""Activity-level fusion of per-action quality classifications.

Each action contributes its quality distribution weighted by the action
recognizer's confidence in it; the weighted vote is renormalized and the
top class becomes the activity's quality decision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .learn import ClassDistribution

_WEIGHT_TOL = 1e-9


@dataclass
class ActionResult:
    """One action's recognition outcome: what it was, how well, how sure."""

    action_dist: ClassDistribution
    quality_dist: ClassDistribution
    weight: float | None = None

    def __post_init__(self):
        top = self.action_dist.top_prob
        if self.weight is None:
            self.weight = top
        elif abs(self.weight - top) > _WEIGHT_TOL:
            raise ValueError(
                f"weight {self.weight} disagrees with action confidence {top}"
            )


@dataclass
class ActivityRecord:
    """Ordered action results forming one driving activity."""

    actions: list[ActionResult]
    activity_label: str | None = None

    def __post_init__(self):
        if not self.actions:
            raise ValueError("an activity needs at least one action")


def fuse(activity: ActivityRecord) -> ClassDistribution:
    """Confidence-weighted vote over the activity's quality distributions."""
    labels = activity.actions[0].quality_dist.class_labels
    for res in activity.actions:
        if res.quality_dist.class_labels != labels:
            raise ValueError("quality classes differ across actions")
    combined = np.zeros(len(labels))
    for res in activity.actions:
        combined += res.weight * res.quality_dist.probs
    total = float(combined.sum())
    if total <= 0.0:
        raise ValueError("all fusion weights are zero")
    return ClassDistribution(combined / total, labels)


def rank_k(dist: ClassDistribution, true_class, k: int) -> bool:
    """True when the true class ranks among the k most probable ones.

    Ties are broken toward the lower class index, so the result is
    deterministic for uniform distributions too.
    """
    n = len(dist.class_labels)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    order = np.argsort(-dist.probs, kind="stable")
    top = [dist.class_labels[i] for i in order[:k]]
    return true_class in top


def save_activity(activity: ActivityRecord, path: str) -> None:
    """Rows of action probabilities, quality probabilities, and weight."""
    first = activity.actions[0]
    n_action = len(first.action_dist.class_labels)
    n_quality = len(first.quality_dist.class_labels)
    lines = [f"{n_action},{n_quality}"]
    for res in activity.actions:
        vals = list(res.action_dist.probs) + list(res.quality_dist.probs) + [res.weight]
        lines.append(",".join(repr(float(v)) for v in vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_activity(path: str) -> ActivityRecord:
    with open(path) as fh:
        header = fh.readline().strip()
        n_action, n_quality = (int(v) for v in header.split(","))
        actions = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = [float(v) for v in line.split(",")]
            if len(vals) != n_action + n_quality + 1:
                raise ValueError(f"bad activity row in {path}")
            action_probs = np.array(vals[:n_action])
            quality_probs = np.array(vals[n_action : n_action + n_quality])
            weight = vals[-1]
            actions.append(
                ActionResult(
                    action_dist=ClassDistribution(action_probs, tuple(range(n_action))),
                    quality_dist=ClassDistribution(quality_probs, tuple(range(n_quality))),
                    weight=weight,
                )
            )
    return ActivityRecord(actions)
