import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiq.fusion import (
    ActionResult,
    ActivityRecord,
    fuse,
    load_activity,
    rank_k,
    save_activity,
)
from wiq.learn import ClassDistribution

ACTION_LABELS = tuple("ABCDEF")
QUALITY_LABELS = ("q1", "q2", "q3")


def result(action_probs, quality_probs):
    return ActionResult(
        action_dist=ClassDistribution(np.asarray(action_probs, dtype=float), ACTION_LABELS[: len(action_probs)]),
        quality_dist=ClassDistribution(np.asarray(quality_probs, dtype=float), QUALITY_LABELS[: len(quality_probs)]),
    )


def random_activity(rng, m=None, n_quality=3):
    m = m or int(rng.integers(1, 7))
    results = []
    for _ in range(m):
        a = rng.uniform(0.05, 1.0, size=6)
        q = rng.uniform(0.05, 1.0, size=n_quality)
        results.append(result(a / a.sum(), q / q.sum()))
    return ActivityRecord(results)


class TestActionResult:
    def test_weight_defaults_to_top_action_probability(self):
        res = result([0.6, 0.4], [0.5, 0.5])
        assert res.weight == pytest.approx(0.6)

    def test_inconsistent_weight_rejected(self):
        with pytest.raises(ValueError):
            ActionResult(
                action_dist=ClassDistribution(np.array([0.6, 0.4]), ("A", "B")),
                quality_dist=ClassDistribution(np.array([0.5, 0.5]), ("q1", "q2")),
                weight=0.9,
            )


class TestFuse:
    def test_single_action_identity(self):
        res = result([1.0, 0.0], [0.3, 0.2, 0.5])
        fused = fuse(ActivityRecord([res]))
        assert np.allclose(fused.probs, [0.3, 0.2, 0.5])

    def test_two_action_weighted_vote(self):
        r1 = result([0.6, 0.4], [1.0, 0.0])
        r2 = result([0.4, 0.6], [0.0, 1.0])
        fused = fuse(ActivityRecord([r1, r2]))
        # raw vote (0.6, 0.6) with weights (0.6, 0.6): normalized equal
        assert np.allclose(fused.probs, [0.5, 0.5])

    def test_unequal_weights_decide(self):
        r1 = result([0.8, 0.2], [1.0, 0.0])
        r2 = result([0.55, 0.45], [0.0, 1.0])
        fused = fuse(ActivityRecord([r1, r2]))
        assert fused.top_label == "q1"
        assert np.allclose(fused.probs, [0.8 / 1.35, 0.55 / 1.35])

    def test_matches_bruteforce_summation(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            activity = random_activity(rng)
            fused = fuse(activity)
            n = len(QUALITY_LABELS)
            raw = [0.0] * n
            for res in activity.actions:
                for k in range(n):
                    raw[k] += res.weight * res.quality_dist.probs[k]
            total = sum(raw)
            expected = [v / total for v in raw]
            assert np.allclose(fused.probs, expected, atol=1e-12)

    def test_mismatched_quality_classes_rejected(self):
        r1 = result([1.0, 0.0], [0.5, 0.5])
        r2 = result([1.0, 0.0], [0.2, 0.3, 0.5])
        with pytest.raises(ValueError):
            fuse(ActivityRecord([r1, r2]))

    def test_empty_activity_rejected(self):
        with pytest.raises(ValueError):
            ActivityRecord([])

    def test_unanimous_argmax_is_preserved(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            results = []
            for _ in range(int(rng.integers(2, 6))):
                q = rng.uniform(0.01, 0.3, size=3)
                q[1] = 1.0  # class q2 always on top
                a = rng.uniform(0.05, 1.0, size=6)
                results.append(result(a / a.sum(), q / q.sum()))
            assert fuse(ActivityRecord(results)).top_label == "q2"

    def test_argmax_invariant_to_uniform_weight_scaling(self):
        # Scaling every action confidence by the same factor rescales the
        # unnormalized vote; after renormalization the distribution is
        # unchanged. Simulated by scaling the quality vote directly.
        rng = np.random.default_rng(2)
        activity = random_activity(rng, m=4)
        fused = fuse(activity)
        for scale in (0.25, 3.0):
            raw = np.zeros(3)
            for res in activity.actions:
                raw += scale * res.weight * res.quality_dist.probs
            assert np.argmax(raw) == np.argmax(fused.probs)
            assert np.allclose(raw / raw.sum(), fused.probs, atol=1e-12)


class TestRankK:
    def dist(self, probs):
        return ClassDistribution(np.asarray(probs, dtype=float), tuple(range(len(probs))))

    def test_second_ranked_found_at_k2(self):
        d = self.dist([0.5, 0.3, 0.2])
        assert not rank_k(d, 1, 1)
        assert rank_k(d, 1, 2)

    def test_k_equal_n_always_true(self):
        d = self.dist([0.1, 0.2, 0.3, 0.4])
        for cls in range(4):
            assert rank_k(d, cls, 4)

    def test_uniform_ties_break_by_index(self):
        d = self.dist([0.25, 0.25, 0.25, 0.25])
        assert rank_k(d, 0, 1)
        assert not rank_k(d, 2, 1)
        assert rank_k(d, 2, 3)

    def test_k_bounds(self):
        d = self.dist([0.5, 0.5])
        with pytest.raises(ValueError):
            rank_k(d, 0, 0)
        with pytest.raises(ValueError):
            rank_k(d, 0, 3)

    @given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=8), st.integers(0, 7))
    @settings(max_examples=80, deadline=None)
    def test_rank_k_monotone_in_k(self, raw, true_idx):
        probs = np.asarray(raw) / np.sum(raw)
        if true_idx >= len(probs):
            return
        d = ClassDistribution(probs, tuple(range(len(probs))))
        hits = [rank_k(d, true_idx, k) for k in range(1, len(probs) + 1)]
        assert hits[-1]
        for earlier, later in zip(hits, hits[1:]):
            assert later or not earlier


class TestActivityIO:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        activity = random_activity(rng, m=3)
        path = str(tmp_path / "activity.txt")
        save_activity(activity, path)
        loaded = load_activity(path)
        assert len(loaded.actions) == 3
        for orig, back in zip(activity.actions, loaded.actions):
            assert np.allclose(orig.quality_dist.probs, back.quality_dist.probs)
            assert np.allclose(orig.action_dist.probs, back.action_dist.probs)
            assert back.weight == pytest.approx(orig.weight)
        assert np.allclose(fuse(loaded).probs, fuse(activity).probs)
