"""End-to-end experiment orchestration at desk scale.

Generates labeled synthetic corpora, runs the denoise / segment /
extract / train / classify pipeline (plus activity fusion where the task
calls for it), and emits deterministic reports: row-normalized confusion
matrices, per-class and average accuracy, and rank-k tables. The
hardware-scale studies are reproduced here on simulated traces with
reduced class and sample counts; the scaling is recorded in every
report.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import features as feat
from . import fusion as fusion_mod
from . import learn
from .boundary import (
    BoundaryParams,
    dedupe_candidates,
    detect_boundaries,
    fragment_trace,
    level_step_scorer,
    prune_boundaries,
)
from .preprocess import WaveletConfig, denoise, gradient
from .signal_sim import (
    ACTIONS,
    ACTIVITY_TEMPLATES,
    DEFAULT_TICK_SECONDS,
    ActionEntry,
    ActionScript,
    ChannelModel,
    RssTrace,
    add_noise,
    perturb_trajectory,
    script_from_template,
    synth_trajectory,
    trajectory_to_rss,
)

TASKS = (
    "action_recognition",
    "body_status",
    "driver_id",
    "driver_category",
    "fusion_eval",
    "ablation",
)

SNR_BANDS = {"high": (8.0, 11.0), "low": (4.0, 8.0)}

STATUS_CLASSES = ("normal", "light_distraction", "heavy_distraction")

# Distraction makes pedal work sluggish: motions travel farther and take
# proportionally longer (the pedal speed itself stays the same), with
# unsteady pressure throughout. Every status moves at the shared slope,
# so first-order gradient statistics carry no status signal; the motion's
# duration (and everything that accumulates with it) does.
STATUS_DURATIONS = {
    "normal": (34, 46),
    "light_distraction": (50, 64),
    "heavy_distraction": (70, 88),
}
STATUS_SLOPE = 0.0112  # displacement per tick, shared by all statuses
STATUS_JITTER = {"normal": 0.08, "light_distraction": 0.10, "heavy_distraction": 0.12}

DRIVER_CLASSES = tuple(f"driver_{i}" for i in range(6))


@dataclass
class DriverProfile:
    speed_weights: tuple[float, float, float]  # fast, regular, slow
    extent_range: tuple[float, float]
    duration_range: tuple[int, int]
    jitter: float
    category: str


DRIVER_PROFILES = {
    "driver_0": DriverProfile((0.45, 0.5, 0.05), (0.8, 0.95), (40, 52), 0.008, "experienced"),
    "driver_1": DriverProfile((0.3, 0.65, 0.05), (0.75, 0.9), (44, 58), 0.014, "experienced"),
    "driver_2": DriverProfile((0.2, 0.6, 0.2), (0.65, 0.85), (48, 66), 0.03, "less_experienced"),
    "driver_3": DriverProfile((0.15, 0.55, 0.3), (0.6, 0.8), (52, 70), 0.04, "less_experienced"),
    "driver_4": DriverProfile((0.1, 0.4, 0.5), (0.5, 0.75), (56, 80), 0.07, "novice"),
    "driver_5": DriverProfile((0.05, 0.35, 0.6), (0.45, 0.7), (60, 84), 0.09, "novice"),
}

CATEGORY_CLASSES = ("experienced", "less_experienced", "novice")

# Quality-feature subsets for the sensitivity study. "grad3" holds the
# first-order gradient statistics, "grad_full" adds the second-order
# spread, "range3"/"range_full" the edge-difference features.
ABLATION_SUBSETS = {
    "grad3": ("grad_max", "grad_min", "grad_mean"),
    "grad_full": ("grad_max", "grad_min", "grad_mean", "grad_var"),
    "range3": ("first_minus_last", "first_minus_max", "first_minus_min"),
    "range_full": (
        "first_minus_last",
        "first_minus_max",
        "first_minus_min",
        "last_minus_max",
        "last_minus_min",
    ),
    "grad3+range_full": (
        "grad_max",
        "grad_min",
        "grad_mean",
        "first_minus_last",
        "first_minus_max",
        "first_minus_min",
        "last_minus_max",
        "last_minus_min",
    ),
    "grad_full+range_full": (
        "grad_max",
        "grad_min",
        "grad_mean",
        "grad_var",
        "first_minus_last",
        "first_minus_max",
        "first_minus_min",
        "last_minus_max",
        "last_minus_min",
    ),
    "all": feat.QUALITY_FEATURES,
}

SCALE_NOTE = (
    "desk-scale synthetic reproduction: 6 action classes, 3 body statuses, "
    "6 simulated drivers in 3 experience bands; accuracies are not comparable "
    "to hardware-scale results"
)


class PipelineError(RuntimeError):
    """Failure of one pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class ModelConfig:
    iterations: int = 100
    learning_rate: float = 0.06
    batch_size: int = 32
    hidden_width: int = 24
    iteration_checkpoints: tuple[int, ...] = ()


@dataclass
class ExperimentSpec:
    task: str
    snr_band: str = "high"
    train_per_class: int = 100
    test_per_class: int = 100
    seed: int = 0
    classes: tuple = ()
    model: ModelConfig = field(default_factory=ModelConfig)
    learners: tuple[str, ...] = ("cnn",)
    activity_count_range: tuple[int, int] = (3, 5)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.snr_band not in SNR_BANDS:
            raise ValueError(f"unknown SNR band {self.snr_band!r}")
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise ValueError("per-class counts must be >= 1")
        if not self.classes:
            self.classes = default_classes(self.task)
        for learner in self.learners:
            if learner not in ("cnn", "svm", "knn"):
                raise ValueError(f"unknown learner {learner!r}")


def default_classes(task: str) -> tuple:
    if task == "action_recognition":
        return ACTIONS
    if task in ("body_status", "fusion_eval", "ablation"):
        return STATUS_CLASSES
    if task == "driver_id":
        return DRIVER_CLASSES
    if task == "driver_category":
        return CATEGORY_CLASSES
    raise ValueError(f"unknown task {task!r}")


@dataclass
class LabeledTrace:
    trace: RssTrace
    label: str
    uid: int
    target: int = 0  # index into trace.ground_truth of the labeled action


@dataclass
class Corpus:
    train: list[LabeledTrace]
    test: list[LabeledTrace]
    classes: tuple

    def __post_init__(self):
        train_ids = {t.uid for t in self.train}
        test_ids = {t.uid for t in self.test}
        if train_ids & test_ids:
            raise ValueError("train and test splits overlap")


@dataclass
class Report:
    task: str
    classes: tuple
    confusion: np.ndarray
    per_class_accuracy: dict
    average_accuracy: float
    rank_k: dict
    extras: dict = field(default_factory=dict)
    scale_note: str = SCALE_NOTE


def confusion(predictions, truths, labels) -> np.ndarray:
    """Row-normalized confusion matrix: entry (r, c) = P(predicted c | true r)."""
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths differ in length")
    labels = list(labels)
    index = {c: i for i, c in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)))
    for pred, true in zip(predictions, truths):
        if pred not in index or true not in index:
            raise ValueError(f"label outside label set: {pred!r}/{true!r}")
        counts[index[true], index[pred]] += 1.0
    row_sums = counts.sum(axis=1)
    if np.any(row_sums == 0):
        missing = [labels[i] for i in np.flatnonzero(row_sums == 0)]
        raise ValueError(f"no samples for classes {missing}")
    return counts / row_sums[:, None]


# ---------------------------------------------------------------------------
# Dataset generation


def _pick_profile(rng, weights) -> str:
    return ("fast", "regular", "slow")[int(rng.choice(3, p=np.array(weights) / sum(weights)))]


# Clutch presses always travel deep enough to cross the response extremum
# (a gear change needs a full disengage), so their extent band is narrow
# and high regardless of the driver profile.
CLUTCH_EXTENT_RANGE = (0.78, 1.0)


BRAKE_EXTENT_RANGE = (0.65, 0.98)


def _extent_for(rng, action: str, extent_range: tuple[float, float]) -> float:
    u = float(rng.uniform(0.0, 1.0))
    if action in ("CP", "CR"):
        lo, hi = CLUTCH_EXTENT_RANGE
    elif action in ("BP", "BR"):
        lo, hi = BRAKE_EXTENT_RANGE
    else:
        lo, hi = extent_range
    return lo + u * (hi - lo)


def _single_action_script(rng, action: str, *, duration, extent, profile) -> tuple[ActionScript, int]:
    """Script holding one target action, with lead-in and trailing idle."""
    lead = int(rng.integers(200, 280))
    entry = ActionEntry(action, lead, int(duration), float(extent), profile)
    initial = {}
    if not entry.is_press:
        initial[entry.pedal] = float(extent)
    script = ActionScript([entry], initial_positions=initial)
    total = entry.end_tick + int(rng.integers(160, 240))
    return script, total


def _status_activity_script(rng, label: str) -> tuple[ActionScript, int]:
    """Activity whose per-action durations and extents follow the status."""
    name = ("acceleration", "deceleration", "ground-start", "parking", "hill-start")[
        int(rng.integers(0, 5))
    ]
    actions = ACTIVITY_TEMPLATES[name]
    m = len(actions)
    params = [_status_action_params(rng, label) for _ in range(m)]
    script = script_from_template(
        name,
        start_tick=int(rng.integers(200, 280)),
        durations=[p["duration"] for p in params],
        gaps=[int(rng.integers(40, 90)) for _ in range(m)],
        extents=[p["extent"] for p in params],
        profiles=["regular"] * m,
        initial_extent=0.7,
    )
    return script, script.last_tick + int(rng.integers(160, 240))


def _activity_script(rng, profile_params) -> tuple[ActionScript, int]:
    """Script for one multi-action activity drawn from the templates."""
    label = ("acceleration", "deceleration", "ground-start", "parking", "hill-start")[
        int(rng.integers(0, 5))
    ]
    actions = ACTIVITY_TEMPLATES[label]
    m = len(actions)
    durations = [int(rng.integers(*profile_params["duration_range"])) for _ in range(m)]
    gaps = [int(rng.integers(40, 90)) for _ in range(m)]
    extents = [_extent_for(rng, a, profile_params["extent_range"]) for a in actions]
    profiles = [_pick_profile(rng, profile_params["speed_weights"]) for _ in range(m)]
    script = script_from_template(
        label,
        start_tick=int(rng.integers(200, 280)),
        durations=durations,
        gaps=gaps,
        extents=extents,
        profiles=profiles,
        initial_extent=0.7,
    )
    total = script.last_tick + int(rng.integers(160, 240))
    return script, total


# Per-trace receiver gain drift: absolute strength levels move between
# captures, so recognizers cannot lean on raw levels alone.
GAIN_DRIFT_DB = 2.5


def _render(
    rng,
    script: ActionScript,
    total: int,
    *,
    model: ChannelModel,
    jitter: float,
    snr_band: str,
    gain_drift: float = GAIN_DRIFT_DB,
    burst_duty: float | None = None,
) -> RssTrace:
    bundle = synth_trajectory(script, DEFAULT_TICK_SECONDS, total)
    if jitter > 0:
        bundle = perturb_trajectory(bundle, jitter, int(rng.integers(0, 2**31)), burst_duty)
    clean = trajectory_to_rss(bundle, model)
    if gain_drift > 0:
        clean.samples += float(rng.uniform(-gain_drift, gain_drift))
    lo, hi = SNR_BANDS[snr_band]
    return add_noise(clean, float(rng.uniform(lo, hi)), int(rng.integers(0, 2**31)))


def _action_nuisance(rng, action: str):
    return {
        "duration": int(rng.integers(48, 84)),
        "extent": _extent_for(rng, action, (0.55, 0.95)),
        "profile": ("fast", "regular", "slow")[int(rng.integers(0, 3))],
    }


def _quality_action_params(rng, action: str, profile: DriverProfile):
    return {
        "duration": int(rng.integers(*profile.duration_range)),
        "extent": _extent_for(rng, action, profile.extent_range),
        "profile": _pick_profile(rng, profile.speed_weights),
    }


def _status_action_params(rng, label: str):
    """Duration drawn from the status band; extent matched to the shared slope."""
    duration = int(rng.integers(*STATUS_DURATIONS[label]))
    extent = STATUS_SLOPE * duration * float(rng.uniform(0.94, 1.06))
    return {
        "duration": duration,
        "extent": float(np.clip(extent, 0.1, 1.0)),
        "profile": "regular",
    }


def _class_trace(rng, task: str, label: str, model: ChannelModel, snr_band: str, uid: int) -> LabeledTrace:
    if task == "action_recognition":
        nuis = _action_nuisance(rng, label)
        script, total = _single_action_script(
            rng, label, duration=nuis["duration"], extent=nuis["extent"], profile=nuis["profile"]
        )
        trace = _render(rng, script, total, model=model, jitter=0.004, snr_band=snr_band)
        target = 0
    elif task in ("body_status", "ablation"):
        action = ACTIONS[int(rng.integers(0, len(ACTIONS)))]
        params = _status_action_params(rng, label)
        script, total = _single_action_script(rng, action, **params)
        trace = _render(
            rng, script, total, model=model, jitter=STATUS_JITTER[label], snr_band=snr_band
        )
        target = 0
    elif task in ("driver_id", "driver_category"):
        driver = label
        if task == "driver_category":
            members = [d for d, p in DRIVER_PROFILES.items() if p.category == label]
            driver = members[int(rng.integers(0, len(members)))]
        profile = DRIVER_PROFILES[driver]
        action = ACTIONS[int(rng.integers(0, len(ACTIONS)))]
        params = _quality_action_params(rng, action, profile)
        script, total = _single_action_script(rng, action, **params)
        trace = _render(rng, script, total, model=model, jitter=profile.jitter, snr_band=snr_band)
        target = 0
    elif task == "fusion_eval":
        script, total = _status_activity_script(rng, label)
        trace = _render(
            rng, script, total, model=model, jitter=STATUS_JITTER[label], snr_band=snr_band
        )
        target = -1  # all actions belong to the activity
    else:
        raise ValueError(f"unknown task {task!r}")
    for iv in trace.ground_truth:
        iv.quality = label
    return LabeledTrace(trace=trace, label=label, uid=uid, target=target)


def generate_dataset(spec: ExperimentSpec, model: ChannelModel | None = None) -> Corpus:
    """Seeded synthetic corpus with disjoint train/test splits."""
    model = model or ChannelModel()
    rng = np.random.default_rng(spec.seed)
    train, test = [], []
    uid = 0
    for label in spec.classes:
        for bucket, count in ((train, spec.train_per_class), (test, spec.test_per_class)):
            for _ in range(count):
                bucket.append(_class_trace(rng, spec.task, label, model, spec.snr_band, uid))
                uid += 1
    return Corpus(train=train, test=test, classes=tuple(spec.classes))


# ---------------------------------------------------------------------------
# Pipeline stages


def _stage(name):
    def wrap(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, str(exc)) from exc

    return wrap


def _denoise_corpus(corpus: Corpus, cfg: WaveletConfig) -> Corpus:
    def clean(items):
        return [replace(item, trace=denoise(item.trace, cfg)) for item in items]

    return Corpus(train=clean(corpus.train), test=clean(corpus.test), classes=corpus.classes)


MAX_BOUNDARY_SLACK = 24
QUALITY_BOUNDARY_SLACK = 8


def _target_fragments(item: LabeledTrace, min_samples: int = 20, slack: int = MAX_BOUNDARY_SLACK):
    """Fragments for the labeled intervals of one trace (ground-truth segmentation).

    Boundaries get a seeded few-tick slack into the surrounding idle span,
    matching what the detector would emit: an action is rarely cut exactly
    at its first and last moving sample.
    """
    intervals = item.trace.ground_truth
    if item.target >= 0:
        intervals = [intervals[item.target]]
    kept = [iv for iv in intervals if iv.end_tick - iv.start_tick + 1 >= min_samples]
    rng = np.random.default_rng(item.uid * 2654435761 % 2**32)
    n = len(item.trace.samples)
    spans = []
    prev_end = 0
    for i, iv in enumerate(kept):
        next_start = kept[i + 1].start_tick if i + 1 < len(kept) else n - 1
        lead = int(rng.integers(0, slack + 1))
        trail = int(rng.integers(0, slack + 1))
        start = max(prev_end + 1 if i else 0, iv.start_tick - lead)
        end = min(next_start - 1, iv.end_tick + trail, n - 1)
        spans.append((start, end))
        prev_end = end
    frags = fragment_trace(item.trace, spans)
    return frags, kept


def _extract(items, flavor: str):
    """(matrix, label) pairs for each item's target fragments.

    Action matrices keep the full detector-like boundary slack; quality
    matrices use a small one (duration is itself a quality signal and
    should not be drowned by segmentation slack).
    """
    slack = MAX_BOUNDARY_SLACK if flavor == "action" else QUALITY_BOUNDARY_SLACK
    out = []
    for item in items:
        frags, _ = _target_fragments(item, slack=slack)
        for frag in frags:
            matrix = feat.quality_features(frag) if flavor == "quality" else feat.action_features(frag)
            out.append((matrix, item.label))
    return out


def _normalized_split(train_pairs, test_pairs):
    stats = feat.fit_normalization([m for m, _ in train_pairs])
    norm_train = [(feat.normalize(m, stats), lbl) for m, lbl in train_pairs]
    norm_test = [(feat.normalize(m, stats), lbl) for m, lbl in test_pairs]
    return norm_train, norm_test, stats


def _rank_table(probs: np.ndarray, truths, labels, ks=(1, 2, 3)) -> dict:
    table = {}
    for k in ks:
        if k > len(labels):
            continue
        hits = 0
        for row, true in zip(probs, truths):
            dist = learn.ClassDistribution(row, labels)
            hits += fusion_mod.rank_k(dist, true, k)
        table[str(k)] = hits / len(truths)
    return table


def run_experiment(spec: ExperimentSpec, model: ChannelModel | None = None) -> Report:
    """Execute the full pipeline for one experiment spec."""
    if spec.task == "fusion_eval":
        return _run_fusion(spec, model)
    if spec.task == "ablation":
        raise PipelineError("spec", "use run_ablation for the feature-subset study")

    started = time.time()
    corpus = _stage("generate")(generate_dataset, spec, model)
    corpus = _stage("denoise")(_denoise_corpus, corpus, WaveletConfig())
    flavor = "action" if spec.task == "action_recognition" else "quality"
    train_pairs = _stage("extract")(_extract, corpus.train, flavor)
    test_pairs = _stage("extract")(_extract, corpus.test, flavor)
    norm_train, norm_test, _ = _stage("extract")(_normalized_split, train_pairs, test_pairs)

    extras: dict = {"snr_band": spec.snr_band, "flavor": flavor}
    cfg = learn.TrainConfig(
        iterations=spec.model.iterations,
        learning_rate=spec.model.learning_rate,
        batch_size=spec.model.batch_size,
        seed=spec.seed,
        hidden_width=spec.model.hidden_width,
    )
    cnn, nmlp = _stage("train")(learn.train, norm_train, cfg)
    probs = _stage("classify")(learn.predict_batch, [m for m, _ in norm_test], cnn, nmlp)
    truths = [lbl for _, lbl in norm_test]
    labels = nmlp.class_labels
    predictions = [labels[i] for i in probs.argmax(axis=1)]
    matrix = _stage("report")(confusion, predictions, truths, labels)
    per_class = {
        label: float(matrix[i, i]) for i, label in enumerate(labels)
    }
    rank_table = _rank_table(probs, truths, labels)
    extras["cnn_error"] = 1.0 - float(np.mean([p == t for p, t in zip(predictions, truths)]))

    for count in spec.model.iteration_checkpoints:
        sweep_cfg = replace(cfg, iterations=count)
        c_cnn, c_nmlp = _stage("train")(learn.train, norm_train, sweep_cfg)
        extras.setdefault("cnn_error_by_iterations", {})[str(count)] = learn.error_rate(
            norm_test, c_cnn, c_nmlp
        )

    if "svm" in spec.learners:
        svm = _stage("train")(learn.svm_train, norm_train, learn.SvmConfig(iterations=spec.model.iterations, seed=spec.seed))
        extras["svm_error"] = learn.svm_error_rate(norm_test, svm)
        for count in spec.model.iteration_checkpoints:
            c_svm = learn.svm_train(norm_train, learn.SvmConfig(iterations=count, seed=spec.seed))
            extras.setdefault("svm_error_by_iterations", {})[str(count)] = learn.svm_error_rate(
                norm_test, c_svm
            )
    if "knn" in spec.learners:
        wrong = 0
        for m, t in norm_test:
            dist = learn.knn_classify(norm_train, m, k=3)
            if dist.top_label != t:
                wrong += 1
        extras["knn_error"] = wrong / len(norm_test)

    extras["runtime_seconds"] = time.time() - started
    return Report(
        task=spec.task,
        classes=labels,
        confusion=matrix,
        per_class_accuracy=per_class,
        average_accuracy=float(np.mean(np.diag(matrix))),
        rank_k=rank_table,
        extras=extras,
    )


def _run_fusion(spec: ExperimentSpec, model: ChannelModel | None = None) -> Report:
    """Train per-action models, then compare fused vs single-action accuracy."""
    started = time.time()
    corpus = _stage("generate")(generate_dataset, spec, model)
    corpus = _stage("denoise")(_denoise_corpus, corpus, WaveletConfig())

    def pairs_of(items, flavor):
        slack = MAX_BOUNDARY_SLACK if flavor == "action" else QUALITY_BOUNDARY_SLACK
        out = []
        for item in items:
            frags, kept = _target_fragments(item, slack=slack)
            for frag, iv in zip(frags, kept):
                m = feat.quality_features(frag) if flavor == "quality" else feat.action_features(frag)
                label = item.label if flavor == "quality" else iv.action
                out.append((m, label))
        return out

    q_train = _stage("extract")(pairs_of, corpus.train, "quality")
    a_train = _stage("extract")(pairs_of, corpus.train, "action")
    q_stats = feat.fit_normalization([m for m, _ in q_train])
    a_stats = feat.fit_normalization([m for m, _ in a_train])
    cfg = learn.TrainConfig(
        iterations=spec.model.iterations,
        learning_rate=spec.model.learning_rate,
        batch_size=spec.model.batch_size,
        seed=spec.seed,
        hidden_width=spec.model.hidden_width,
    )
    q_cnn, q_nmlp = _stage("train")(
        learn.train, [(feat.normalize(m, q_stats), l) for m, l in q_train], cfg
    )
    a_cnn, a_nmlp = _stage("train")(
        learn.train, [(feat.normalize(m, a_stats), l) for m, l in a_train], cfg
    )

    fused_predictions, truths = [], []
    single_hits = 0
    single_total = 0
    fused_probs = []
    for item in corpus.test:
        frags, kept = _target_fragments(item, slack=QUALITY_BOUNDARY_SLACK)
        if not frags:
            continue
        results = []
        for frag, iv in zip(frags, kept):
            qm = feat.normalize(feat.quality_features(frag), q_stats)
            am = feat.normalize(feat.action_features(frag), a_stats)
            q_dist = learn.classify(qm, q_cnn, q_nmlp)
            a_dist = learn.classify(am, a_cnn, a_nmlp)
            results.append(fusion_mod.ActionResult(action_dist=a_dist, quality_dist=q_dist))
            single_hits += q_dist.top_label == item.label
            single_total += 1
        fused = fusion_mod.fuse(fusion_mod.ActivityRecord(results))
        fused_predictions.append(fused.top_label)
        fused_probs.append(fused.probs)
        truths.append(item.label)

    labels = q_nmlp.class_labels
    matrix = _stage("report")(confusion, fused_predictions, truths, labels)
    per_class = {label: float(matrix[i, i]) for i, label in enumerate(labels)}
    fused_accuracy = float(np.mean([p == t for p, t in zip(fused_predictions, truths)]))
    extras = {
        "snr_band": spec.snr_band,
        "fused_accuracy": fused_accuracy,
        "single_action_accuracy": single_hits / single_total,
        "runtime_seconds": time.time() - started,
    }
    return Report(
        task=spec.task,
        classes=labels,
        confusion=matrix,
        per_class_accuracy=per_class,
        average_accuracy=float(np.mean(np.diag(matrix))),
        rank_k=_rank_table(np.array(fused_probs), truths, labels),
        extras=extras,
    )


# Detection runs on a lightly smoothed gradient whose edges stay sharp;
# the heavier default denoiser would smear boundaries past the tolerance.
DETECTION_WAVELET = WaveletConfig(family="haar", decomposition_levels=3)


def _boundary_trace(rng, action: str, model: ChannelModel, snr_db: float) -> RssTrace:
    """Single brisk action with short hold segments, for localization studies.

    Quick presses keep the motion's per-tick slope well above the noise
    the trace-level SNR implies; the held plateau is kept short because
    it dominates the signal variance the SNR definition scales noise by.
    """
    duration = int(rng.integers(12, 19))
    if action in ("CP", "CR"):
        extent = float(rng.uniform(0.78, 1.0))
    elif action.endswith("P"):
        extent = float(rng.uniform(0.75, 0.95))
    else:
        extent = float(rng.uniform(0.68, 0.88))
    is_press = action.endswith("P")
    lead = int(rng.integers(320, 420)) if is_press else int(rng.integers(90, 150))
    entry = ActionEntry(action, lead, duration, extent, "regular")
    initial = {} if is_press else {entry.pedal: extent}
    script = ActionScript([entry], initial_positions=initial)
    trail = int(rng.integers(90, 150)) if is_press else int(rng.integers(320, 420))
    bundle = synth_trajectory(script, DEFAULT_TICK_SECONDS, entry.end_tick + trail)
    clean = trajectory_to_rss(bundle, model)
    return add_noise(clean, snr_db, seed=int(rng.integers(0, 2**31)))


def segment_trace(
    trace: RssTrace,
    params: BoundaryParams | None = None,
    scorer=None,
    max_length: int | None = None,
):
    """Full segmentation pipeline: detect, dedupe, prune.

    Returns the pruned fragment list. Detection runs on the sharp-edge
    denoised gradient; scoring defaults to the level-step statistic on
    the raw trace.
    """
    params = params or BoundaryParams()
    sharp = denoise(trace, DETECTION_WAVELET)
    points = detect_boundaries(gradient(sharp), params)
    points = dedupe_candidates(points, max_gap=2 * params.stride)
    scorer = scorer or level_step_scorer(trace)
    return prune_boundaries(
        points, trace, scorer, min_length=2 * params.half_window, max_length=max_length
    )


def boundary_benchmark(
    n_traces: int = 200,
    snr_db: float = 9.0,
    seed: int = 7,
    params: BoundaryParams | None = None,
    tolerance: int = 5,
    model: ChannelModel | None = None,
) -> dict:
    """Boundary localization study on single-action traces.

    Reports the fraction of true boundaries matched within the tolerance
    and the fraction of emitted boundary points farther than that from
    any true one.
    """
    model = model or ChannelModel()
    rng = np.random.default_rng(seed)
    hits = 0
    truths = 0
    false_points = 0
    emitted = 0
    per_action: dict = {}
    for i in range(n_traces):
        action = ACTIONS[i % len(ACTIONS)]
        trace = _boundary_trace(rng, action, model, snr_db)
        fragments = segment_trace(trace, params, max_length=80)
        truth = trace.ground_truth[0]
        truths += 2
        emitted += 2 * len(fragments)
        start_ok = any(abs(f.start_index - truth.start_tick) <= tolerance for f in fragments)
        end_ok = any(abs(f.end_index - truth.end_tick) <= tolerance for f in fragments)
        hits += start_ok + end_ok
        stats = per_action.setdefault(action, {"hits": 0, "total": 0})
        stats["hits"] += start_ok + end_ok
        stats["total"] += 2
        for f in fragments:
            false_points += abs(f.start_index - truth.start_tick) > tolerance
            false_points += abs(f.end_index - truth.end_tick) > tolerance
    return {
        "recall": hits / truths,
        "false_fraction": false_points / max(emitted, 1),
        "traces": n_traces,
        "snr_db": snr_db,
        "tolerance": tolerance,
        "per_action": {a: s["hits"] / s["total"] for a, s in sorted(per_action.items())},
    }


def _subset_columns(subset) -> list[int]:
    cols = []
    for name in subset:
        if name not in feat.QUALITY_FEATURES:
            raise ValueError(f"unknown quality feature {name!r}")
        cols.append(feat.QUALITY_FEATURES.index(name))
    return cols


def _mask_matrix(matrix: feat.FeatureMatrix, cols: list[int]) -> feat.FeatureMatrix:
    values = np.zeros_like(matrix.values)
    values[:, cols] = matrix.values[:, cols]
    return feat.FeatureMatrix(values, matrix.flavor, matrix.normalization)


def run_ablation(
    subsets: dict | None = None,
    *,
    train_per_class: int = 60,
    test_per_class: int = 60,
    seed: int = 0,
    iterations: int = 100,
    bands: tuple[str, ...] = ("high", "low"),
    model: ChannelModel | None = None,
) -> dict:
    """Body-status error rate of the linear SVM per quality-feature subset and SNR band."""
    subsets = subsets or ABLATION_SUBSETS
    for name, subset in subsets.items():
        if not subset:
            raise ValueError(f"subset {name!r} is empty")
        _subset_columns(subset)
    table: dict = {name: {} for name in subsets}
    for band in bands:
        spec = ExperimentSpec(
            task="ablation",
            snr_band=band,
            train_per_class=train_per_class,
            test_per_class=test_per_class,
            seed=seed,
        )
        corpus = _denoise_corpus(generate_dataset(spec, model), WaveletConfig())
        train_pairs = _extract(corpus.train, "quality")
        test_pairs = _extract(corpus.test, "quality")
        norm_train, norm_test, _ = _normalized_split(train_pairs, test_pairs)
        for name, subset in subsets.items():
            cols = _subset_columns(subset)
            sub_train = [(_mask_matrix(m, cols), l) for m, l in norm_train]
            sub_test = [(_mask_matrix(m, cols), l) for m, l in norm_test]
            svm = learn.svm_train(sub_train, learn.SvmConfig(iterations=iterations, seed=seed))
            table[name][band] = learn.svm_error_rate(sub_test, svm)
    return table


# ---------------------------------------------------------------------------
# Reports on disk


def write_report(report: Report, out_dir: str) -> None:
    """report.json + confusion.csv (deterministic) and timing.json (not)."""
    os.makedirs(out_dir, exist_ok=True)
    extras = dict(report.extras)
    runtime = extras.pop("runtime_seconds", None)
    payload = {
        "task": report.task,
        "classes": list(report.classes),
        "average_accuracy": report.average_accuracy,
        "per_class_accuracy": report.per_class_accuracy,
        "rank_k": report.rank_k,
        "extras": extras,
        "scale_note": report.scale_note,
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "confusion.csv"), "w") as fh:
        fh.write("," + ",".join(str(c) for c in report.classes) + "\n")
        for label, row in zip(report.classes, report.confusion):
            fh.write(str(label) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    if runtime is not None:
        with open(os.path.join(out_dir, "timing.json"), "w") as fh:
            json.dump({"runtime_seconds": runtime}, fh, indent=2)
            fh.write("\n")


DEFAULT_ROSTER = (
    ("action_high", dict(task="action_recognition", snr_band="high", learners=("cnn", "svm", "knn"))),
    ("action_low", dict(task="action_recognition", snr_band="low", learners=("cnn", "svm", "knn"))),
    ("body_status_high", dict(task="body_status", snr_band="high", train_per_class=50, test_per_class=50)),
    ("driver_id_high", dict(task="driver_id", snr_band="high", train_per_class=50, test_per_class=50)),
    ("driver_category_high", dict(task="driver_category", snr_band="high", train_per_class=50, test_per_class=50)),
    ("fusion_low", dict(task="fusion_eval", snr_band="low", train_per_class=30, test_per_class=30)),
)


def reproduce_all(out_root: str, seed: int = 0) -> dict:
    """Regenerate every desk-scale table/figure analogue under one seed."""
    os.makedirs(out_root, exist_ok=True)
    manifest = {"seed": seed, "scale_note": SCALE_NOTE, "experiments": []}
    for name, kwargs in DEFAULT_ROSTER:
        checkpoints = (10, 100) if kwargs["task"] == "action_recognition" else ()
        spec = ExperimentSpec(
            seed=seed,
            model=ModelConfig(iteration_checkpoints=checkpoints),
            **kwargs,
        )
        report = run_experiment(spec)
        write_report(report, os.path.join(out_root, name))
        manifest["experiments"].append(name)
    ablation_table = run_ablation(train_per_class=100, test_per_class=80, seed=seed)
    with open(os.path.join(out_root, "ablation.json"), "w") as fh:
        json.dump(ablation_table, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest["experiments"].append("ablation")
    localization = boundary_benchmark(seed=7 if seed == 0 else seed)
    with open(os.path.join(out_root, "boundary.json"), "w") as fh:
        json.dump(localization, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest["experiments"].append("boundary")
    with open(os.path.join(out_root, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
