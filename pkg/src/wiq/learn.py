"""Recognition engines and their training loops.

The primary engine is the convolutional extractor plus normalized
perceptron head from `cnn`, trained end to end with mini-batch gradient
descent on cross-entropy. k-nearest-neighbour and one-vs-rest linear SVM
learners are provided for the comparative experiments. All emitted class
distributions are validated to be non-negative and sum to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cnn as cnn_mod
from .cnn import CnnParams, NmlpParams, cnn_forward, init_cnn, init_nmlp, loss_and_grads, param_arrays
from .features import SEGMENTS, FeatureMatrix, NormalizationStats

_DIST_TOL = 1e-9


@dataclass
class ClassDistribution:
    """Normalized probability vector over an ordered label set."""

    probs: np.ndarray
    class_labels: tuple

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        self.class_labels = tuple(self.class_labels)
        if self.probs.shape != (len(self.class_labels),):
            raise ValueError("probs and class_labels disagree in length")
        if np.any(self.probs < 0.0):
            raise ValueError("probabilities must be non-negative")
        if abs(float(self.probs.sum()) - 1.0) > _DIST_TOL:
            raise ValueError(f"probabilities sum to {self.probs.sum()!r}, not 1")

    @property
    def top_label(self):
        return self.class_labels[int(np.argmax(self.probs))]

    @property
    def top_prob(self) -> float:
        return float(self.probs.max())


@dataclass
class TrainConfig:
    iterations: int = 100
    learning_rate: float = 0.06
    batch_size: int = 32
    seed: int = 0
    hidden_width: int = 24

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.hidden_width < 1:
            raise ValueError("hidden_width must be >= 1")


def _as_array(matrix) -> np.ndarray:
    values = matrix.values if isinstance(matrix, FeatureMatrix) else np.asarray(matrix, dtype=float)
    if values.shape != (SEGMENTS, SEGMENTS):
        raise ValueError(f"expected a 10x10 matrix, got {values.shape}")
    return values


def _stack_dataset(dataset) -> tuple[np.ndarray, np.ndarray, tuple]:
    if not dataset:
        raise ValueError("empty dataset")
    xs = np.stack([_as_array(m) for m, _ in dataset])
    labels = [lbl for _, lbl in dataset]
    classes = tuple(sorted(set(labels), key=str))
    if len(classes) < 2:
        raise ValueError("degenerate dataset: need at least 2 classes")
    index = {c: i for i, c in enumerate(classes)}
    y = np.array([index[lbl] for lbl in labels], dtype=int)
    return xs, y, classes


def train(
    dataset,
    cfg: TrainConfig | None = None,
    loss_log: list | None = None,
) -> tuple[CnnParams, NmlpParams]:
    """Train extractor and head jointly with seeded mini-batch SGD.

    One iteration is a full pass over the training set. The returned
    parameters are the average of the iterates from the last quarter of
    the passes, which damps the hop-to-hop noise of plain SGD. Pass a
    list as `loss_log` to capture the mean training loss of each pass.
    """
    cfg = cfg or TrainConfig()
    xs, y, classes = _stack_dataset(dataset)
    rng = np.random.default_rng(cfg.seed)
    cnn = init_cnn(rng)
    nmlp = init_nmlp(rng, classes, cfg.hidden_width)
    params = param_arrays(cnn, nmlp)
    averaged = {name: np.zeros_like(arr) for name, arr in params.items()}
    tail_start = (3 * cfg.iterations) // 4
    tail_count = 0
    n = xs.shape[0]
    for iteration in range(cfg.iterations):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            loss, grads = loss_and_grads(cnn, nmlp, xs[batch], y[batch])
            epoch_loss += loss * batch.size
            for name, grad in grads.items():
                params[name] -= cfg.learning_rate * grad
        if iteration >= tail_start:
            tail_count += 1
            for name in averaged:
                averaged[name] += params[name]
        if loss_log is not None:
            loss_log.append(epoch_loss / n)
    for name in params:
        params[name][...] = averaged[name] / tail_count
    return cnn, nmlp


def nmlp_classify(v: np.ndarray, p: NmlpParams) -> ClassDistribution:
    """Class distribution for one 12-dim feature vector."""
    v = np.asarray(v, dtype=float)
    if v.shape != (cnn_mod.FEATURE_DIM,):
        raise ValueError(f"expected a {cnn_mod.FEATURE_DIM}-dim vector, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector must be finite")
    probs, _ = cnn_mod.nmlp_forward(v[None], p)
    return ClassDistribution(probs[0], p.class_labels)


def classify(matrix, cnn: CnnParams, nmlp: NmlpParams) -> ClassDistribution:
    """Class distribution for one feature matrix."""
    return nmlp_classify(cnn_forward(_as_array(matrix), cnn), nmlp)


def predict_batch(matrices, cnn: CnnParams, nmlp: NmlpParams) -> np.ndarray:
    """(B, N) probability matrix for a list of feature matrices."""
    xs = np.stack([_as_array(m) for m in matrices])
    return cnn_mod.forward_probs(xs, cnn, nmlp)


def error_rate(dataset, cnn: CnnParams, nmlp: NmlpParams) -> float:
    probs = predict_batch([m for m, _ in dataset], cnn, nmlp)
    predicted = [nmlp.class_labels[i] for i in probs.argmax(axis=1)]
    wrong = sum(1 for p, (_, t) in zip(predicted, dataset) if p != t)
    return wrong / len(dataset)


def grad_check(
    params: tuple[CnnParams, NmlpParams],
    sample,
    epsilon: float = 1e-5,
    *,
    extra_coords: int = 4,
    seed: int = 0,
) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    Probes at least one randomly chosen coordinate in every parameter
    array plus `extra_coords` more, so all fourteen arrays are covered.
    Coordinates where both gradients are essentially zero contribute a
    relative error of zero.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError("epsilon out of supported range")
    cnn, nmlp = params
    matrix, label = sample
    x = _as_array(matrix)[None]
    y = np.array([list(nmlp.class_labels).index(label)], dtype=int)
    _, grads = loss_and_grads(cnn, nmlp, x, y)
    arrays = param_arrays(cnn, nmlp)
    rng = np.random.default_rng(seed)

    coords = []
    names = list(arrays)
    for name in names:
        coords.append((name, tuple(rng.integers(0, s) for s in arrays[name].shape)))
    for _ in range(extra_coords):
        name = names[int(rng.integers(0, len(names)))]
        coords.append((name, tuple(rng.integers(0, s) for s in arrays[name].shape)))

    worst = 0.0
    for name, idx in coords:
        arr = arrays[name]
        orig = arr[idx]
        arr[idx] = orig + epsilon
        up, _ = loss_and_grads(cnn, nmlp, x, y)
        arr[idx] = orig - epsilon
        down, _ = loss_and_grads(cnn, nmlp, x, y)
        arr[idx] = orig
        numeric = (up - down) / (2.0 * epsilon)
        analytic = float(grads[name][idx])
        denom = max(abs(analytic), abs(numeric))
        if denom < 1e-10:
            continue
        worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def knn_classify(train_set, query, k: int) -> ClassDistribution:
    """Neighbour-vote distribution under Euclidean distance on flattened matrices."""
    if not train_set:
        raise ValueError("empty training set")
    if not 1 <= k <= len(train_set):
        raise ValueError("k must lie in [1, len(train_set)]")
    xs = np.stack([_as_array(m).ravel() for m, _ in train_set])
    labels = [lbl for _, lbl in train_set]
    classes = tuple(sorted(set(labels), key=str))
    q = _as_array(query).ravel()
    dist = np.linalg.norm(xs - q[None, :], axis=1)
    nearest = np.lexsort((np.arange(dist.size), dist))[:k]
    probs = np.zeros(len(classes))
    index = {c: i for i, c in enumerate(classes)}
    for i in nearest:
        probs[index[labels[i]]] += 1.0
    return ClassDistribution(probs / k, classes)


@dataclass
class SvmParams:
    """One-vs-rest linear classifiers on flattened matrices, bias augmented."""

    weights: np.ndarray  # (N, D + 1)
    class_labels: tuple

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.class_labels = tuple(self.class_labels)
        if self.weights.shape[0] != len(self.class_labels):
            raise ValueError("one weight row per class required")


@dataclass
class SvmConfig:
    iterations: int = 100
    reg: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.reg <= 0:
            raise ValueError("reg must be positive")


def svm_train(dataset, cfg: SvmConfig | None = None) -> SvmParams:
    """Hinge-loss subgradient training, one pass per iteration.

    Classic decreasing-step subgradient scheme for the regularized hinge
    objective, one-vs-rest over the flattened matrices with an augmented
    bias coordinate. Inputs are clipped to the same band the CNN uses;
    several feature columns are heavy tailed after z-scoring and the
    hinge otherwise spends its capacity on their outliers.
    """
    cfg = cfg or SvmConfig()
    xs, y, classes = _stack_dataset(dataset)
    xs = np.clip(xs, -cnn_mod.INPUT_CLIP, cnn_mod.INPUT_CLIP)
    flat = xs.reshape(xs.shape[0], -1)
    aug = np.hstack([flat, np.ones((flat.shape[0], 1))])
    n, d = aug.shape
    rng = np.random.default_rng(cfg.seed)
    weights = np.zeros((len(classes), d))
    step = 0
    for _ in range(cfg.iterations):
        order = rng.permutation(n)
        for i in order:
            step += 1
            eta = 1.0 / (cfg.reg * step)
            x_i = aug[i]
            margins = weights @ x_i
            for c in range(len(classes)):
                sign = 1.0 if y[i] == c else -1.0
                weights[c] *= 1.0 - eta * cfg.reg
                if sign * margins[c] < 1.0:
                    weights[c] += eta * sign * x_i
    return SvmParams(weights, classes)


def svm_margins(params: SvmParams, matrix) -> np.ndarray:
    x = np.clip(_as_array(matrix), -cnn_mod.INPUT_CLIP, cnn_mod.INPUT_CLIP)
    return params.weights @ np.append(x.ravel(), 1.0)


def svm_classify(params: SvmParams, matrix) -> ClassDistribution:
    """Margins mapped to a distribution through exponential normalization."""
    margins = svm_margins(params, matrix)
    shifted = margins - margins.max()
    e = np.exp(shifted)
    return ClassDistribution(e / e.sum(), params.class_labels)


def svm_error_rate(dataset, params: SvmParams) -> float:
    wrong = 0
    for m, t in dataset:
        margins = svm_margins(params, m)
        if params.class_labels[int(np.argmax(margins))] != t:
            wrong += 1
    return wrong / len(dataset)


MODEL_MAGIC = "wiq-model-v1"

_NMLP_ARRAYS = ("hidden_weights", "hidden_bias", "out_weights", "out_bias")


def save_model(
    path: str,
    cnn: CnnParams,
    nmlp: NmlpParams,
    flavor: str,
    norm: NormalizationStats | None = None,
) -> None:
    """Versioned plain-text model file: header, then flat arrays in layer order."""
    lines = [MODEL_MAGIC, f"flavor={flavor}"]
    lines.append("classes=" + ",".join(str(c) for c in nmlp.class_labels))
    lines.append(f"hidden={nmlp.hidden_width}")
    if norm is not None:
        lines.append("norm_shift=" + ",".join(repr(float(v)) for v in norm.shift))
        lines.append("norm_scale=" + ",".join(repr(float(v)) for v in norm.scale))
    arrays = {name: getattr(cnn, name) for name, _ in CnnParams.ARRAY_FIELDS}
    arrays.update({name: getattr(nmlp, name) for name in _NMLP_ARRAYS})
    for name, arr in arrays.items():
        shape = ",".join(str(s) for s in arr.shape)
        lines.append(f"array={name} shape={shape}")
        lines.extend(repr(float(v)) for v in arr.ravel())
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str):
    """Returns (cnn, nmlp, flavor, norm_or_None)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != MODEL_MAGIC:
        raise ValueError(f"{path} is not a {MODEL_MAGIC} file")
    meta = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("array="):
        key, _, value = lines[i].partition("=")
        meta[key] = value
        i += 1
    arrays = {}
    while i < len(lines):
        head = lines[i]
        name_part, shape_part = head.split(" ")
        name = name_part.split("=", 1)[1]
        shape = tuple(int(s) for s in shape_part.split("=", 1)[1].split(","))
        count = int(np.prod(shape))
        vals = np.array([float(v) for v in lines[i + 1 : i + 1 + count]])
        arrays[name] = vals.reshape(shape)
        i += 1 + count
    classes = tuple(meta["classes"].split(","))
    cnn = CnnParams(**{name: arrays[name] for name, _ in CnnParams.ARRAY_FIELDS})
    nmlp = NmlpParams(
        hidden_weights=arrays["hidden_weights"],
        hidden_bias=arrays["hidden_bias"],
        out_weights=arrays["out_weights"],
        out_bias=arrays["out_bias"],
        class_labels=classes,
    )
    norm = None
    if "norm_shift" in meta:
        norm = NormalizationStats(
            shift=np.array([float(v) for v in meta["norm_shift"].split(",")]),
            scale=np.array([float(v) for v in meta["norm_scale"].split(",")]),
            flavor=meta["flavor"],
        )
    return cnn, nmlp, meta["flavor"], norm
