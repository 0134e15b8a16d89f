"""Five-layer convolutional feature extractor with a softmax head.

The 10x10 feature matrix passes through two valid 3x3 convolution layers
and two 2x2 mean-pooling layers (each with a learned per-map scale and
bias, classic small-network style) into a fully connected layer emitting
a 12-dimensional feature vector. A one-hidden-layer perceptron with
exponential normalization turns that vector into a class distribution.
Shape chain on a 10x10 input:

    conv1 -> 6x8x8, pool1 -> 6x4x4, conv2 -> 12x2x2, pool2 -> 12, fc -> 12

The second convolution applies each of its two kernels to every one of
the six incoming maps independently, giving the twelve output maps.
Everything is plain numpy with hyperbolic-tangent activations, so
analytic gradients can be checked against finite differences. Inputs are
clipped to a fixed band on the way in: the feature columns are heavy
tailed even after z-scoring, and unbounded outliers park the saturating
activations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

FEATURE_DIM = 12

INPUT_CLIP = 4.0


@dataclass
class CnnParams:
    conv1_kernels: np.ndarray  # (6, 3, 3)
    conv1_bias: np.ndarray  # (6,)
    pool1_scale: np.ndarray  # (6,)
    pool1_bias: np.ndarray  # (6,)
    conv2_kernels: np.ndarray  # (2, 3, 3)
    conv2_bias: np.ndarray  # (2,)
    pool2_scale: np.ndarray  # (12,)
    pool2_bias: np.ndarray  # (12,)
    fc_weights: np.ndarray  # (12, 12)
    fc_bias: np.ndarray  # (12,)

    ARRAY_FIELDS = (
        ("conv1_kernels", (6, 3, 3)),
        ("conv1_bias", (6,)),
        ("pool1_scale", (6,)),
        ("pool1_bias", (6,)),
        ("conv2_kernels", (2, 3, 3)),
        ("conv2_bias", (2,)),
        ("pool2_scale", (12,)),
        ("pool2_bias", (12,)),
        ("fc_weights", (12, 12)),
        ("fc_bias", (12,)),
    )

    def __post_init__(self):
        for name, shape in self.ARRAY_FIELDS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            setattr(self, name, arr)


@dataclass
class NmlpParams:
    hidden_weights: np.ndarray  # (H, 12)
    hidden_bias: np.ndarray  # (H,)
    out_weights: np.ndarray  # (N, H)
    out_bias: np.ndarray  # (N,)
    class_labels: tuple

    def __post_init__(self):
        self.hidden_weights = np.asarray(self.hidden_weights, dtype=float)
        self.hidden_bias = np.asarray(self.hidden_bias, dtype=float)
        self.out_weights = np.asarray(self.out_weights, dtype=float)
        self.out_bias = np.asarray(self.out_bias, dtype=float)
        self.class_labels = tuple(self.class_labels)
        h = self.hidden_weights.shape[0]
        n = len(self.class_labels)
        if self.hidden_weights.shape != (h, FEATURE_DIM):
            raise ValueError("hidden weights must map the 12-dim feature vector")
        if self.hidden_bias.shape != (h,):
            raise ValueError("hidden bias shape mismatch")
        if self.out_weights.shape != (n, h) or self.out_bias.shape != (n,):
            raise ValueError("output layer shape mismatch")

    @property
    def hidden_width(self) -> int:
        return self.hidden_weights.shape[0]


def init_cnn(rng: np.random.Generator) -> CnnParams:
    return CnnParams(
        conv1_kernels=rng.normal(0.0, 1.0 / 3.0, (6, 3, 3)),
        conv1_bias=np.zeros(6),
        pool1_scale=np.ones(6),
        pool1_bias=np.zeros(6),
        conv2_kernels=rng.normal(0.0, 1.0 / 3.0, (2, 3, 3)),
        conv2_bias=np.zeros(2),
        pool2_scale=np.ones(12),
        pool2_bias=np.zeros(12),
        fc_weights=rng.normal(0.0, 1.0 / np.sqrt(12.0), (12, 12)),
        fc_bias=np.zeros(12),
    )


def init_nmlp(rng: np.random.Generator, class_labels, hidden_width: int = 24) -> NmlpParams:
    n = len(class_labels)
    if n < 2:
        raise ValueError("need at least 2 classes")
    return NmlpParams(
        hidden_weights=rng.normal(0.0, 1.0 / np.sqrt(FEATURE_DIM), (hidden_width, FEATURE_DIM)),
        hidden_bias=np.zeros(hidden_width),
        out_weights=rng.normal(0.0, 1.0 / np.sqrt(hidden_width), (n, hidden_width)),
        out_bias=np.zeros(n),
        class_labels=tuple(class_labels),
    )


def _pool_mean(x: np.ndarray) -> np.ndarray:
    b, c, h, w = x.shape
    return x.reshape(b, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))


def _unpool_mean(d: np.ndarray, h: int, w: int) -> np.ndarray:
    b, c = d.shape[:2]
    up = np.repeat(np.repeat(d, 2, axis=2), 2, axis=3) / 4.0
    assert up.shape == (b, c, h, w)
    return up


def _forward(x: np.ndarray, p: CnnParams) -> tuple[np.ndarray, dict]:
    """Batched forward pass; returns the 12-dim features and a cache for backprop."""
    if x.ndim != 3 or x.shape[1:] != (10, 10):
        raise ValueError(f"input batch must be (B, 10, 10), got {x.shape}")
    x = np.clip(x, -INPUT_CLIP, INPUT_CLIP)
    cache = {"x": x}

    win1 = sliding_window_view(x, (3, 3), axis=(1, 2))  # (B, 8, 8, 3, 3)
    z1 = np.einsum("bxyuv,kuv->bkxy", win1, p.conv1_kernels) + p.conv1_bias[None, :, None, None]
    assert z1.shape[1:] == (6, 8, 8)
    a1 = np.tanh(z1)
    cache["a1"] = a1

    pooled1 = _pool_mean(a1)  # (B, 6, 4, 4)
    assert pooled1.shape[1:] == (6, 4, 4)
    s1 = p.pool1_scale[None, :, None, None] * pooled1 + p.pool1_bias[None, :, None, None]
    a2 = np.tanh(s1)
    cache["pooled1"] = pooled1
    cache["a2"] = a2

    win2 = sliding_window_view(a2, (3, 3), axis=(2, 3))  # (B, 6, 2, 2, 3, 3)
    z2 = np.einsum("bmxyuv,kuv->bkmxy", win2, p.conv2_kernels) + p.conv2_bias[None, :, None, None, None]
    b = x.shape[0]
    z2 = z2.reshape(b, 12, 2, 2)  # map order: kernel-major, input-map-minor
    assert z2.shape[1:] == (12, 2, 2)
    a3 = np.tanh(z2)
    cache["a3"] = a3

    pooled2 = _pool_mean(a3).reshape(b, 12)  # (B, 12, 1, 1) -> (B, 12)
    s2 = p.pool2_scale[None, :] * pooled2 + p.pool2_bias[None, :]
    a4 = np.tanh(s2)
    cache["pooled2"] = pooled2
    cache["a4"] = a4

    z5 = a4 @ p.fc_weights.T + p.fc_bias[None, :]
    a5 = np.tanh(z5)
    assert a5.shape == (b, FEATURE_DIM)
    cache["a5"] = a5
    return a5, cache


def cnn_forward(m: np.ndarray, p: CnnParams) -> np.ndarray:
    """Feature vector(s) for one 10x10 matrix or a (B, 10, 10) batch."""
    m = np.asarray(m, dtype=float)
    single = m.ndim == 2
    batch = m[None] if single else m
    out, _ = _forward(batch, p)
    return out[0] if single else out


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def nmlp_forward(v: np.ndarray, p: NmlpParams) -> tuple[np.ndarray, dict]:
    hidden = np.tanh(v @ p.hidden_weights.T + p.hidden_bias[None, :])
    logits = hidden @ p.out_weights.T + p.out_bias[None, :]
    probs = _softmax(logits)
    return probs, {"v": v, "hidden": hidden}


def forward_probs(x: np.ndarray, cnn: CnnParams, nmlp: NmlpParams) -> np.ndarray:
    """Class probabilities for a (B, 10, 10) batch or single matrix."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 2
    batch = x[None] if single else x
    features, _ = _forward(batch, cnn)
    probs, _ = nmlp_forward(features, nmlp)
    return probs[0] if single else probs


def loss_and_grads(
    cnn: CnnParams, nmlp: NmlpParams, x: np.ndarray, y_idx: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and gradients for every parameter array."""
    x = np.asarray(x, dtype=float)
    y_idx = np.asarray(y_idx, dtype=int)
    b = x.shape[0]
    features, cache = _forward(x, cnn)
    probs, ncache = nmlp_forward(features, nmlp)
    picked = np.clip(probs[np.arange(b), y_idx], 1e-12, None)
    loss = float(-np.mean(np.log(picked)))

    dlogits = probs.copy()
    dlogits[np.arange(b), y_idx] -= 1.0
    dlogits /= b

    hidden = ncache["hidden"]
    grads = {
        "out_weights": dlogits.T @ hidden,
        "out_bias": dlogits.sum(axis=0),
    }
    dhidden = dlogits @ nmlp.out_weights
    dzh = dhidden * (1.0 - hidden**2)
    grads["hidden_weights"] = dzh.T @ features
    grads["hidden_bias"] = dzh.sum(axis=0)
    dv = dzh @ nmlp.hidden_weights

    a5 = cache["a5"]
    dz5 = dv * (1.0 - a5**2)
    grads["fc_weights"] = dz5.T @ cache["a4"]
    grads["fc_bias"] = dz5.sum(axis=0)
    da4 = dz5 @ cnn.fc_weights

    a4 = cache["a4"]
    ds2 = da4 * (1.0 - a4**2)
    grads["pool2_scale"] = (ds2 * cache["pooled2"]).sum(axis=0)
    grads["pool2_bias"] = ds2.sum(axis=0)
    dpooled2 = (ds2 * cnn.pool2_scale[None, :]).reshape(b, 12, 1, 1)
    da3 = _unpool_mean(dpooled2, 2, 2)

    a3 = cache["a3"]
    dz2 = (da3 * (1.0 - a3**2)).reshape(b, 2, 6, 2, 2)
    a2 = cache["a2"]
    win2b = sliding_window_view(a2, (2, 2), axis=(2, 3))  # (B, 6, 3, 3, 2, 2)
    grads["conv2_kernels"] = np.einsum("bmuvxy,bkmxy->kuv", win2b, dz2)
    grads["conv2_bias"] = dz2.sum(axis=(0, 2, 3, 4))
    padded = np.pad(dz2, ((0, 0), (0, 0), (0, 0), (2, 2), (2, 2)))
    winp = sliding_window_view(padded, (3, 3), axis=(3, 4))  # (B, 2, 6, 4, 4, 3, 3)
    flip2 = cnn.conv2_kernels[:, ::-1, ::-1]
    da2 = np.einsum("bkmxyuv,kuv->bmxy", winp, flip2)

    ds1 = da2 * (1.0 - a2**2)
    grads["pool1_scale"] = (ds1 * cache["pooled1"]).sum(axis=(0, 2, 3))
    grads["pool1_bias"] = ds1.sum(axis=(0, 2, 3))
    dpooled1 = ds1 * cnn.pool1_scale[None, :, None, None]
    da1 = _unpool_mean(dpooled1, 8, 8)

    a1 = cache["a1"]
    dz1 = da1 * (1.0 - a1**2)
    win1b = sliding_window_view(cache["x"], (8, 8), axis=(1, 2))  # (B, 3, 3, 8, 8)
    grads["conv1_kernels"] = np.einsum("buvxy,bkxy->kuv", win1b, dz1)
    grads["conv1_bias"] = dz1.sum(axis=(0, 2, 3))
    return loss, grads


def param_arrays(cnn: CnnParams, nmlp: NmlpParams) -> dict[str, np.ndarray]:
    """All trainable arrays in the declared layer order (shared references)."""
    out = {name: getattr(cnn, name) for name, _ in CnnParams.ARRAY_FIELDS}
    out.update(
        hidden_weights=nmlp.hidden_weights,
        hidden_bias=nmlp.hidden_bias,
        out_weights=nmlp.out_weights,
        out_bias=nmlp.out_bias,
    )
    return out
