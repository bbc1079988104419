"""L2 normalization, text/graph fusion and the two-layer MLP classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import ShapeMismatch

NORM_EPS = 1e-12


@dataclass
class Prediction:
    probs: np.ndarray
    label: int
    loss: float | None = None


def l2_normalize(x, eps=NORM_EPS):
    """Scale rows to unit length; rows shorter than ``eps`` are divided by ``eps``."""
    x = np.asarray(x, dtype=np.float64)
    norm = np.maximum(np.linalg.norm(x, axis=-1, keepdims=True), eps)
    y = x / norm
    return y, (y, norm)


def l2_normalize_backward(dy, cache):
    y, norm = cache
    clipped = norm <= NORM_EPS
    proj = dy - y * (dy * y).sum(axis=-1, keepdims=True)
    return np.where(clipped, dy, proj) / norm


def fuse(x_text, x_graph):
    """Concatenate the normalized text and graph vectors (either may be None)."""
    parts, caches = [], []
    for x in (x_text, x_graph):
        if x is None:
            caches.append(None)
            continue
        y, c = l2_normalize(x)
        parts.append(y)
        caches.append(c)
    if not parts:
        raise ShapeMismatch("nothing to fuse")
    if len(parts) == 2 and parts[0].shape[:-1] != parts[1].shape[:-1]:
        raise ShapeMismatch(f"cannot fuse batches {parts[0].shape} and {parts[1].shape}")
    widths = [None if x is None else x.shape[-1] for x in (x_text, x_graph)]
    return np.concatenate(parts, axis=-1), (caches, widths)


def fuse_backward(dx, cache):
    caches, widths = cache
    grads = []
    start = 0
    for c, w in zip(caches, widths):
        if c is None:
            grads.append(None)
            continue
        grads.append(l2_normalize_backward(dx[..., start:start + w], c))
        start += w
    return grads


def hidden_width(fused_width, num_classes):
    return math.ceil((fused_width + num_classes) / 2)


def init_params(params: nn.ParameterStore, in_dim, num_classes, rng, hidden=None, prefix="mlp"):
    hidden = hidden or hidden_width(in_dim, num_classes)
    params.add(f"{prefix}.W1", nn.glorot(rng, in_dim, hidden))
    params.add(f"{prefix}.b1", np.zeros(hidden), decay=False)
    params.add(f"{prefix}.W2", nn.glorot(rng, hidden, num_classes))
    params.add(f"{prefix}.b2", np.zeros(num_classes), decay=False)


def mlp(x, params, activation="gelu", prefix="mlp"):
    z1, c1 = nn.affine(x, params[f"{prefix}.W1"], params[f"{prefix}.b1"])
    h, ca = nn.activation(z1, activation)
    o, c2 = nn.affine(h, params[f"{prefix}.W2"], params[f"{prefix}.b2"])
    return o, (c1, ca, c2)


def mlp_backward(do, cache, params, prefix="mlp"):
    c1, ca, c2 = cache
    dh, dW2, db2 = nn.affine_backward(do, c2)
    dz1 = nn.activation_backward(dh, ca)
    dx, dW1, db1 = nn.affine_backward(dz1, c1)
    params.accumulate(f"{prefix}.W1", dW1)
    params.accumulate(f"{prefix}.b1", db1)
    params.accumulate(f"{prefix}.W2", dW2)
    params.accumulate(f"{prefix}.b2", db2)
    return dx


def predict_from_logits(logits, target=None) -> Prediction:
    probs = nn.softmax(np.asarray(logits, dtype=np.float64))
    loss = None
    if target is not None:
        loss, _ = nn.softmax_cross_entropy(logits, target)
    # np.argmax returns the first maximal index
    return Prediction(probs=probs, label=int(np.argmax(probs)), loss=loss)


def classify(x_fused, params, target=None, activation="gelu", prefix="mlp") -> Prediction:
    W1 = params[f"{prefix}.W1"]
    if np.shape(x_fused)[-1] != W1.shape[0]:
        raise ShapeMismatch(f"classifier expects width {W1.shape[0]}, got {np.shape(x_fused)[-1]}")
    logits, _ = mlp(np.asarray(x_fused, dtype=np.float64), params, activation, prefix)
    return predict_from_logits(logits, target)
