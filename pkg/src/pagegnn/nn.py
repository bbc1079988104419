"""Layers with hand-written backward passes, AdamW and a gradient checker.

Every layer comes as a forward function returning ``(out, cache)`` and a
matching ``*_backward`` function mapping the upstream gradient and that cache to
gradients of the inputs and parameters. Everything runs in float64.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import BatchTooSmall, ClassOutOfRange, NonFiniteGradient, ShapeMismatch

_SQRT2 = np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


class ParameterStore:
    """Named trainable arrays, their gradients, and non-trainable buffers."""

    def __init__(self):
        self.values: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.decay: dict[str, bool] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def add(self, name, value, decay=True):
        if name in self.values or name in self.buffers:
            raise KeyError(f"duplicate parameter name {name!r}")
        value = np.array(value, dtype=np.float64)
        self.values[name] = value
        self.grads[name] = np.zeros_like(value)
        self.decay[name] = decay
        return value

    def add_buffer(self, name, value):
        if name in self.values or name in self.buffers:
            raise KeyError(f"duplicate parameter name {name!r}")
        self.buffers[name] = np.array(value, dtype=np.float64)

    def __getitem__(self, name):
        if name in self.values:
            return self.values[name]
        return self.buffers[name]

    def __contains__(self, name):
        return name in self.values or name in self.buffers

    def names(self):
        return list(self.values)

    def accumulate(self, name, grad):
        g = self.grads[name]
        if g.shape != np.shape(grad):
            raise ShapeMismatch(f"gradient for {name!r} has shape {np.shape(grad)}, expected {g.shape}")
        g += grad

    def zero_grad(self):
        for g in self.grads.values():
            g.fill(0.0)

    def copy(self):
        other = ParameterStore()
        for name, v in self.values.items():
            other.add(name, v.copy(), self.decay[name])
        for name, v in self.buffers.items():
            other.add_buffer(name, v.copy())
        return other

    def num_parameters(self):
        return sum(v.size for v in self.values.values())


@dataclass
class TrainState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    mode: str = "train"

    @classmethod
    def for_params(cls, params: ParameterStore):
        return cls(
            m={k: np.zeros_like(v) for k, v in params.values.items()},
            v={k: np.zeros_like(v) for k, v in params.values.items()},
        )


# activations ---------------------------------------------------------------

def _gelu(x):
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def _gelu_grad(x):
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * _INV_SQRT2PI * np.exp(-0.5 * x * x)


ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "gelu": (_gelu, _gelu_grad),
    "relu": (lambda x: np.maximum(x, 0.0), lambda x: (x > 0).astype(np.float64)),
    "tanh": (np.tanh, lambda x: 1.0 - np.tanh(x) ** 2),
    "identity": (lambda x: x, np.ones_like),
}


def activation(x, kind="gelu"):
    fn, _ = ACTIVATIONS[kind]
    return fn(x), (x, kind)


def activation_backward(dout, cache):
    x, kind = cache
    return dout * ACTIVATIONS[kind][1](x)


# layers --------------------------------------------------------------------

def affine(x, W, b):
    """``y = x @ W + b`` for a vector or a row batch."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeMismatch(f"affine: x {x.shape}, W {W.shape}, b {b.shape}")
    return x @ W + b, (x, W)


def affine_backward(dout, cache):
    x, W = cache
    x2 = x.reshape(-1, x.shape[-1])
    d2 = dout.reshape(-1, dout.shape[-1])
    return dout @ W.T, x2.T @ d2, d2.sum(axis=0)


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize over the last axis with the biased variance."""
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    # second pass removes the rounding residue of the first, which 1/sqrt(eps)
    # would otherwise blow up on near-constant rows
    xc -= xc.mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    return xhat * gamma + beta, (xhat, inv, gamma)


def layer_norm_backward(dout, cache):
    xhat, inv, gamma = cache
    n = xhat.shape[-1]
    dxhat = dout * gamma
    dx = inv / n * (
        n * dxhat
        - dxhat.sum(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
    )
    lead = tuple(range(dout.ndim - 1))
    return dx, (dout * xhat).sum(axis=lead), dout.sum(axis=lead)


def batch_norm(
    X, gamma, beta, running_mean, running_var,
    train=True, momentum=0.1, eps=1e-5, update_stats=True,
):
    """Batch normalization over rows.

    Train mode uses batch statistics and, when ``update_stats`` is set,
    folds them into the running buffers in place (the running variance takes
    the unbiased batch variance). Eval mode uses the running buffers only.
    """
    if train:
        n = X.shape[0]
        if n < 2:
            raise BatchTooSmall(f"batch norm in train mode needs >= 2 rows, got {n}")
        mu = X.mean(axis=0)
        var = X.var(axis=0)
        if update_stats:
            running_mean *= 1.0 - momentum
            running_mean += momentum * mu
            running_var *= 1.0 - momentum
            running_var += momentum * var * n / (n - 1)
    else:
        mu, var = running_mean, running_var
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (X - mu) * inv
    return xhat * gamma + beta, (xhat, inv, gamma, train)


def batch_norm_backward(dout, cache):
    xhat, inv, gamma, train = cache
    dgamma = (dout * xhat).sum(axis=0)
    dbeta = dout.sum(axis=0)
    dxhat = dout * gamma
    if not train:
        return dxhat * inv, dgamma, dbeta
    n = dout.shape[0]
    dx = inv / n * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    return dx, dgamma, dbeta


def dropout(x, rate, train, rng):
    """Inverted dropout: survivors are scaled by ``1/(1-rate)`` at train time."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x, None
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout if mask is None else dout * mask


def softmax(o, axis=-1):
    z = o - o.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_cross_entropy(logits, target):
    """Loss and logit gradient.

    A 1-D ``logits`` with an integer ``target`` gives the loss of one
    example. A 2-D batch with an array of targets gives the batch mean and
    the gradient of that mean.
    """
    logits = np.asarray(logits, dtype=np.float64)
    single = logits.ndim == 1
    o = logits[None, :] if single else logits
    y = np.atleast_1d(np.asarray(target))
    n_classes = o.shape[1]
    if n_classes < 2:
        raise ClassOutOfRange("need at least two classes")
    if y.shape[0] != o.shape[0] or np.any(y < 0) or np.any(y >= n_classes):
        raise ClassOutOfRange(f"targets {y.tolist()} outside 0..{n_classes - 1}")
    z = o - o.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(o.shape[0])
    loss = -log_probs[rows, y].mean()
    grad = np.exp(log_probs)
    grad[rows, y] -= 1.0
    grad /= o.shape[0]
    return float(loss), (grad[0] if single else grad)


# optimizer -----------------------------------------------------------------

def adamw_step(params: ParameterStore, state: TrainState, lr=3e-4, beta1=0.9,
               beta2=0.999, eps=1e-8, weight_decay=0.01):
    """One AdamW update from the gradients stored in ``params``.

    Weight decay is decoupled from the adaptive step and only touches
    parameters registered with ``decay=True``. The step is refused when any
    gradient is non-finite, leaving parameters and moments unchanged.
    """
    for name, g in params.grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient in {name!r}")
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, theta in params.values.items():
        g = params.grads[name]
        m = state.m.setdefault(name, np.zeros_like(theta))
        v = state.v.setdefault(name, np.zeros_like(theta))
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        update = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        if params.decay[name] and weight_decay:
            theta -= lr * weight_decay * theta
        theta -= update


# gradient checking ---------------------------------------------------------

def relative_error(a, n):
    a = np.asarray(a, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)


def grad_check(loss_fn, values: Mapping[str, np.ndarray], delta=1e-5, names=None,
               per_param=False):
    """Compare analytic gradients against central differences.

    ``loss_fn()`` must return ``(loss, grads)`` where ``grads`` maps names in
    ``values`` to analytic gradients. Arrays in ``values`` are perturbed in
    place and restored. Returns the largest relative error, or a dict of
    per-array maxima with ``per_param=True``.
    """
    _, analytic = loss_fn()
    analytic = {k: np.array(v, dtype=np.float64) for k, v in analytic.items()}
    worst = {}
    for name in names or list(values):
        theta = values[name]
        numeric = np.zeros_like(theta)
        flat = theta.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + delta
            up = loss_fn()[0]
            flat[i] = old - delta
            down = loss_fn()[0]
            flat[i] = old
            num_flat[i] = (up - down) / (2.0 * delta)
        worst[name] = float(relative_error(analytic[name], numeric).max()) if theta.size else 0.0
    if per_param:
        return worst
    return max(worst.values(), default=0.0)


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))
