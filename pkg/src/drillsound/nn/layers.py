"""Feed-forward layers with hand-written backward passes.

Feature maps are channels-last: ``(batch, height, width, channels)``, where
height is the spectrogram's time axis and width its mel axis. Every layer
caches what its backward pass needs during ``forward`` and accumulates
parameter gradients into ``Parameter.grad``.
"""
from __future__ import annotations

import numpy as np

from ..errors import ShapeError, UninitializedStatisticsError
from .parameter import Parameter, glorot_uniform

__all__ = [
    "Layer",
    "Conv2D",
    "MaxPool2D",
    "BatchNorm",
    "LeakyReLU",
    "Dense",
    "Flatten",
    "ToSequence",
    "softmax",
    "softmax_cross_entropy",
    "conv2d",
    "maxpool2d",
    "leaky_relu",
    "dense",
]


class Layer:
    name = "layer"

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def parameters(self) -> list[Parameter]:
        return []

    def buffers(self) -> list[np.ndarray]:
        """Non-trainable state that must be serialized (e.g. running statistics)."""
        return []

    def output_shape(self, input_shape: tuple) -> tuple:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class Conv2D(Layer):
    """3x3 convolution, stride 1, zero padding 1 ("same")."""

    name = "conv"

    def __init__(self, in_channels: int, out_channels: int, rng=None, dtype=np.float64, input_grad: bool = True):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.input_grad = input_grad
        shape = (3, 3, in_channels, out_channels)
        self.weight = Parameter(glorot_uniform(rng, shape, 9 * in_channels, 9 * out_channels, dtype), "weight")
        self.bias = Parameter(np.zeros(out_channels, dtype=dtype), "bias")
        self._cache = None

    def parameters(self):
        return [self.weight, self.bias]

    def output_shape(self, input_shape):
        h, w, _ = input_shape
        return (h, w, self.out_channels)

    def forward(self, x, train=False):
        if x.ndim != 4 or x.shape[-1] != self.in_channels:
            raise ShapeError(f"conv expects (B, H, W, {self.in_channels}), got {x.shape}")
        b, h, w, c = x.shape
        xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
        # columns ordered (kh, kw, cin) to match weight.reshape(9 * cin, cout)
        cols = np.concatenate(
            [xp[:, i:i + h, j:j + w, :] for i in range(3) for j in range(3)], axis=-1
        ).reshape(b * h * w, 9 * c)
        out = cols @ self.weight.value.reshape(9 * c, self.out_channels) + self.bias.value
        self._cache = (cols, x.shape)
        return out.reshape(b, h, w, self.out_channels)

    def backward(self, dout):
        cols, (b, h, w, c) = self._cache
        dflat = dout.reshape(-1, self.out_channels)
        self.weight.grad += (cols.T @ dflat).reshape(self.weight.shape)
        self.bias.grad += dflat.sum(axis=0)
        if not self.input_grad:
            return None
        dcols = (dflat @ self.weight.value.reshape(9 * c, self.out_channels).T).reshape(b, h, w, 9, c)
        dxp = np.zeros((b, h + 2, w + 2, c), dtype=dout.dtype)
        for k in range(9):
            i, j = divmod(k, 3)
            dxp[:, i:i + h, j:j + w, :] += dcols[:, :, :, k, :]
        return dxp[:, 1:-1, 1:-1, :]

    def __repr__(self):
        return f"Conv2D({self.in_channels}->{self.out_channels}, 3x3)"


class MaxPool2D(Layer):
    """Non-overlapping max pooling; gradient goes to the first maximum of each block."""

    name = "maxpool"

    def __init__(self, pool=(2, 4)):
        self.pool = tuple(pool)
        self._cache = None

    def output_shape(self, input_shape):
        h, w, c = input_shape
        ph, pw = self.pool
        if h % ph or w % pw:
            raise ShapeError(f"pool {self.pool} does not divide {(h, w)}")
        return (h // ph, w // pw, c)

    def forward(self, x, train=False):
        b, h, w, c = x.shape
        ph, pw = self.pool
        if h % ph or w % pw:
            raise ShapeError(f"pool {self.pool} does not divide {(h, w)}")
        out = x[:, 0::ph, 0::pw, :].copy()
        for i in range(ph):
            for j in range(pw):
                if i or j:
                    np.maximum(out, x[:, i::ph, j::pw, :], out=out)
        self._cache = (x, out)
        return out

    def backward(self, dout):
        x, out = self._cache
        ph, pw = self.pool
        dx = np.zeros_like(x, dtype=dout.dtype)
        unclaimed = np.ones(out.shape, dtype=bool)
        # scan each block in row-major order so ties go to the first maximum
        for i in range(ph):
            for j in range(pw):
                hit = x[:, i::ph, j::pw, :] == out
                hit &= unclaimed
                unclaimed &= ~hit
                dx[:, i::ph, j::pw, :] = dout * hit
        return dx

    def __repr__(self):
        return f"MaxPool2D({self.pool[0]}x{self.pool[1]})"


class BatchNorm(Layer):
    """Per-channel batch normalization over every axis but the last.

    Running statistics follow ``running = momentum * running + (1 - momentum) * batch``
    and are seeded by the first training batch.
    """

    name = "batchnorm"

    def __init__(self, channels: int, momentum: float = 0.99, eps: float = 1e-5, dtype=np.float64):
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(np.ones(channels, dtype=dtype), "gamma")
        self.beta = Parameter(np.zeros(channels, dtype=dtype), "beta")
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        # 1-element array so it serializes alongside the statistics
        self.initialized = np.zeros(1, dtype=dtype)
        self._cache = None

    def parameters(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [self.running_mean, self.running_var, self.initialized]

    def output_shape(self, input_shape):
        return tuple(input_shape)

    def forward(self, x, train=False):
        if x.shape[-1] != self.channels:
            raise ShapeError(f"batchnorm expects {self.channels} channels, got {x.shape[-1]}")
        shape = x.shape
        x = x.reshape(-1, self.channels)
        if train:
            n = x.shape[0]
            mean = x.mean(axis=0)
            centered = x - mean
            var = np.einsum("ij,ij->j", centered, centered) / n
            if self.initialized[0]:
                m = self.momentum
                self.running_mean *= m
                self.running_mean += (1 - m) * mean
                self.running_var *= m
                self.running_var += (1 - m) * var
            else:
                self.running_mean[...] = mean
                self.running_var[...] = var
                self.initialized[0] = 1
            inv_std = 1.0 / np.sqrt(var + self.eps)
            centered *= inv_std
            self._cache = (centered, inv_std)
            out = centered * self.gamma.value
            out += self.beta.value
        else:
            if not self.initialized[0]:
                raise UninitializedStatisticsError("batchnorm has no running statistics yet")
            scale = self.gamma.value / np.sqrt(self.running_var + self.eps)
            out = x * scale
            out += self.beta.value - self.running_mean * scale
            self._cache = None
        return out.reshape(shape)

    def backward(self, dout):
        if self._cache is None:
            raise RuntimeError("batchnorm backward requires a training-mode forward")
        xhat, inv_std = self._cache
        shape = dout.shape
        d = dout.reshape(-1, self.channels)
        n = d.shape[0]
        dgamma = np.einsum("ij,ij->j", d, xhat)
        dbeta = d.sum(axis=0)
        self.gamma.grad += dgamma
        self.beta.grad += dbeta
        k = self.gamma.value * inv_std
        dx = d * k
        dx -= xhat * (k * dgamma / n)
        dx -= k * dbeta / n
        return dx.reshape(shape)

    def __repr__(self):
        return f"BatchNorm({self.channels})"


class LeakyReLU(Layer):
    """``x`` for ``x > 0`` else ``alpha * x``; alpha = 0 gives a plain ReLU."""

    name = "activation"

    def __init__(self, alpha: float = 0.3):
        self.alpha = alpha
        self._slope = None

    def output_shape(self, input_shape):
        return tuple(input_shape)

    def forward(self, x, train=False):
        slope = (x > 0).astype(x.dtype)
        slope *= 1.0 - self.alpha
        slope += self.alpha
        self._slope = slope
        return x * slope

    def backward(self, dout):
        return dout * self._slope

    def __repr__(self):
        return f"LeakyReLU({self.alpha})"


class Dense(Layer):
    """``y = x W^T + b`` with ``W`` stored as (out, in)."""

    name = "dense"

    def __init__(self, in_features: int, out_features: int, rng=None, dtype=np.float64):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(
            glorot_uniform(rng, (out_features, in_features), in_features, out_features, dtype), "weight"
        )
        self.bias = Parameter(np.zeros(out_features, dtype=dtype), "bias")
        self._x = None

    def parameters(self):
        return [self.weight, self.bias]

    def output_shape(self, input_shape):
        if tuple(input_shape) != (self.in_features,):
            raise ShapeError(f"dense expects ({self.in_features},), got {input_shape}")
        return (self.out_features,)

    def forward(self, x, train=False):
        if x.shape[-1] != self.in_features:
            raise ShapeError(f"dense expects {self.in_features} features, got {x.shape[-1]}")
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, dout):
        x2 = self._x.reshape(-1, self.in_features)
        d2 = dout.reshape(-1, self.out_features)
        self.weight.grad += d2.T @ x2
        self.bias.grad += d2.sum(axis=0)
        return dout @ self.weight.value

    def __repr__(self):
        return f"Dense({self.in_features}->{self.out_features})"


class Flatten(Layer):
    name = "flatten"

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)

    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class ToSequence(Layer):
    """(B, T, W, C) feature maps -> (B, T, W * C) sequences; the first spatial axis is time."""

    name = "to_sequence"

    def output_shape(self, input_shape):
        t, w, c = input_shape
        return (t, w * c)

    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], x.shape[1], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Mean categorical cross-entropy of ``softmax(logits)`` against one-hot targets.

    Returns ``(loss, dloss/dlogits)``. For a single logit vector the gradient
    is ``softmax(logits) - targets``; for a batch it is divided by the batch size.
    """
    logits = np.asarray(logits)
    targets = np.asarray(targets, dtype=logits.dtype)
    single = logits.ndim == 1
    z = np.atleast_2d(logits)
    y = np.atleast_2d(targets)
    shifted = z - z.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    n = z.shape[0]
    loss = float(-np.sum(y * log_probs) / n)
    grad = (np.exp(log_probs) - y) / n
    return loss, (grad[0] if single else grad)


# Single-shot functional forms, convenient for small checks.

def conv2d(x, weight, bias):
    layer = Conv2D(weight.shape[2], weight.shape[3], dtype=np.asarray(weight).dtype)
    layer.weight.value[...] = weight
    layer.bias.value[...] = bias
    batched = x.ndim == 4
    out = layer.forward(x if batched else x[None])
    return out if batched else out[0]


def maxpool2d(x, pool=(2, 4)):
    batched = x.ndim == 4
    out = MaxPool2D(pool).forward(x if batched else x[None])
    return out if batched else out[0]


def leaky_relu(x, alpha: float = 0.3):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x, alpha * x)


def dense(x, weight, bias):
    return np.asarray(x) @ np.asarray(weight).T + np.asarray(bias)
