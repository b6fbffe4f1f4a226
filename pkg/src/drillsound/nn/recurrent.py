"""LSTM over time and the frame-level attention pooling that follows it."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from .layers import Layer, softmax
from .parameter import Parameter, glorot_uniform

__all__ = ["LstmState", "lstm_step", "LSTM", "LastStep", "Attention", "attention", "GATES"]

# Column blocks of the fused kernels, in this order.
GATES = ("f", "i", "o", "c")


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray
    f: np.ndarray | None = None
    i: np.ndarray | None = None
    o: np.ndarray | None = None
    candidate: np.ndarray | None = None

    @classmethod
    def zeros(cls, hidden: int, batch: int | None = None, dtype=np.float64):
        shape = (hidden,) if batch is None else (batch, hidden)
        return cls(np.zeros(shape, dtype=dtype), np.zeros(shape, dtype=dtype))


def lstm_step(x, prev: LstmState, params: dict) -> LstmState:
    """One LSTM update from per-gate matrices.

    ``params`` maps ``W_f, U_f, b_f, W_i, ..., b_c`` to arrays with ``W_*`` of
    shape (hidden, input) and ``U_*`` of shape (hidden, hidden). Works on a
    single vector or a batch of row vectors.
    """
    def pre(g):
        w, u, b = params[f"W_{g}"], params[f"U_{g}"], params[f"b_{g}"]
        if w.shape[1] != x.shape[-1] or u.shape[1] != prev.h.shape[-1]:
            raise ShapeError("lstm_step: dimension mismatch")
        return x @ w.T + prev.h @ u.T + b

    f = sigmoid(pre("f"))
    i = sigmoid(pre("i"))
    o = sigmoid(pre("o"))
    cand = np.tanh(pre("c"))
    c = f * prev.c + i * cand
    h = o * np.tanh(c)
    return LstmState(h=h, c=c, f=f, i=i, o=o, candidate=cand)


class LSTM(Layer):
    """Unidirectional LSTM returning the hidden state at every step.

    Input ``(B, T, D)``, output ``(B, T, H)``. The four gates share fused
    kernels: ``kernel`` (D, 4H), ``recurrent`` (H, 4H), ``bias`` (4H), with
    column blocks in ``GATES`` order. The forget-gate bias starts at 1.
    """

    name = "lstm"

    def __init__(self, input_size: int, hidden_size: int, rng=None, dtype=np.float64):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.input_size = input_size
        self.hidden_size = hidden_size
        h4 = 4 * hidden_size
        self.kernel = Parameter(glorot_uniform(rng, (input_size, h4), input_size, h4, dtype), "kernel")
        self.recurrent = Parameter(glorot_uniform(rng, (hidden_size, h4), hidden_size, h4, dtype), "recurrent")
        bias = np.zeros(h4, dtype=dtype)
        bias[:hidden_size] = 1.0
        self.bias = Parameter(bias, "bias")
        self._cache = None

    def parameters(self):
        return [self.kernel, self.recurrent, self.bias]

    def output_shape(self, input_shape):
        t, d = input_shape
        if d != self.input_size:
            raise ShapeError(f"lstm expects {self.input_size} features, got {d}")
        return (t, self.hidden_size)

    def gate_params(self) -> dict:
        """Per-gate ``W_g`` (H, D), ``U_g`` (H, H), ``b_g`` views for :func:`lstm_step`."""
        hs = self.hidden_size
        out = {}
        for k, g in enumerate(GATES):
            sl = slice(k * hs, (k + 1) * hs)
            out[f"W_{g}"] = self.kernel.value[:, sl].T
            out[f"U_{g}"] = self.recurrent.value[:, sl].T
            out[f"b_{g}"] = self.bias.value[sl]
        return out

    def forward(self, x, train=False):
        if x.ndim != 3 or x.shape[-1] != self.input_size:
            raise ShapeError(f"lstm expects (B, T, {self.input_size}), got {x.shape}")
        b, t_len, d = x.shape
        hs = self.hidden_size
        proj = (x.reshape(b * t_len, d) @ self.kernel.value + self.bias.value).reshape(b, t_len, 4 * hs)
        u = self.recurrent.value
        h = np.zeros((b, hs), dtype=x.dtype)
        c = np.zeros((b, hs), dtype=x.dtype)
        gates = np.empty((t_len, b, 4 * hs), dtype=x.dtype)
        cells = np.empty((t_len + 1, b, hs), dtype=x.dtype)
        hiddens = np.empty((t_len + 1, b, hs), dtype=x.dtype)
        cells[0] = c
        hiddens[0] = h
        for t in range(t_len):
            z = proj[:, t] + h @ u
            act = gates[t]
            act[:, :3 * hs] = sigmoid(z[:, :3 * hs])
            act[:, 3 * hs:] = np.tanh(z[:, 3 * hs:])
            f, i, o, g = act[:, :hs], act[:, hs:2 * hs], act[:, 2 * hs:3 * hs], act[:, 3 * hs:]
            c = f * c + i * g
            h = o * np.tanh(c)
            cells[t + 1] = c
            hiddens[t + 1] = h
        self._cache = (x, gates, cells, hiddens)
        return hiddens[1:].transpose(1, 0, 2).copy()

    def backward(self, dout):
        x, gates, cells, hiddens = self._cache
        b, t_len, d = x.shape
        hs = self.hidden_size
        u = self.recurrent.value
        dz_all = np.empty((b, t_len, 4 * hs), dtype=dout.dtype)
        dh_next = np.zeros((b, hs), dtype=dout.dtype)
        dc_next = np.zeros((b, hs), dtype=dout.dtype)
        for t in reversed(range(t_len)):
            act = gates[t]
            f, i, o, g = act[:, :hs], act[:, hs:2 * hs], act[:, 2 * hs:3 * hs], act[:, 3 * hs:]
            tanh_c = np.tanh(cells[t + 1])
            dh = dout[:, t] + dh_next
            dc = dh * o * (1.0 - tanh_c * tanh_c) + dc_next
            dz = dz_all[:, t]
            dz[:, :hs] = dc * cells[t] * f * (1.0 - f)
            dz[:, hs:2 * hs] = dc * g * i * (1.0 - i)
            dz[:, 2 * hs:3 * hs] = dh * tanh_c * o * (1.0 - o)
            dz[:, 3 * hs:] = dc * i * (1.0 - g * g)
            dc_next = dc * f
            dh_next = dz @ u.T
        dz_flat = dz_all.reshape(b * t_len, 4 * hs)
        h_prev = hiddens[:-1].transpose(1, 0, 2).reshape(b * t_len, hs)
        self.recurrent.grad += h_prev.T @ dz_flat
        self.kernel.grad += x.reshape(b * t_len, d).T @ dz_flat
        self.bias.grad += dz_flat.sum(axis=0)
        return (dz_flat @ self.kernel.value.T).reshape(b, t_len, d)

    def __repr__(self):
        return f"LSTM({self.input_size}->{self.hidden_size})"


class LastStep(Layer):
    """Keep only the final hidden state of a sequence."""

    name = "last_step"

    def output_shape(self, input_shape):
        return (input_shape[-1],)

    def forward(self, x, train=False):
        self._shape = x.shape
        return x[:, -1]

    def backward(self, dout):
        dx = np.zeros(self._shape, dtype=dout.dtype)
        dx[:, -1] = dout
        return dx


class Attention(Layer):
    """Softmax-weighted sum of hidden states, scored by a learned vector.

    ``score_t = w . h_t``, ``alpha = softmax_t(score)``, ``out = sum_t alpha_t h_t``.
    The most recent weights are kept in ``last_weights`` with shape (B, T).
    """

    name = "attention"

    def __init__(self, hidden_size: int, rng=None, dtype=np.float64):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.hidden_size = hidden_size
        self.weight = Parameter(glorot_uniform(rng, (hidden_size,), hidden_size, 1, dtype), "weight")
        self.last_weights = None
        self._h = None

    def parameters(self):
        return [self.weight]

    def output_shape(self, input_shape):
        return (input_shape[-1],)

    def forward(self, x, train=False):
        if x.ndim != 3 or x.shape[-1] != self.hidden_size:
            raise ShapeError(f"attention expects (B, T, {self.hidden_size}), got {x.shape}")
        alpha = softmax(x @ self.weight.value, axis=1)
        self._h = x
        self.last_weights = alpha
        return np.einsum("bt,bth->bh", alpha, x)

    def backward(self, dout):
        h, alpha = self._h, self.last_weights
        dalpha = np.einsum("bth,bh->bt", h, dout)
        dscore = alpha * (dalpha - np.sum(alpha * dalpha, axis=1, keepdims=True))
        self.weight.grad += np.einsum("bt,bth->h", dscore, h)
        return alpha[:, :, None] * dout[:, None, :] + dscore[:, :, None] * self.weight.value

    def __repr__(self):
        return f"Attention({self.hidden_size})"


def attention(h_seq, w):
    """Functional attention over a (T, H) sequence; returns ``(context, weights)``."""
    h_seq = np.asarray(h_seq, dtype=np.float64)
    if h_seq.ndim != 2 or h_seq.shape[0] < 1:
        raise ShapeError("attention expects a non-empty (T, H) sequence")
    alpha = softmax(h_seq @ np.asarray(w, dtype=np.float64))
    return alpha @ h_seq, alpha
