"""The four CNN / LSTM / attention variants and their on-disk format.

All variants share the same convolutional trunk::

    BN, act, Conv(128), BN, act, MaxPool(2x4)
    BN, act, Conv(128), BN, act, MaxPool(2x4)
    BN, act, Conv(256), BN, act

and differ only in the head that follows it.
"""
from __future__ import annotations

import enum
import struct
from pathlib import Path

import numpy as np

from .errors import CorruptionError, ModelFormatError, ShapeError
from .nn import (
    LSTM,
    Attention,
    BatchNorm,
    Conv2D,
    Dense,
    Flatten,
    LastStep,
    Layer,
    LeakyReLU,
    MaxPool2D,
    Parameter,
    ToSequence,
    softmax,
)

__all__ = ["ModelVariant", "Model", "build", "save", "load", "INPUT_SHAPE", "PROPOSED"]

INPUT_SHAPE = (100, 96)
LEAKY_ALPHA = 0.3
CONV_CHANNELS = (128, 128, 256)
POOL = (2, 4)
LSTM_UNITS = 256
FC1_UNITS = 64

DFDM_MAGIC = b"DFDM"
DFDM_VERSION = 1


class ModelVariant(enum.Enum):
    CNN_LEAKY = "CnnLeaky"
    CNN_LSTM_LEAKY = "CnnLstmLeaky"
    CNN_LSTM_ATTN_LEAKY = "CnnLstmAttnLeaky"
    CNN_LSTM_ATTN_RELU = "CnnLstmAttnRelu"

    @property
    def title(self) -> str:
        return _TITLES[self]

    @property
    def code(self) -> int:
        return list(ModelVariant).index(self)

    @property
    def alpha(self) -> float:
        return 0.0 if self is ModelVariant.CNN_LSTM_ATTN_RELU else LEAKY_ALPHA

    @classmethod
    def parse(cls, value) -> "ModelVariant":
        if isinstance(value, ModelVariant):
            return value
        key = str(value).replace("-", "").replace("_", "").replace(" ", "").lower()
        for v in cls:
            if key in (v.value.lower(), v.name.replace("_", "").lower(),
                       v.title.replace("-", "").replace(" ", "").lower()):
                return v
        raise ValueError(f"unknown variant {value!r}; choose from {[v.value for v in cls]}")


_TITLES = {
    ModelVariant.CNN_LEAKY: "CNN - Leaky ReLU",
    ModelVariant.CNN_LSTM_LEAKY: "CNN - LSTM - Leaky ReLU",
    ModelVariant.CNN_LSTM_ATTN_LEAKY: "CNN - LSTM - Attention - Leaky ReLU",
    ModelVariant.CNN_LSTM_ATTN_RELU: "CNN - LSTM - Attention - ReLU",
}

PROPOSED = ModelVariant.CNN_LSTM_ATTN_LEAKY


class Model:
    """An ordered layer stack mapping (B, 100, 96) spectrograms to class logits.

    ``stages`` labels the layers whose outputs correspond to rows of the
    architecture table (``"Conv 1"``, ``"Max_pooling 1"``, ..., ``"FC 2"``).
    """

    def __init__(self, variant: ModelVariant, n_classes: int = 3, seed: int | None = 0, dtype=np.float32):
        if n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        self.variant = ModelVariant.parse(variant)
        self.n_classes = n_classes
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.layers: list[Layer] = []
        self.stages: dict[int, str] = {}
        self._assemble(np.random.default_rng(seed))

    def _add(self, layer: Layer, stage: str | None = None):
        if stage:
            self.stages[len(self.layers)] = stage
        self.layers.append(layer)

    def _assemble(self, rng):
        alpha, dt = self.variant.alpha, self.dtype
        h, w = INPUT_SHAPE
        c_in = 1
        for k, c_out in enumerate(CONV_CHANNELS, start=1):
            self._add(BatchNorm(c_in, dtype=dt))
            self._add(LeakyReLU(alpha))
            self._add(Conv2D(c_in, c_out, rng, dt, input_grad=k > 1), f"Conv {k}")
            self._add(BatchNorm(c_out, dtype=dt))
            self._add(LeakyReLU(alpha))
            if k < len(CONV_CHANNELS):
                self._add(MaxPool2D(POOL), f"Max_pooling {k}")
                h, w = h // POOL[0], w // POOL[1]
            c_in = c_out

        if self.variant is ModelVariant.CNN_LEAKY:
            self._add(Flatten())
            feat = h * w * c_in
        else:
            self._add(ToSequence())
            self._add(LSTM(w * c_in, LSTM_UNITS, rng, dt), "LSTM")
            if self.variant is ModelVariant.CNN_LSTM_LEAKY:
                self._add(LastStep())
            else:
                self._add(Attention(LSTM_UNITS, rng, dt), "Attention")
            feat = LSTM_UNITS
        self._add(Dense(feat, FC1_UNITS, rng, dt), "FC 1")
        self._add(LeakyReLU(alpha))
        self._add(Dense(FC1_UNITS, self.n_classes, rng, dt), "FC 2")

    # -- running -----------------------------------------------------------

    def _prepare(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 2:
            x = x[None]
        if x.shape[1:] == INPUT_SHAPE:
            x = x[..., None]
        if x.ndim != 4 or x.shape[1:] != INPUT_SHAPE + (1,):
            raise ShapeError(f"expected spectrograms shaped {INPUT_SHAPE}, got {x.shape}")
        return x

    def logits(self, x, train: bool = False) -> np.ndarray:
        out = self._prepare(x)
        for layer in self.layers:
            out = layer.forward(out, train=train)
        return out

    def forward(self, x, mode: str = "infer") -> np.ndarray:
        """Class probabilities, one row per spectrogram."""
        if mode not in ("train", "infer"):
            raise ValueError("mode must be 'train' or 'infer'")
        return softmax(self.logits(x, train=mode == "train").astype(np.float64))

    predict_proba = forward

    def backward(self, dlogits: np.ndarray) -> None:
        grad = np.asarray(dlogits, dtype=self.dtype)
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
            if grad is None:
                break

    def trace_shapes(self, x=None) -> list[tuple[str, tuple]]:
        """Run one input through the stack and report per-sample output shapes of labelled stages."""
        x = np.zeros(INPUT_SHAPE, dtype=self.dtype) if x is None else x
        out = self._prepare(x)[:1]
        trace = [("Input", tuple(out.shape[1:]))]
        saved = self.get_state()
        try:
            # train mode so a freshly built model has usable batch statistics
            for k, layer in enumerate(self.layers):
                out = layer.forward(out, train=True)
                if k in self.stages:
                    trace.append((self.stages[k], tuple(out.shape[1:])))
        finally:
            self.set_state(saved)
        return trace

    @property
    def attention(self) -> Attention | None:
        for layer in self.layers:
            if isinstance(layer, Attention):
                return layer
        return None

    # -- state ---------------------------------------------------------------

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]

    def state_arrays(self) -> list[np.ndarray]:
        """Every persistent array in fixed order: per layer, parameters then buffers."""
        out = []
        for layer in self.layers:
            out.extend(p.value for p in layer.parameters())
            out.extend(layer.buffers())
        return out

    def get_state(self) -> list[np.ndarray]:
        return [a.copy() for a in self.state_arrays()]

    def set_state(self, arrays) -> None:
        targets = self.state_arrays()
        if len(arrays) != len(targets):
            raise ShapeError(f"expected {len(targets)} arrays, got {len(arrays)}")
        for dst, src in zip(targets, arrays):
            if dst.shape != tuple(np.shape(src)):
                raise ShapeError(f"array shape {np.shape(src)} does not match {dst.shape}")
            dst[...] = src

    def n_parameters(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def __repr__(self):
        return f"Model({self.variant.value}, n_classes={self.n_classes}, params={self.n_parameters():,})"


def build(variant=PROPOSED, n_classes: int = 3, seed: int = 0, dtype=np.float32) -> Model:
    return Model(variant, n_classes=n_classes, seed=seed, dtype=dtype)


def save(model: Model, path) -> None:
    """Write the DFDM file: header, then each array as u32 ndim, u32 dims, float32 LE data."""
    arrays = model.state_arrays()
    parts = [DFDM_MAGIC, struct.pack("<IBII", DFDM_VERSION, model.variant.code, model.n_classes, len(arrays))]
    for a in arrays:
        parts.append(struct.pack(f"<I{a.ndim}I", a.ndim, *a.shape))
        parts.append(np.ascontiguousarray(a, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load(path, dtype=np.float32) -> Model:
    blob = Path(path).read_bytes()
    if blob[:4] != DFDM_MAGIC:
        raise ModelFormatError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < 17:
        raise CorruptionError(f"{path}: truncated header")
    version, code, n_classes, count = struct.unpack("<IBII", blob[4:17])
    if version != DFDM_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    variants = list(ModelVariant)
    if code >= len(variants):
        raise ModelFormatError(f"{path}: unknown variant code {code}")
    model = Model(variants[code], n_classes=n_classes, seed=None, dtype=dtype)
    pos = 17
    arrays = []
    try:
        for _ in range(count):
            (ndim,) = struct.unpack_from("<I", blob, pos)
            dims = struct.unpack_from(f"<{ndim}I", blob, pos + 4)
            pos += 4 + 4 * ndim
            n = int(np.prod(dims, dtype=np.int64)) * 4
            if pos + n > len(blob):
                raise CorruptionError(f"{path}: truncated payload")
            arrays.append(np.frombuffer(blob, dtype="<f4", count=n // 4, offset=pos).reshape(dims))
            pos += n
    except struct.error as exc:
        raise CorruptionError(f"{path}: truncated payload") from exc
    if pos != len(blob):
        raise CorruptionError(f"{path}: {len(blob) - pos} trailing bytes")
    try:
        model.set_state(arrays)
    except ShapeError as exc:
        raise CorruptionError(f"{path}: {exc}") from exc
    return model
