"""Datasets, stratified splitting, the training loop and evaluation."""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .audio_io import CLASS_ORDER, AudioClip, Label
from .dsp import LogMelSpectrogram, log_mel
from .errors import DivergenceError, SplitInfeasibleError
from .metrics import Metrics
from .models import Model
from .nn import Adam, softmax_cross_entropy

log = logging.getLogger(__name__)

__all__ = [
    "Dataset",
    "featurize",
    "SplitSpec",
    "split_indices",
    "split",
    "TrainConfig",
    "EarlyStopping",
    "EpochRecord",
    "History",
    "train",
    "predict",
    "evaluate",
]

EVAL_BATCH = 32


@dataclass(eq=False)
class Dataset:
    """Spectrograms ``x`` (N, T, M), integer labels ``y`` in class order, and source ids."""

    x: np.ndarray
    y: np.ndarray
    source_ids: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.source_ids = np.asarray(self.source_ids, dtype=object)
        if not (len(self.x) == len(self.y) == len(self.source_ids)):
            raise ValueError("x, y and source_ids must have equal length")

    def __len__(self):
        return len(self.y)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.x[idx], self.y[idx], self.source_ids[idx])

    @classmethod
    def from_spectrograms(cls, specs: Sequence[LogMelSpectrogram], dtype=np.float32) -> "Dataset":
        x = np.stack([s.data for s in specs]).astype(dtype)
        y = [Label.parse(s.label).index for s in specs]
        return cls(x, y, [s.source_id for s in specs])

    def class_counts(self, n_classes: int = len(CLASS_ORDER)) -> np.ndarray:
        return np.bincount(self.y, minlength=n_classes)


def featurize(clips: Sequence[AudioClip], paper_literal: bool = False, **kwargs) -> Dataset:
    """Log-Mel spectrograms of labelled clips, stacked into a :class:`Dataset`."""
    return Dataset.from_spectrograms([log_mel(c, paper_literal=paper_literal, **kwargs) for c in clips])


@dataclass(frozen=True)
class SplitSpec:
    """``paper`` splits individual spectrograms; ``grouped`` splits whole source recordings."""

    test_fraction: float = 0.30
    val_fraction_of_train: float = 0.30
    mode: str = "grouped"
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.test_fraction < 1 and 0 < self.val_fraction_of_train < 1):
            raise ValueError("fractions must lie in (0, 1)")
        if self.mode not in ("paper", "grouped"):
            raise ValueError("mode must be 'paper' or 'grouped'")


def _take_count(n: int, fraction: float) -> int:
    # rounded up per class: 201 items at 0.30 -> 61, and 140 -> 42
    k = math.ceil(round(n * fraction, 9))
    return min(max(k, 1), n - 1) if n >= 2 else k


def _split_units(units_by_class: list[list], fraction: float, rng) -> tuple[list, list]:
    taken, kept = [], []
    for units in units_by_class:
        order = rng.permutation(len(units))
        k = _take_count(len(units), fraction)
        taken.extend(units[j] for j in order[:k])
        kept.extend(units[j] for j in order[k:])
    return taken, kept


def split_indices(labels, source_ids, spec: SplitSpec, n_classes: int = len(CLASS_ORDER)):
    """Stratified (train, val, test) index arrays, each sorted ascending."""
    labels = np.asarray(labels, dtype=np.int64)
    source_ids = np.asarray(source_ids, dtype=object)
    rng = np.random.default_rng(spec.seed)

    if spec.mode == "paper":
        units = [[[int(i)] for i in np.flatnonzero(labels == c)] for c in range(n_classes)]
    else:
        groups: dict = {}
        for i, sid in enumerate(source_ids):
            groups.setdefault(sid, []).append(i)
        units = [[] for _ in range(n_classes)]
        for sid, members in groups.items():
            classes = set(labels[members].tolist())
            if len(classes) != 1:
                raise SplitInfeasibleError(f"source {sid!r} carries several labels {sorted(classes)}")
            units[classes.pop()].append(members)
        for c, u in enumerate(units):
            if 0 < len(u) < 3:
                raise SplitInfeasibleError(f"class {c} has only {len(u)} source recordings; grouped split needs 3")

    test, pool = _split_units(units, spec.test_fraction, rng)
    pool_by_class = [[u for u in pool if labels[u[0]] == c] for c in range(n_classes)]
    val, train = _split_units(pool_by_class, spec.val_fraction_of_train, rng)
    flat = lambda us: np.array(sorted(i for u in us for i in u), dtype=np.int64)  # noqa: E731
    return flat(train), flat(val), flat(test)


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    tr, va, te = split_indices(data.y, data.source_ids, spec)
    return data.subset(tr), data.subset(va), data.subset(te)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 100
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 1 or self.patience < 1:
            raise ValueError("lr, batch_size, epochs and patience must be positive")
        if self.patience > self.epochs:
            raise ValueError("patience cannot exceed epochs")


class EarlyStopping:
    """Stop once the monitored loss has not improved for ``patience`` epochs."""

    def __init__(self, patience: int = 5):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, epoch: int, loss: float) -> tuple[bool, bool]:
        """Record ``loss`` for ``epoch``; returns ``(improved, should_stop)``."""
        if loss < self.best:
            self.best, self.best_epoch, self.wait = loss, epoch, 0
            return True, False
        self.wait += 1
        return False, self.wait >= self.patience


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    seconds: float = 0.0


@dataclass
class History:
    records: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def epochs_run(self) -> int:
        return len(self.records)

    @property
    def best_val_loss(self) -> float:
        return min((r.val_loss for r in self.records), default=math.inf)

    def to_rows(self, timings: bool = False) -> list[dict]:
        rows = [asdict(r) for r in self.records]
        if not timings:
            for r in rows:
                r.pop("seconds")
        return rows

    def to_csv(self, path, timings: bool = False) -> None:
        rows = self.to_rows(timings)
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["epoch"])
            writer.writeheader()
            writer.writerows(rows)


def _one_hot(y, n):
    return np.eye(n)[y]


def _loss_and_acc(model: Model, data: Dataset) -> tuple[float, float]:
    total, correct = 0.0, 0
    for start in range(0, len(data), EVAL_BATCH):
        xb, yb = data.x[start:start + EVAL_BATCH], data.y[start:start + EVAL_BATCH]
        logits = model.logits(xb, train=False).astype(np.float64)
        loss, _ = softmax_cross_entropy(logits, _one_hot(yb, model.n_classes))
        total += loss * len(yb)
        correct += int((logits.argmax(axis=1) == yb).sum())
    return total / len(data), correct / len(data)


def train(model: Model, train_set: Dataset, val_set: Dataset, cfg: TrainConfig | None = None,
          callback=None) -> tuple[Model, History]:
    """Minibatch Adam on cross-entropy with early stopping on validation loss.

    The parameters (and batch-norm statistics) from the epoch with the lowest
    validation loss are restored before returning. ``callback(record)`` is
    invoked after every epoch.
    """
    cfg = cfg or TrainConfig()
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("training and validation sets must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(model.parameters(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    stopper = EarlyStopping(cfg.patience)
    history = History()
    best_state = model.get_state()
    n = len(train_set)

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            yb = train_set.y[idx]
            logits = model.logits(train_set.x[idx], train=True)
            loss, grad = softmax_cross_entropy(logits.astype(np.float64), _one_hot(yb, model.n_classes))
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}, batch starting {start}")
            model.backward(grad)
            opt.step()
            loss_sum += loss * len(idx)
            correct += int((logits.argmax(axis=1) == yb).sum())

        val_loss, val_acc = _loss_and_acc(model, val_set)
        if not math.isfinite(val_loss):
            raise DivergenceError(f"non-finite validation loss at epoch {epoch}")
        record = EpochRecord(epoch, loss_sum / n, correct / n, val_loss, val_acc, time.perf_counter() - t0)
        history.records.append(record)
        log.info("epoch %d loss %.4f acc %.3f val_loss %.4f val_acc %.3f (%.1fs)",
                 epoch, record.train_loss, record.train_acc, val_loss, val_acc, record.seconds)
        if callback is not None:
            callback(record)

        improved, stop = stopper.update(epoch, val_loss)
        if improved:
            best_state = model.get_state()
        if stop:
            history.stopped_early = True
            break

    model.set_state(best_state)
    history.best_epoch = stopper.best_epoch
    return model, history


def predict(model: Model, x) -> np.ndarray:
    """Class probabilities in inference mode, batched."""
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None]
    return np.concatenate([model.forward(x[s:s + EVAL_BATCH]) for s in range(0, len(x), EVAL_BATCH)])


def evaluate(model: Model, test_set: Dataset) -> Metrics:
    if len(test_set) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    pred = predict(model, test_set.x).argmax(axis=1)
    return Metrics.from_predictions(test_set.y, pred, model.n_classes)
