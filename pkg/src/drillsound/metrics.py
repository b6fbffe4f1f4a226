"""Confusion matrix and precision / recall / F1 summaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import CLASS_ORDER


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts with rows = truth, columns = prediction."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


@dataclass
class Metrics:
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro: dict
    weighted: dict
    class_names: tuple

    @classmethod
    def from_confusion(cls, cm, class_names=None) -> "Metrics":
        cm = np.asarray(cm, dtype=np.int64)
        if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (cm < 0).any():
            raise ValueError("confusion counts must be non-negative")
        n = cm.shape[0]
        if class_names is None:
            class_names = tuple(c.value for c in CLASS_ORDER) if n == len(CLASS_ORDER) else tuple(str(k) for k in range(n))
        tp = np.diag(cm).astype(np.float64)
        support = cm.sum(axis=1)
        precision = _safe_div(tp, cm.sum(axis=0))
        recall = _safe_div(tp, support)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        total = cm.sum()
        weights = _safe_div(support, total)
        macro = {"precision": float(precision.mean()), "recall": float(recall.mean()), "f1": float(f1.mean())}
        weighted = {
            "precision": float(weights @ precision),
            "recall": float(weights @ recall),
            "f1": float(weights @ f1),
        }
        return cls(
            confusion=cm,
            precision=precision,
            recall=recall,
            f1=f1,
            support=support,
            accuracy=float(tp.sum() / total) if total else 0.0,
            macro=macro,
            weighted=weighted,
            class_names=tuple(class_names),
        )

    @classmethod
    def from_predictions(cls, y_true, y_pred, n_classes: int, class_names=None) -> "Metrics":
        return cls.from_confusion(confusion_matrix(y_true, y_pred, n_classes), class_names)

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    def to_dict(self) -> dict:
        return {
            "classes": list(self.class_names),
            "confusion": self.confusion.tolist(),
            "per_class": {
                name: {
                    "precision": float(self.precision[k]),
                    "recall": float(self.recall[k]),
                    "f1": float(self.f1[k]),
                    "support": int(self.support[k]),
                }
                for k, name in enumerate(self.class_names)
            },
            "accuracy": self.accuracy,
            "macro_avg": dict(self.macro, support=self.total),
            "weighted_avg": dict(self.weighted, support=self.total),
        }

    def report(self, digits: int = 2) -> str:
        """Text table: one row per class, then accuracy, macro avg and weighted avg."""
        width = max(12, *(len(n) for n in self.class_names))
        head = f"{'':<{width}} {'precision':>9} {'recall':>9} {'f1-score':>9} {'support':>8}"
        fmt = f"{{:>9.{digits}f}}"
        lines = [head]
        for k, name in enumerate(self.class_names):
            lines.append(
                f"{name:<{width}} {fmt.format(self.precision[k])} {fmt.format(self.recall[k])} "
                f"{fmt.format(self.f1[k])} {int(self.support[k]):>8d}"
            )
        lines.append(f"{'accuracy':<{width}} {'':>9} {'':>9} {fmt.format(self.accuracy)} {self.total:>8d}")
        for title, agg in (("macro avg", self.macro), ("weighted avg", self.weighted)):
            lines.append(
                f"{title:<{width}} {fmt.format(agg['precision'])} {fmt.format(agg['recall'])} "
                f"{fmt.format(agg['f1'])} {self.total:>8d}"
            )
        return "\n".join(lines)
