"""End-to-end runs, the four-variant ablation and the augmentation comparison."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .audio_io import AudioClip
from .augment import AugmentPlan, augment_dataset
from .errors import DrillSoundError
from .metrics import Metrics
from .models import PROPOSED, ModelVariant, build
from .training import Dataset, History, SplitSpec, TrainConfig, evaluate, featurize, split, train

log = logging.getLogger(__name__)

__all__ = [
    "REFERENCE_ABLATION",
    "REFERENCE_AUGMENTATION",
    "RunResult",
    "prepare_dataset",
    "run_experiment",
    "AblationTable",
    "ablate",
    "AugmentationTable",
    "compare_augmentation",
]

# Mean accuracies (%) reported for the proprietary recordings; kept as metadata only.
REFERENCE_ABLATION = {
    ModelVariant.CNN_LEAKY: 69.95,
    ModelVariant.CNN_LSTM_LEAKY: 86.89,
    ModelVariant.CNN_LSTM_ATTN_LEAKY: 92.35,
    ModelVariant.CNN_LSTM_ATTN_RELU: 90.16,
}
REFERENCE_AUGMENTATION = {"augmented": 92.35, "original": 84.13}


def prepare_dataset(clips: Sequence[AudioClip], augment: bool = True, plan: AugmentPlan | None = None,
                    paper_literal: bool = False) -> Dataset:
    if augment:
        clips = augment_dataset(list(clips), plan or AugmentPlan())
    return featurize(clips, paper_literal=paper_literal)


@dataclass
class RunResult:
    variant: ModelVariant
    metrics: Metrics
    history: History
    config: dict
    model: object = field(default=None, repr=False)

    def summary(self) -> dict:
        """JSON-ready record; contains no timings, so it is reproducible byte for byte."""
        return {
            "variant": self.variant.value,
            "config": self.config,
            "best_epoch": self.history.best_epoch,
            "epochs_run": self.history.epochs_run,
            "history": self.history.to_rows(),
            "metrics": self.metrics.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def run_experiment(data: Dataset, variant=PROPOSED, cfg: TrainConfig | None = None,
                   split_spec: SplitSpec | None = None, callback=None) -> RunResult:
    """Split, train one variant from a fresh seeded initialisation, and evaluate on the test part."""
    cfg = cfg or TrainConfig()
    split_spec = split_spec or SplitSpec(seed=cfg.seed)
    variant = ModelVariant.parse(variant)
    tr, va, te = split(data, split_spec)
    model = build(variant, seed=cfg.seed)
    model, history = train(model, tr, va, cfg, callback=callback)
    metrics = evaluate(model, te)
    config = {
        "train": asdict(cfg),
        "split": asdict(split_spec),
        "sizes": {"train": len(tr), "val": len(va), "test": len(te)},
        "variant": variant.value,
        "seed": cfg.seed,
    }
    return RunResult(variant, metrics, history, config, model)


@dataclass
class AblationTable:
    seeds: list
    accuracies: dict  # variant -> list of per-seed accuracies (nan on failure)
    errors: dict = field(default_factory=dict)

    def mean_accuracy(self, variant) -> float:
        vals = [a for a in self.accuracies[ModelVariant.parse(variant)] if not math.isnan(a)]
        return float(np.mean(vals)) if vals else math.nan

    def rows(self) -> list[dict]:
        out = []
        for v in ModelVariant:
            row = {
                "model": v.title,
                "mean_accuracy": self.mean_accuracy(v),
                "reference_accuracy_pct": REFERENCE_ABLATION[v],
            }
            for s, acc in zip(self.seeds, self.accuracies[v]):
                row[f"seed_{s}"] = acc
            out.append(row)
        return out

    def to_csv(self, path) -> None:
        rows = self.rows()
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)

    def __str__(self):
        lines = [f"{'Model':<38} {'Mean acc (%)':>12} {'Reference (%)':>14}"]
        for r in self.rows():
            lines.append(f"{r['model']:<38} {100 * r['mean_accuracy']:>12.2f} {r['reference_accuracy_pct']:>14.2f}")
        return "\n".join(lines)


def ablate(data: Dataset, cfg: TrainConfig | None = None, seeds: Sequence[int] = (1,),
           split_mode: str = "grouped", variants: Sequence = tuple(ModelVariant), callback=None) -> AblationTable:
    """Train every variant on the same split for each seed.

    A failing cell is recorded as NaN with its error message; the rest carry on.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    cfg = cfg or TrainConfig()
    variants = [ModelVariant.parse(v) for v in variants]
    table = AblationTable(list(seeds), {v: [] for v in ModelVariant})
    for seed in seeds:
        spec = SplitSpec(mode=split_mode, seed=seed)
        for v in ModelVariant:
            if v not in variants:
                table.accuracies[v].append(math.nan)
                continue
            try:
                result = run_experiment(data, v, replace(cfg, seed=seed), spec)
                acc = result.metrics.accuracy
            except (DrillSoundError, FloatingPointError, ValueError) as exc:
                log.error("ablation cell %s / seed %s failed: %s", v.value, seed, exc)
                table.errors[(v, seed)] = str(exc)
                acc = math.nan
            log.info("ablation %s seed %s accuracy %.4f", v.value, seed, acc)
            table.accuracies[v].append(acc)
            if callback is not None:
                callback(v, seed, acc)
    return table


@dataclass
class AugmentationTable:
    augmented: RunResult
    original: RunResult

    def rows(self) -> list[dict]:
        return [
            {"dataset": f"Augmented dataset ({self.augmented_count} sounds)",
             "accuracy": self.augmented.metrics.accuracy,
             "reference_accuracy_pct": REFERENCE_AUGMENTATION["augmented"]},
            {"dataset": f"Original dataset ({self.original_count} sounds)",
             "accuracy": self.original.metrics.accuracy,
             "reference_accuracy_pct": REFERENCE_AUGMENTATION["original"]},
        ]

    @property
    def augmented_count(self) -> int:
        return sum(self.augmented.config["sizes"].values())

    @property
    def original_count(self) -> int:
        return sum(self.original.config["sizes"].values())

    def to_csv(self, path) -> None:
        rows = self.rows()
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)

    def __str__(self):
        lines = [f"{'Dataset':<34} {'Accuracy (%)':>12} {'Reference (%)':>14}"]
        for r in self.rows():
            lines.append(f"{r['dataset']:<34} {100 * r['accuracy']:>12.2f} {r['reference_accuracy_pct']:>14.2f}")
        return "\n".join(lines)


def compare_augmentation(original: Dataset, augmented: Dataset, cfg: TrainConfig | None = None,
                         split_mode: str = "grouped", variant=PROPOSED) -> AugmentationTable:
    """Train the same variant, seed and split fractions on both corpora."""
    cfg = cfg or TrainConfig()
    spec = SplitSpec(mode=split_mode, seed=cfg.seed)
    aug = run_experiment(augmented, variant, cfg, spec)
    orig = run_experiment(original, variant, cfg, spec)
    return AugmentationTable(aug, orig)


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
