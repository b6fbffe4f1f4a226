"""Acceptance suite: the nine release criteria, each at its stated tolerance.

Criteria 5, 6, 7 and 9 train full models on the synthetic corpus and take a
long time on a single core (see README). Every test reports a one-line
PASS/FAIL verdict, repeated in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from drillsound.augment import AugmentPlan, augment_dataset, gain_factor
from drillsound.dsp import StftParams, hamming_window, stft
from drillsound.experiments import ablate, compare_augmentation, prepare_dataset, run_experiment
from drillsound.metrics import Metrics
from drillsound.models import PROPOSED, ModelVariant, build
from drillsound.nn import (LSTM, Attention, BatchNorm, Conv2D, Dense, LeakyReLU, MaxPool2D, check_layer,
                           grad_check, softmax_cross_entropy)
from drillsound.synth import generate_corpus
from drillsound.training import SplitSpec, TrainConfig

EXPECTED_TRACE = [
    ("Input", (100, 96, 1)),
    ("Conv 1", (100, 96, 128)),
    ("Max_pooling 1", (50, 24, 128)),
    ("Conv 2", (50, 24, 128)),
    ("Max_pooling 2", (25, 6, 128)),
    ("Conv 3", (25, 6, 256)),
    ("LSTM", (25, 256)),
    ("Attention", (256,)),
    ("FC 1", (64,)),
    ("FC 2", (3,)),
]


def test_criterion_1_shape_conformance(record_criterion):
    model = build(PROPOSED, seed=0)
    t0 = time.perf_counter()
    trace = model.trace_shapes(np.random.default_rng(0).standard_normal((100, 96)))
    elapsed = time.perf_counter() - t0
    ok = record_criterion(1, trace == EXPECTED_TRACE and elapsed < 1.0, "shape conformance",
                          f"{len(trace)} stages match={trace == EXPECTED_TRACE}, {elapsed:.3f}s")
    assert trace == EXPECTED_TRACE
    assert ok


def _distinct(rng, shape, spacing=0.05):
    n = int(np.prod(shape))
    return ((rng.permutation(n) - n // 2 + 0.5) * spacing).reshape(shape)


def test_criterion_2_gradient_suite(record_criterion):
    t0 = time.perf_counter()
    worst_layer, worst_loss = 0.0, 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        bn = BatchNorm(3)
        bn.gamma.value[:] = rng.uniform(0.5, 1.5, 3)
        bn.beta.value[:] = rng.standard_normal(3)
        cases = [
            (Conv2D(2, 3, rng), rng.standard_normal((2, 5, 6, 2))),
            (MaxPool2D((2, 4)), _distinct(rng, (2, 4, 8, 3))),
            (bn, rng.standard_normal((2, 3, 4, 3))),
            (LeakyReLU(0.3), _distinct(rng, (4, 9))),
            (LSTM(5, 4, rng), rng.standard_normal((2, 3, 5))),
            (Attention(4, rng), rng.standard_normal((2, 3, 4))),
            (Dense(6, 5, rng), rng.standard_normal((3, 6))),
        ]
        for layer, x in cases:
            report = check_layer(layer, x, rng, step=1e-5, tolerance=1e-4)
            worst_layer = max(worst_layer, report.max_rel_error)
            assert report.passed, f"seed {seed} {layer!r}: {report}"
        target = np.eye(3)[rng.integers(0, 3, 4)]
        logits = rng.standard_normal((4, 3)) * 2
        _, analytic = softmax_cross_entropy(logits, target)
        report = grad_check(lambda z: softmax_cross_entropy(z, target)[0], logits, analytic,
                            step=1e-5, tolerance=1e-6, name="loss")
        worst_loss = max(worst_loss, report.max_rel_error)
        assert report.passed, f"seed {seed}: {report}"
    elapsed = time.perf_counter() - t0
    ok = record_criterion(2, worst_layer <= 1e-4 and worst_loss <= 1e-6 and elapsed < 60, "gradient suite",
                          f"worst layer {worst_layer:.2e}, worst loss {worst_loss:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_3_stft_oracle(record_criterion):
    rng = np.random.default_rng(2024)
    p = StftParams(2048, 2048, 2048)
    window = hamming_window(2048)
    m = np.arange(2048)
    k = np.arange(1025)
    basis = np.exp(-2j * np.pi * (np.outer(k, m) % 2048) / 2048)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        frame = rng.uniform(-1, 1, 2048)
        fast = np.abs(stft(frame, p)[0])
        slow = np.abs(basis @ (frame * window))
        worst = max(worst, float(np.abs(fast - slow).max()))
    elapsed = time.perf_counter() - t0
    ok = record_criterion(3, worst <= 1e-9 and elapsed < 10, "STFT oracle",
                          f"max abs diff {worst:.2e} over 50 frames, {elapsed:.2f}s")
    assert ok


def test_criterion_4_augmentation_count_and_fidelity(record_criterion):
    corpus = generate_corpus()
    fresh = generate_corpus()
    out = augment_dataset(corpus, AugmentPlan(shift_ms=5.0, gain_db=2.0))
    originals_identical = all(out[3 * i].samples.tobytes() == fresh[i].samples.tobytes() for i in range(len(corpus)))
    shift_ok = all(
        not out[3 * i + 1].samples[:480].any()
        and np.array_equal(out[3 * i + 1].samples[480:], corpus[i].samples[:-480])
        for i in range(len(corpus))
    )
    factor_err = abs(gain_factor(2.0) - 10 ** 0.1)
    gained_ok = all(np.array_equal(out[3 * i + 2].samples, corpus[i].samples * gain_factor(2.0))
                    for i in range(len(corpus)))
    ok = record_criterion(
        4, len(corpus) == 201 and len(out) == 603 and originals_identical and shift_ok and gained_ok
        and factor_err <= 1e-12, "augmentation count and fidelity",
        f"{len(corpus)} -> {len(out)}, originals identical={originals_identical}, 480-sample shift={shift_ok}, "
        f"gain error {factor_err:.1e}")
    assert ok


def test_criterion_8_metrics_oracle(record_criterion):
    m = Metrics.from_confusion([[8, 2, 0], [1, 9, 0], [0, 0, 10]])
    errs = [abs(m.precision[0] - 8 / 9), abs(m.recall[0] - 0.8), abs(m.accuracy - 0.9)]
    ok = record_criterion(8, max(errs) <= 1e-12, "metrics oracle",
                          f"precision0={m.precision[0]:.4f} recall0={m.recall[0]:.4f} accuracy={m.accuracy:.4f}")
    assert ok


# -- training criteria --------------------------------------------------------------

@pytest.fixture(scope="module")
def augmented_corpus():
    return prepare_dataset(generate_corpus(), augment=True)


@pytest.fixture(scope="module")
def item_split_run():
    """One end-to-end run: per-item ("paper" mode) split, proposed model, default training settings, seed 1."""
    t0 = time.perf_counter()
    data = prepare_dataset(generate_corpus(), augment=True)
    result = run_experiment(data, PROPOSED, TrainConfig(seed=1), SplitSpec(mode="paper", seed=1))
    return result, time.perf_counter() - t0


def test_criterion_5_end_to_end(item_split_run, record_criterion):
    result, seconds = item_split_run
    sizes = result.config["sizes"]
    acc = result.metrics.accuracy
    split_ok = sizes["train"] + sizes["val"] == 420 and sizes["test"] == 183
    ok = record_criterion(
        5, split_ok and acc >= 0.90 and seconds <= 1800, "end-to-end run",
        f"split {sizes['train']}+{sizes['val']}/{sizes['test']}, test accuracy {acc:.4f}, "
        f"{result.history.epochs_run} epochs, {seconds / 60:.1f} min")
    assert split_ok and acc >= 0.90
    assert seconds <= 1800
    assert ok


def test_criterion_9_determinism(item_split_run, record_criterion):
    first, _ = item_split_run
    second = run_experiment(prepare_dataset(generate_corpus(), augment=True), PROPOSED, TrainConfig(seed=1),
                            SplitSpec(mode="paper", seed=1))
    a, b = first.to_json().encode(), second.to_json().encode()
    ok = record_criterion(9, a == b, "determinism", f"metrics JSON {len(a)} bytes, identical={a == b}")
    assert ok


def test_criterion_6_ablation(augmented_corpus, record_criterion, tmp_path):
    table = ablate(augmented_corpus, TrainConfig(), seeds=(1, 2, 3))
    print(table)
    table.to_csv(tmp_path / "ablation.csv")
    complete = all(len(table.accuracies[v]) == 3 and not any(math.isnan(a) for a in table.accuracies[v])
                   for v in ModelVariant)
    proposed, cnn = table.mean_accuracy(PROPOSED), table.mean_accuracy(ModelVariant.CNN_LEAKY)
    direction = "proposed >= CNN-only" if proposed >= cnn else "proposed < CNN-only"
    means = ", ".join(f"{v.value} {table.mean_accuracy(v):.3f}" for v in ModelVariant)
    ok = record_criterion(6, complete and (tmp_path / "ablation.csv").exists(), "ablation harness",
                          f"{means}; {direction} (informational)")
    assert ok


def test_criterion_7_augmentation_comparison(augmented_corpus, record_criterion):
    original = prepare_dataset(generate_corpus(), augment=False)
    table = compare_augmentation(original, augmented_corpus, TrainConfig(seed=1))
    print(table)
    aug, orig = table.augmented.metrics.accuracy, table.original.metrics.accuracy
    ok = record_criterion(7, aug >= orig - 0.02, "augmentation comparison",
                          f"augmented {aug:.4f} vs original {orig:.4f}")
    assert ok
