"""Compare the four variants, then augmented vs original training data.

Each cell is a full training run; with defaults this takes hours on one core.
A quick pass:

    python demos/06_ablation_and_augmentation.py 3 1
"""
import sys

from drillsound.experiments import ablate, compare_augmentation, prepare_dataset
from drillsound.synth import generate_corpus
from drillsound.training import TrainConfig

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 100
n_seeds = int(sys.argv[2]) if len(sys.argv) > 2 else 3
cfg = TrainConfig(epochs=epochs, patience=min(5, epochs))

corpus = generate_corpus()
augmented = prepare_dataset(corpus, augment=True)
original = prepare_dataset(corpus, augment=False)

# %% variants, mean test accuracy over seeds (grouped split: no copy of a test clip is seen in training)
table = ablate(augmented, cfg, seeds=range(1, n_seeds + 1))
print(table)  # the last column holds the accuracies reported for the real recordings

# %% augmentation on / off with the proposed model
print(compare_augmentation(original, augmented, cfg))
