"""Train the proposed model on the synthetic corpus and print the per-class report.

The per-item ("paper" mode) split reproduces the 420 / 183 division of the 603 augmented
spectrograms. A full run (up to 100 epochs) takes tens of minutes on one
core; pass a smaller epoch count for a quick look:

    python demos/05_train_and_evaluate.py 5
"""
import sys

from drillsound.experiments import prepare_dataset, run_experiment
from drillsound.synth import generate_corpus
from drillsound.training import SplitSpec, TrainConfig

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 100
data = prepare_dataset(generate_corpus())
print("spectrograms:", data.x.shape, "per class:", data.class_counts())

cfg = TrainConfig(epochs=epochs, patience=min(5, epochs), seed=1)
result = run_experiment(
    data, "CnnLstmAttnLeaky", cfg, SplitSpec(mode="paper", seed=1),
    callback=lambda r: print(f"epoch {r.epoch:3d} loss {r.train_loss:.4f} val_loss {r.val_loss:.4f} "
                             f"val_acc {r.val_acc:.3f}"),
)
print(result.config["sizes"])
print(f"best epoch {result.history.best_epoch} of {result.history.epochs_run}")
print(result.metrics.report(4))
