"""The four model variants: layer shapes, parameter counts and the model file."""
import tempfile
from pathlib import Path

import numpy as np

from drillsound.models import PROPOSED, ModelVariant, build, load, save

# %% shapes through the proposed network
model = build(PROPOSED, seed=0)
for stage, shape in model.trace_shapes():
    print(f"{stage:14s} {'x'.join(map(str, shape))}")

# %% sizes of all variants
for v in ModelVariant:
    print(f"{v.title:36s} {build(v).n_parameters():>10,d} parameters")

# %% save and reload; predictions match exactly
rng = np.random.default_rng(1)
model.logits(rng.standard_normal((4, 100, 96)), train=True)  # batch statistics
x = rng.standard_normal((2, 100, 96))
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.dfdm"
    save(model, path)
    print("file size:", path.stat().st_size, "bytes")
    again = load(path)
print("identical predictions:", np.array_equal(model.forward(x), again.forward(x)))
print("attention over 25 steps sums to", model.attention.last_weights.sum(axis=1))
