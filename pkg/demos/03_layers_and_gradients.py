"""Each layer's hand-written backward pass against finite differences, then Adam."""
import numpy as np

from drillsound.nn import (LSTM, Adam, Attention, BatchNorm, Conv2D, Dense, LeakyReLU, MaxPool2D,
                           Parameter, check_layer, grad_check, softmax_cross_entropy)

rng = np.random.default_rng(0)

# %% layer by layer, double precision, step 1e-5
layers = [
    (Conv2D(2, 3, rng), rng.standard_normal((1, 5, 4, 2))),
    (MaxPool2D((2, 4)), rng.permutation(64).reshape(2, 4, 4, 2) * 0.1),
    (BatchNorm(2), rng.standard_normal((2, 3, 3, 2))),
    (LeakyReLU(0.3), rng.permutation(21).reshape(3, 7) * 0.1 - 1.05),
    (LSTM(3, 4, rng), rng.standard_normal((2, 3, 3))),
    (Attention(4, rng), rng.standard_normal((2, 5, 4))),
    (Dense(6, 4, rng), rng.standard_normal((3, 6))),
]
for layer, x in layers:
    print(f"{layer!r:28s}", check_layer(layer, x, rng))

# %% the loss
target = np.eye(3)[[0, 2]]
logits = rng.standard_normal((2, 3))
_, analytic = softmax_cross_entropy(logits, target)
print("cross-entropy", grad_check(lambda z: softmax_cross_entropy(z, target)[0], logits, analytic,
                                  tolerance=1e-6, name="logits"))

# %% Adam on f(x) = x^2 / 2
p = Parameter(np.array([1.0]))
opt = Adam([p], lr=0.1)
for step in range(1, 4):
    p.grad = p.value.copy()
    opt.step()
    print(f"step {step}: x = {p.value[0]:.6f}")
