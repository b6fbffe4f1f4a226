from __future__ import annotations

import numpy as np

from .parameter import Parameter


def adam_step(p: Parameter, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """Bias-corrected Adam update of ``p`` in place; clears ``p.grad`` afterwards."""
    p.step_count += 1
    t = p.step_count
    g = p.grad
    p.adam_m *= beta1
    p.adam_m += (1.0 - beta1) * g
    p.adam_v *= beta2
    p.adam_v += (1.0 - beta2) * (g * g)
    m_hat = p.adam_m / (1.0 - beta1 ** t)
    v_hat = p.adam_v / (1.0 - beta2 ** t)
    p.value -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.value.dtype, copy=False)
    p.zero_grad()


class Adam:
    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self) -> None:
        for p in self.params:
            adam_step(p, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
