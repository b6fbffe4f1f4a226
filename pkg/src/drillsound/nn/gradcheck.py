"""Central finite-difference checks for the hand-written backward passes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import Layer

DEFAULT_STEP = 1e-5


@dataclass
class GradCheckReport:
    """Worst relative error per checked array.

    Relative error of an array is ``max|analytic - numeric| / max|numeric|``,
    so an analytic gradient that is off by a factor of two scores 1.0.
    """

    errors: dict = field(default_factory=dict)
    tolerance: float = 1e-4

    @property
    def max_rel_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def __str__(self):
        parts = ", ".join(f"{k}={v:.2e}" for k, v in self.errors.items())
        status = "ok" if self.passed else "FAIL"
        return f"[{status}] max rel err {self.max_rel_error:.2e} (tol {self.tolerance:g}): {parts}"


def numeric_gradient(f, x: np.ndarray, step: float = DEFAULT_STEP) -> np.ndarray:
    """d f / d x by central differences; ``x`` is perturbed in place and restored."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + step
        up = f()
        flat[k] = orig - step
        down = f()
        flat[k] = orig
        gflat[k] = (up - down) / (2 * step)
    return grad


def relative_error(analytic, numeric) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(numeric).max(initial=0.0), 1e-12)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def grad_check(f, x: np.ndarray, analytic: np.ndarray, step: float = DEFAULT_STEP,
               tolerance: float = 1e-4, name: str = "x") -> GradCheckReport:
    """Compare ``analytic`` with the numeric gradient of scalar ``f(x)``."""
    if x.dtype != np.float64:
        raise TypeError("gradient checks need float64 inputs")
    numeric = numeric_gradient(lambda: f(x), x, step)
    return GradCheckReport({name: relative_error(analytic, numeric)}, tolerance)


def check_layer(layer: Layer, x: np.ndarray, rng=None, train: bool = True,
                step: float = DEFAULT_STEP, tolerance: float = 1e-4) -> GradCheckReport:
    """Check input and parameter gradients of ``layer`` under a random linear probe.

    The scalar objective is ``sum(probe * layer(x))`` with a fixed Gaussian probe.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    x = np.array(x, dtype=np.float64)
    probe = rng.standard_normal(layer.forward(x, train=train).shape)

    def objective():
        return float(np.sum(probe * layer.forward(x, train=train)))

    for p in layer.parameters():
        p.zero_grad()
    layer.forward(x, train=train)
    dx = layer.backward(probe)

    report = GradCheckReport(tolerance=tolerance)
    if dx is not None:
        report.errors["input"] = relative_error(dx, numeric_gradient(objective, x, step))
    for p in layer.parameters():
        analytic = p.grad.copy()
        report.errors[p.name or "param"] = relative_error(analytic, numeric_gradient(objective, p.value, step))
    return report
