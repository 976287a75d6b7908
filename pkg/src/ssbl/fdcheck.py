"""Central finite differences for verifying analytic gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np


def central_diff_grad(f: Callable[[np.ndarray], float], x: np.ndarray,
                      eps: float = 1e-6) -> np.ndarray:
    """Gradient of scalar f at x by central differences, one coordinate at
    a time. f must not mutate its argument."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        g[i] = (fp - fm) / (2.0 * eps)
    return grad


def max_rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst-component relative error between two gradients.

    The denominator is floored at a small fraction of the overall gradient
    scale: components far below that scale carry only finite-difference
    roundoff, so comparing them in purely relative terms would measure noise
    rather than correctness.
    """
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    scale = max(np.abs(a).max(), np.abs(n).max(), 1e-12)
    denom = np.maximum(np.abs(a) + np.abs(n), 1e-4 * scale)
    return float(np.max(np.abs(a - n) / denom))
