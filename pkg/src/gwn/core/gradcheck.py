"""Central finite-difference oracle for tape gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import ParamStore
from .tensor import Tape, Tensor, backward


@dataclass
class GradCheckReport:
    max_rel_error: dict[str, float]
    analytic: dict[str, np.ndarray]
    numeric: dict[str, np.ndarray]

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)

    def passed(self, tol: float = 1e-4) -> bool:
        return self.worst < tol


def relative_error(ad: np.ndarray, fd: np.ndarray) -> np.ndarray:
    return np.abs(ad - fd) / np.maximum(1e-8, np.abs(ad) + np.abs(fd))


def finite_diff_check(
    f: Callable[[ParamStore], Tensor], params: ParamStore, h: float = 1e-5
) -> GradCheckReport:
    """Compare tape gradients of ``f`` against central differences.

    ``f`` must be deterministic and build its graph from the tensors currently
    in ``params``. Every coordinate of every trainable entry is perturbed by
    ``±h``; the store is restored afterwards.
    """
    with Tape(params) as tape:
        loss = f(params)
    analytic = backward(tape, loss)

    numeric: dict[str, np.ndarray] = {}
    errors: dict[str, float] = {}
    for name, p in params.trainable_items():
        base = p.data.copy()
        fd = np.zeros_like(base)
        flat = fd.reshape(-1)
        for i in range(base.size):
            bumped = base.copy().reshape(-1)
            bumped[i] += h
            params.set(name, bumped.reshape(base.shape))
            up = f(params).item()
            bumped[i] -= 2 * h
            params.set(name, bumped.reshape(base.shape))
            down = f(params).item()
            flat[i] = (up - down) / (2 * h)
        params.set(name, base)
        numeric[name] = fd
        errors[name] = float(relative_error(analytic[name], fd).max()) if fd.size else 0.0
    return GradCheckReport(errors, analytic, numeric)
