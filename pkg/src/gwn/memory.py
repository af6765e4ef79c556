"""LSTM external memory over the flattened per-timestep attention output."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DimensionError,
    ParamStore,
    Tensor,
    bias_add,
    concat,
    hadamard,
    matmul,
    sigmoid,
    split,
    take,
    tanh,
    unstack,
)
from .core.tensor import add, glorot_limit

MEM = "memory"
GATES = ("f", "i", "o", "c")


def init_memory(
    store: ParamStore, input_dim: int, size: int, rng: np.random.Generator, prefix: str = MEM
) -> None:
    lim = glorot_limit(input_dim + size, size)
    for g in GATES:
        store.add(f"{prefix}.W{g}", rng.uniform(-lim, lim, size=(input_dim + size, size)))
    for g in GATES:
        store.add(f"{prefix}.b{g}", np.zeros(size))


def memory_dims(params: ParamStore, prefix: str = MEM) -> tuple[int, int]:
    """(input width, state width G)."""
    rows, g = params[f"{prefix}.Wf"].shape
    return rows - g, g


@dataclass
class LstmState:
    c: Tensor
    h: Tensor

    @classmethod
    def zeros(cls, size: int, batch: tuple[int, ...] = ()) -> "LstmState":
        z = np.zeros(batch + (size,))
        return cls(Tensor(z), Tensor(z))


def lstm_step(x: Tensor, prev: LstmState, params: ParamStore, prefix: str = MEM) -> LstmState:
    """One update of the cell: gates on the concatenation [x; h_prev]."""
    d, g = memory_dims(params, prefix)
    if x.shape[-1] != d:
        raise DimensionError(f"memory expects input width {d}, got {x.shape[-1]}")
    if prev.h.shape[-1] != g or prev.c.shape[-1] != g:
        raise DimensionError(f"memory state must have width {g}")
    xh = concat([x, prev.h], axis=-1)

    def gate(name):
        return bias_add(matmul(xh, params[f"{prefix}.W{name}"]), params[f"{prefix}.b{name}"])

    f = sigmoid(gate("f"))
    i = sigmoid(gate("i"))
    o = sigmoid(gate("o"))
    cand = tanh(gate("c"))
    c = add(hadamard(f, prev.c), hadamard(i, cand))
    h = hadamard(o, tanh(c))
    return LstmState(c, h)


@dataclass
class MemoryRun:
    h: Tensor
    c: Tensor
    history: list[LstmState] = field(default_factory=list)


def run_memory(x_seq: Tensor, params: ParamStore, prefix: str = MEM) -> MemoryRun:
    """Fold the cell over axis -2 of ``x_seq`` (..., T, D) from a zero state.

    The input half of every gate projection is computed for all timesteps at
    once; only the recurrent half runs inside the loop. This is algebraically
    the same as :func:`lstm_step` on ``[x_t; h_{t-1}]``.
    """
    if x_seq.ndim < 2:
        raise DimensionError(f"expected (..., T, D) input, got {x_seq.shape}")
    T = x_seq.shape[-2]
    if T == 0:
        raise ValueError("memory needs at least one timestep")
    d, g = memory_dims(params, prefix)
    if x_seq.shape[-1] != d:
        raise DimensionError(f"memory expects input width {d}, got {x_seq.shape[-1]}")
    W = concat([params[f"{prefix}.W{n}"] for n in GATES], axis=1)
    b = concat([params[f"{prefix}.b{n}"] for n in GATES], axis=0)
    Wx = take(W, slice(0, d))
    Wh = take(W, slice(d, None))
    proj = bias_add(matmul(x_seq, Wx), b)

    batch = x_seq.shape[:-2]
    state = LstmState.zeros(g, batch)
    history = []
    for t, pre in enumerate(unstack(proj, axis=-2)):
        if t > 0:
            pre = add(pre, matmul(state.h, Wh))
        fio, cand = split(pre, [3 * g], axis=-1)
        f, i, o = split(sigmoid(fio), [g, 2 * g], axis=-1)
        cand = tanh(cand)
        c = hadamard(i, cand) if t == 0 else add(hadamard(f, state.c), hadamard(i, cand))
        h = hadamard(o, tanh(c))
        state = LstmState(c, h)
        history.append(state)
    return MemoryRun(state.h, state.c, history)
