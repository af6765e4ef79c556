"""Per-modality autoencoders into a shared feature space.

Each modality m has an encoder ``relu(x W1 + b1) W2 + b2`` from d_m to H and
a decoder of the same form from H back to d_m. Encoders are summed into one
code ``c`` and every decoder reconstructs its modality from that fused code.
Parameter names: ``{prefix}.enc{m}.W1`` ... ``{prefix}.dec{m}.b2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    AdamState,
    DimensionError,
    ParamStore,
    Tape,
    Tensor,
    adam_step,
    backward,
    bias_add,
    matmul,
    relu,
    scale,
    stack,
    sub,
    sum_squares,
)
from .core.tensor import add, glorot_limit

log = logging.getLogger(__name__)

ENC = "mapping"


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    lim = glorot_limit(fan_in, fan_out)
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def init_encoders(
    store: ParamStore,
    dims: Sequence[int],
    hidden: int,
    enc_hidden: int,
    rng: np.random.Generator,
    prefix: str = ENC,
) -> None:
    for m, d in enumerate(dims):
        store.add(f"{prefix}.enc{m}.W1", _glorot(rng, d, enc_hidden))
        store.add(f"{prefix}.enc{m}.b1", np.zeros(enc_hidden))
        store.add(f"{prefix}.enc{m}.W2", _glorot(rng, enc_hidden, hidden))
        store.add(f"{prefix}.enc{m}.b2", np.zeros(hidden))


def init_decoders(
    store: ParamStore,
    dims: Sequence[int],
    hidden: int,
    enc_hidden: int,
    rng: np.random.Generator,
    prefix: str = ENC,
) -> None:
    for m, d in enumerate(dims):
        store.add(f"{prefix}.dec{m}.W1", _glorot(rng, hidden, enc_hidden))
        store.add(f"{prefix}.dec{m}.b1", np.zeros(enc_hidden))
        store.add(f"{prefix}.dec{m}.W2", _glorot(rng, enc_hidden, d))
        store.add(f"{prefix}.dec{m}.b2", np.zeros(d))


def num_modalities(params: ParamStore, prefix: str = ENC) -> int:
    m = 0
    while f"{prefix}.enc{m}.W1" in params:
        m += 1
    return m


def _two_layer(params: ParamStore, stem: str, x: Tensor) -> Tensor:
    h = relu(bias_add(matmul(x, params[f"{stem}.W1"]), params[f"{stem}.b1"]))
    return bias_add(matmul(h, params[f"{stem}.W2"]), params[f"{stem}.b2"])


def encode_modality(params: ParamStore, m: int, x: Tensor, prefix: str = ENC) -> Tensor:
    """Map ``x`` (..., d_m) to the common space (..., H)."""
    stem = f"{prefix}.enc{m}"
    d = params[f"{stem}.W1"].shape[0]
    if x.shape[-1] != d:
        raise DimensionError(f"modality {m} expects {d} features, got {x.shape[-1]}")
    return _two_layer(params, stem, x)


def decode_modality(params: ParamStore, m: int, c: Tensor, prefix: str = ENC) -> Tensor:
    stem = f"{prefix}.dec{m}"
    h = params[f"{stem}.W1"].shape[0]
    if c.shape[-1] != h:
        raise DimensionError(f"decoder {m} expects a code of width {h}, got {c.shape[-1]}")
    return _two_layer(params, stem, c)


def fuse_common(encodings: Sequence[Tensor]) -> Tensor:
    """Elementwise sum of per-modality codes."""
    if not encodings:
        raise DimensionError("fuse_common needs at least one encoding")
    out = encodings[0]
    for e in encodings[1:]:
        out = add(out, e)
    return out


def stack_mapped(encodings: Sequence[Tensor]) -> Tensor:
    """Stack M codes of shape (..., H) into (..., M, H), row m = modality m."""
    return stack(encodings, axis=-2)


def reconstruction_loss(xs: Sequence[Tensor], xhats: Sequence[Tensor]) -> Tensor:
    """Sum over modalities of squared reconstruction error, averaged over rows.

    Inputs are (N, d_m) per modality or (d_m,) for a single timestep.
    """
    if len(xs) != len(xhats):
        raise DimensionError(f"{len(xs)} inputs but {len(xhats)} reconstructions")
    total = None
    for x, xh in zip(xs, xhats):
        if x.shape != xh.shape:
            raise DimensionError(f"reconstruction shape {xh.shape} != input {x.shape}")
        term = sum_squares(sub(xh, x))
        total = term if total is None else add(total, term)
    n = xs[0].shape[0] if xs[0].ndim > 1 else 1
    return scale(total, 1.0 / n)


def autoencode(params: ParamStore, xs: Sequence[Tensor], prefix: str = ENC) -> list[Tensor]:
    c = fuse_common([encode_modality(params, m, x, prefix) for m, x in enumerate(xs)])
    return [decode_modality(params, m, c, prefix) for m in range(len(xs))]


def pooled_timesteps(instances) -> list[np.ndarray]:
    """Stack every non-padded timestep of every instance, one matrix per modality."""
    if not instances:
        raise ValueError("pre-training needs a non-empty dataset")
    n_mod = len(instances[0].modalities)
    pools: list[list[np.ndarray]] = [[] for _ in range(n_mod)]
    for inst in instances:
        if len(inst.modalities) != n_mod:
            raise DimensionError(f"instance {inst.instance_id} has a different modality count")
        T = inst.length
        for m, x in enumerate(inst.modalities):
            pools[m].append(x[T - inst.original_length :])
    return [np.concatenate(p, axis=0) for p in pools]


@dataclass
class PretrainResult:
    params: ParamStore
    losses: list[float] = field(default_factory=list)

    def encoders(self, prefix: str = ENC) -> ParamStore:
        out = ParamStore()
        for name, t in self.params.items():
            if name.startswith(f"{prefix}.enc"):
                out.add(name, t.data)
        return out


def pretrain_autoencoders(
    instances,
    epochs: int = 100,
    lr: float = 1e-3,
    hidden: int = 32,
    enc_hidden: int = 64,
    seed: int = 0,
    batch_size: int | None = 256,
    init: ParamStore | None = None,
) -> PretrainResult:
    """Jointly fit all modality autoencoders on pooled timesteps with Adam.

    ``losses[0]`` is the loss before training and ``losses[e]`` the full-pool
    loss after epoch e. ``batch_size=None`` means full-batch steps.
    """
    pools = pooled_timesteps(instances)
    n = pools[0].shape[0]
    if n == 0:
        raise ValueError("pre-training pool is empty after removing padding")
    rng = np.random.default_rng(seed)
    if init is None:
        params = ParamStore()
        dims = [p.shape[1] for p in pools]
        init_encoders(params, dims, hidden, enc_hidden, rng)
        init_decoders(params, dims, hidden, enc_hidden, rng)
    else:
        params = init.copy()

    def full_loss() -> float:
        xs = [Tensor(p) for p in pools]
        return reconstruction_loss(xs, autoencode(params, xs)).item()

    losses = [full_loss()]
    state = AdamState(lr=lr)
    bs = n if batch_size is None else min(batch_size, n)
    for epoch in range(epochs):
        order = rng.permutation(n) if bs < n else np.arange(n)
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            xs = [Tensor(p[idx]) for p in pools]
            with Tape(params) as tape:
                loss = reconstruction_loss(xs, autoencode(params, xs))
            adam_step(params, backward(tape, loss), state)
        losses.append(full_loss())
        log.debug("pretrain epoch %d loss %.6g", epoch + 1, losses[-1])
    return PretrainResult(params, losses)
