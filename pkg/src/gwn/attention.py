"""Cross-modality multi-head self-attention, one transformer encoder layer.

At each timestep the M×H matrix of mapped modalities attends to itself; the
rows are modalities, so the M×M score matrices say how much each modality
draws on every other one. Parameters are shared over time. All functions
accept arbitrary leading batch axes, so a whole (B, T, M, H) block is
processed in one call.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DimensionError,
    ParamStore,
    Tensor,
    bias_add,
    concat,
    layer_norm,
    matmul,
    relu,
    scale,
    softmax_rows,
    stack,
    swap_last,
)
from .core.tensor import add, glorot_limit

ATT = "attention"


def init_attention(
    store: ParamStore,
    hidden: int,
    heads: int,
    ffn: int,
    rng: np.random.Generator,
    prefix: str = ATT,
) -> None:
    if heads < 1:
        raise ValueError("need at least one attention head")

    def glorot(a, b):
        lim = glorot_limit(a, b)
        return rng.uniform(-lim, lim, size=(a, b))

    for k in range(heads):
        for w in ("WQ", "WK", "WV"):
            store.add(f"{prefix}.head{k}.{w}", glorot(hidden, hidden))
    store.add(f"{prefix}.WO", glorot(heads * hidden, hidden))
    store.add(f"{prefix}.ffn.W1", glorot(hidden, ffn))
    store.add(f"{prefix}.ffn.b1", np.zeros(ffn))
    store.add(f"{prefix}.ffn.W2", glorot(ffn, hidden))
    store.add(f"{prefix}.ffn.b2", np.zeros(hidden))
    for ln in ("ln1", "ln2"):
        store.add(f"{prefix}.{ln}.gain", np.ones(hidden))
        store.add(f"{prefix}.{ln}.bias", np.zeros(hidden))


def num_heads(params: ParamStore, prefix: str = ATT) -> int:
    k = 0
    while f"{prefix}.head{k}.WQ" in params:
        k += 1
    return k


def scaled_attention(Q: Tensor, K: Tensor, V: Tensor) -> tuple[Tensor, Tensor]:
    """softmax(Q Kᵀ / √H) V, returning the context and the score matrix."""
    if Q.shape != K.shape or Q.shape != V.shape:
        raise DimensionError(f"Q {Q.shape}, K {K.shape}, V {V.shape} must match")
    h = Q.shape[-1]
    scores = softmax_rows(scale(matmul(Q, swap_last(K)), 1.0 / math.sqrt(h)))
    return matmul(scores, V), scores


def multi_head(X: Tensor, params: ParamStore, prefix: str = ATT) -> tuple[Tensor, list[Tensor]]:
    """Concatenate per-head contexts along features and project by WO."""
    contexts, scores = [], []
    for k in range(num_heads(params, prefix)):
        Q = matmul(X, params[f"{prefix}.head{k}.WQ"])
        K = matmul(X, params[f"{prefix}.head{k}.WK"])
        V = matmul(X, params[f"{prefix}.head{k}.WV"])
        ctx, a = scaled_attention(Q, K, V)
        contexts.append(ctx)
        scores.append(a)
    joined = contexts[0] if len(contexts) == 1 else concat(contexts, axis=-1)
    return matmul(joined, params[f"{prefix}.WO"]), scores


def ffn(Z: Tensor, params: ParamStore, prefix: str = ATT) -> Tensor:
    h = relu(bias_add(matmul(Z, params[f"{prefix}.ffn.W1"]), params[f"{prefix}.ffn.b1"]))
    return bias_add(matmul(h, params[f"{prefix}.ffn.W2"]), params[f"{prefix}.ffn.b2"])


def attention_forward(
    X_map: Tensor, params: ParamStore, prefix: str = ATT
) -> tuple[Tensor, list[Tensor]]:
    """Multi-head attention, residual + layer norm, FFN, residual + layer norm.

    Returns the (..., M, H) output and the K score tensors (..., M, M).
    """
    hidden = params[f"{prefix}.head0.WQ"].shape[0]
    if X_map.ndim < 2 or X_map.shape[-1] != hidden:
        raise DimensionError(f"attention expects (..., M, {hidden}), got {X_map.shape}")
    C, scores = multi_head(X_map, params, prefix)
    Z = layer_norm(add(C, X_map), params[f"{prefix}.ln1.gain"], params[f"{prefix}.ln1.bias"])
    out = layer_norm(
        add(ffn(Z, params, prefix), Z), params[f"{prefix}.ln2.gain"], params[f"{prefix}.ln2.bias"]
    )
    return out, scores


@dataclass
class AttentionTrace:
    """Score matrices of one instance: ``scores[t, k]`` is the M×M matrix of head k."""

    scores: np.ndarray  # (T, K, M, M)
    valid: np.ndarray  # (T,) bool, False on pre-padded steps
    instance_id: str = ""

    @property
    def length(self) -> int:
        return self.scores.shape[0]

    @property
    def heads(self) -> int:
        return self.scores.shape[1]

    @property
    def modalities(self) -> int:
        return self.scores.shape[2]

    def __len__(self) -> int:
        return self.scores.shape[0] * self.scores.shape[1]


def run_attention_sequence(
    X_seq: Tensor | Sequence[Tensor],
    params: ParamStore,
    valid: np.ndarray | None = None,
    prefix: str = ATT,
    instance_id: str = "",
) -> tuple[Tensor, AttentionTrace]:
    """Apply the attention layer independently at every timestep of a (T, M, H) sequence."""
    if not isinstance(X_seq, Tensor):
        X_seq = stack(list(X_seq), axis=0)
    if X_seq.ndim != 3:
        raise DimensionError(f"expected a (T, M, H) sequence, got {X_seq.shape}")
    out, scores = attention_forward(X_seq, params, prefix)
    arr = np.stack([s.data for s in scores], axis=1)
    mask = np.ones(arr.shape[0], dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    return out, AttentionTrace(arr, mask, instance_id)


TRACE_COLUMNS = ["instance_id", "t", "head", "row_modality", "col_modality", "score", "valid"]


def write_traces_csv(path, traces: Sequence[AttentionTrace]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for tr in traces:
            T, K, M, _ = tr.scores.shape
            for t in range(T):
                v = int(bool(tr.valid[t]))
                for k in range(K):
                    for i in range(M):
                        for j in range(M):
                            w.writerow([tr.instance_id, t, k, i, j, repr(float(tr.scores[t, k, i, j])), v])


def read_traces_csv(path) -> list[AttentionTrace]:
    rows: dict[str, list[tuple[int, int, int, int, float, int]]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rows.setdefault(r["instance_id"], []).append(
                (
                    int(r["t"]),
                    int(r["head"]),
                    int(r["row_modality"]),
                    int(r["col_modality"]),
                    float(r["score"]),
                    int(r["valid"]),
                )
            )
    traces = []
    for iid, recs in rows.items():
        T = max(r[0] for r in recs) + 1
        K = max(r[1] for r in recs) + 1
        M = max(r[2] for r in recs) + 1
        scores = np.zeros((T, K, M, M))
        valid = np.zeros(T, dtype=bool)
        for t, k, i, j, s, v in recs:
            scores[t, k, i, j] = s
            valid[t] = bool(v)
        traces.append(AttentionTrace(scores, valid, iid))
    return traces
