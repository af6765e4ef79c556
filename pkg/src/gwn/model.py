"""Full GWN (mapping -> attention -> memory -> head) and the concatenation baseline."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .attention import AttentionTrace, attention_forward, init_attention
from .core import (
    AdamState,
    DimensionError,
    ParamStore,
    Tape,
    Tensor,
    adam_step,
    backward,
    bias_add,
    cross_entropy,
    matmul,
    relu,
    reshape,
    softmax_rows,
)
from .core.tensor import glorot_limit
from .mapping import ENC, encode_modality, init_encoders, stack_mapped
from .memory import init_memory, run_memory

log = logging.getLogger(__name__)

HEAD = "head"
KINDS = ("gwn", "concatn")


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 200
    seed: int = 0
    hidden: int = 32  # H, common feature space
    heads: int = 4  # K
    memory: int = 64  # G
    ffn: int = 64  # F
    pred_hidden: int = 64  # P
    enc_hidden: int = 64
    patience: int = 20
    min_delta: float = 1e-4
    freeze_encoders: bool = False

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("freeze_encoders", "seed", "min_delta"):
                continue
            if f.name == "epochs":
                if v < 0:
                    raise ValueError("epochs must be >= 0")
            elif not v > 0:
                raise ValueError(f"{f.name} must be positive, got {v}")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown train config field(s): {sorted(unknown)}")
        return cls(**d)


@dataclass
class Model:
    kind: str
    dims: tuple[int, ...]
    num_classes: int
    params: ParamStore
    config: TrainConfig = field(default_factory=TrainConfig)

    @property
    def num_modalities(self) -> int:
        return len(self.dims)

    def save(self, stem: str | os.PathLike) -> None:
        """Write ``<stem>.ckpt`` (parameters) and ``<stem>.json`` (architecture)."""
        stem = Path(stem)
        self.params.save(stem.with_suffix(".ckpt"))
        meta = {
            "kind": self.kind,
            "dims": list(self.dims),
            "num_classes": self.num_classes,
            "config": asdict(self.config),
        }
        tmp = stem.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
        os.replace(tmp, stem.with_suffix(".json"))

    @classmethod
    def load(cls, stem: str | os.PathLike) -> "Model":
        stem = Path(stem)
        if stem.suffix in (".ckpt", ".json"):
            stem = stem.with_suffix("")
        meta = json.loads(stem.with_suffix(".json").read_text())
        params = ParamStore.load(stem.with_suffix(".ckpt"))
        return cls(
            meta["kind"],
            tuple(meta["dims"]),
            int(meta["num_classes"]),
            params,
            TrainConfig.from_dict(meta["config"]),
        )


def _init_head(store: ParamStore, mem: int, hidden: int, classes: int, rng) -> None:
    for name, (a, b) in (("W1", (mem, hidden)), ("W2", (hidden, classes))):
        lim = glorot_limit(a, b)
        store.add(f"{HEAD}.{name}", rng.uniform(-lim, lim, size=(a, b)))
        store.add(f"{HEAD}.b{name[1]}", np.zeros(b))


def build_model(kind: str, dims: Sequence[int], num_classes: int, config: TrainConfig) -> Model:
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    if num_classes < 2:
        raise ValueError("need at least two classes")
    rng = np.random.default_rng(config.seed)
    store = ParamStore()
    dims = tuple(int(d) for d in dims)
    if kind == "gwn":
        init_encoders(store, dims, config.hidden, config.enc_hidden, rng)
        init_attention(store, config.hidden, config.heads, config.ffn, rng)
        init_memory(store, len(dims) * config.hidden, config.memory, rng)
    else:
        init_memory(store, sum(dims), config.memory, rng)
    _init_head(store, config.memory, config.pred_hidden, num_classes, rng)
    return Model(kind, dims, num_classes, store, config)


def load_encoders(model: Model, encoders: ParamStore, freeze: bool = False) -> None:
    """Initialise the mapping block from pre-trained encoder parameters."""
    if model.kind != "gwn":
        raise ValueError("only the GWN has a mapping block")
    names = [n for n in encoders if n.startswith(f"{ENC}.enc")]
    if not names:
        raise ValueError("no encoder parameters in the given store")
    for name in names:
        if name not in model.params:
            raise KeyError(f"pre-trained parameter {name!r} has no counterpart in the model")
        if encoders[name].shape != model.params[name].shape:
            raise DimensionError(
                f"{name}: pre-trained shape {encoders[name].shape} != model shape {model.params[name].shape}"
            )
        model.params.set(name, encoders[name].data)
    if freeze:
        model.params.freeze(f"{ENC}.enc")


# -- forward ---------------------------------------------------------------


def head_logits(params: ParamStore, h: Tensor) -> Tensor:
    z = relu(bias_add(matmul(h, params[f"{HEAD}.W1"]), params[f"{HEAD}.b1"]))
    return bias_add(matmul(z, params[f"{HEAD}.W2"]), params[f"{HEAD}.b2"])


def _check_batch(model: Model, xs: Sequence[np.ndarray]) -> None:
    if len(xs) != model.num_modalities:
        raise DimensionError(f"model has {model.num_modalities} modalities, input has {len(xs)}")
    for m, (x, d) in enumerate(zip(xs, model.dims)):
        if x.shape[-1] != d:
            raise DimensionError(f"modality {m}: model expects {d} features, got {x.shape[-1]}")
    if xs[0].shape[-2] == 0:
        raise ValueError("empty sequence")


@dataclass
class ForwardResult:
    logits: Tensor  # (B, L)
    scores: list[Tensor] | None  # K tensors of (B, T, M, M); GWN only
    history: list | None = None


def forward_batch(model: Model, xs: Sequence[np.ndarray], keep_history: bool = False) -> ForwardResult:
    """Run a batch given per-modality arrays of shape (B, T, d_m)."""
    _check_batch(model, xs)
    p = model.params
    scores = None
    if model.kind == "gwn":
        mapped = [encode_modality(p, m, Tensor(x)) for m, x in enumerate(xs)]
        X_map = stack_mapped(mapped)  # (B, T, M, H)
        X_att, scores = attention_forward(X_map, p)
        B, T, M, H = X_att.shape
        seq = reshape(X_att, (B, T, M * H))
    else:
        seq = Tensor(np.concatenate(xs, axis=-1))
    run = run_memory(seq, p)
    logits = head_logits(p, run.h)
    return ForwardResult(logits, scores, run.history if keep_history else None)


def _stack_instances(instances) -> list[np.ndarray]:
    lengths = {i.length for i in instances}
    if len(lengths) != 1:
        raise DimensionError(f"batch mixes sequence lengths {sorted(lengths)}; pre-pad first")
    n_mod = len(instances[0].modalities)
    return [np.stack([i.modalities[m] for i in instances]) for m in range(n_mod)]


def _traces(res: ForwardResult, instances) -> list[AttentionTrace]:
    arr = np.stack([s.data for s in res.scores], axis=2)  # (B, T, K, M, M)
    return [
        AttentionTrace(arr[b].copy(), inst.valid_mask(), inst.instance_id)
        for b, inst in enumerate(instances)
    ]


def gwn_forward(instance, model: Model) -> tuple[np.ndarray, AttentionTrace]:
    """Class distribution and attention trace for one instance."""
    if model.kind != "gwn":
        raise ValueError("gwn_forward needs a GWN model")
    res = forward_batch(model, [x[None] for x in instance.modalities])
    return softmax_rows(res.logits).data[0], _traces(res, [instance])[0]


def concatn_forward(instance, model: Model) -> np.ndarray:
    if model.kind != "concatn":
        raise ValueError("concatn_forward needs a CONCATN model")
    res = forward_batch(model, [x[None] for x in instance.modalities])
    return softmax_rows(res.logits).data[0]


def predict_at(model: Model, instance, t: int) -> np.ndarray:
    """Apply the prediction head to the memory output after timestep ``t`` (1-based)."""
    res = forward_batch(model, [x[None] for x in instance.modalities], keep_history=True)
    if not 1 <= t <= len(res.history):
        raise IndexError(f"timestep {t} outside 1..{len(res.history)}")
    return softmax_rows(head_logits(model.params, res.history[t - 1].h)).data[0]


@dataclass
class Predictions:
    instance_ids: list[str]
    labels: np.ndarray
    probs: np.ndarray
    traces: list[AttentionTrace] | None

    def __len__(self) -> int:
        return len(self.labels)


def predict_batch(model: Model, instances, batch_size: int = 256) -> Predictions:
    """Argmax labels (ties -> lowest index), probabilities and traces (GWN only)."""
    instances = list(instances)
    order: dict[int, list[int]] = {}
    for idx, inst in enumerate(instances):
        order.setdefault(inst.length, []).append(idx)
    probs = np.zeros((len(instances), model.num_classes))
    traces: list[AttentionTrace | None] = [None] * len(instances)
    for _, idxs in sorted(order.items()):
        for s in range(0, len(idxs), batch_size):
            chunk = idxs[s : s + batch_size]
            batch = [instances[i] for i in chunk]
            res = forward_batch(model, _stack_instances(batch))
            probs[chunk] = softmax_rows(res.logits).data
            if res.scores is not None:
                for i, tr in zip(chunk, _traces(res, batch)):
                    traces[i] = tr
    labels = probs.argmax(axis=1)  # first maximum wins
    return Predictions(
        [i.instance_id for i in instances],
        labels,
        probs,
        traces if model.kind == "gwn" else None,
    )


# -- training --------------------------------------------------------------


@dataclass
class TrainResult:
    model: Model
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    stopped_epoch: int = 0


def batch_loss(model: Model, batch) -> tuple[Tensor, Tensor]:
    res = forward_batch(model, _stack_instances(batch))
    return cross_entropy(res.logits, [i.label for i in batch]), res.logits


def train(
    kind: str,
    dataset,
    config: TrainConfig,
    num_classes: int | None = None,
    encoders: ParamStore | None = None,
) -> TrainResult:
    """Mini-batch Adam on cross-entropy with seeded shuffling.

    Stops after ``config.epochs`` or once the epoch loss has not improved by
    ``min_delta`` for ``patience`` epochs. Returns the final parameters and
    per-epoch mean loss / in-flight accuracy.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    labels = np.array([i.label for i in dataset])
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValueError(f"label outside 0..{num_classes - 1}")
    model = build_model(kind, dataset[0].dims, num_classes, config)
    if encoders is not None and kind == "gwn":
        load_encoders(model, encoders, config.freeze_encoders)
    _stack_instances(dataset[:1] + dataset[-1:])  # fail early on ragged lengths

    shuffle = np.random.default_rng([config.seed, 1])
    state = AdamState(lr=config.lr)
    result = TrainResult(model)
    best = np.inf
    stale = 0
    n = len(dataset)
    for epoch in range(config.epochs):
        order = shuffle.permutation(n)
        total, correct = 0.0, 0
        for s in range(0, n, config.batch_size):
            batch = [dataset[i] for i in order[s : s + config.batch_size]]
            with Tape(model.params) as tape:
                loss, logits = batch_loss(model, batch)
            adam_step(model.params, backward(tape, loss), state)
            total += loss.item() * len(batch)
            correct += int((logits.data.argmax(axis=1) == [i.label for i in batch]).sum())
        epoch_loss = total / n
        result.loss.append(epoch_loss)
        result.accuracy.append(correct / n)
        result.stopped_epoch = epoch + 1
        log.debug("%s epoch %d loss %.5f acc %.3f", kind, epoch + 1, epoch_loss, correct / n)
        if epoch_loss < best - config.min_delta:
            best = epoch_loss
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return result
