"""Downsampling, zero pre-padding, minority oversampling and rotation augmentation."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .instance import MultimodalInstance, class_counts


def downsample(inst: MultimodalInstance, factor: int) -> MultimodalInstance:
    """Keep every ``factor``-th real timestep, starting at the first one.

    Decimation runs on the unpadded region only. A padded input is re-padded
    to ``ceil(T / factor)`` so downsampling commutes with pre-padding.
    """
    if int(factor) != factor or factor <= 0:
        raise ValueError(f"downsampling factor must be a positive integer, got {factor}")
    if factor == 1:
        return inst.with_modalities([x.copy() for x in inst.modalities])
    real = [x[::factor] for x in inst.unpadded()]
    out = inst.with_modalities(real, original_length=real[0].shape[0])
    if inst.pad_length:
        out = pre_pad(out, math.ceil(inst.length / factor))
    return out


def pre_pad(inst: MultimodalInstance, target: int) -> MultimodalInstance:
    """Prepend all-zero timesteps so every modality has ``target`` rows."""
    T = inst.length
    if T > target:
        raise ValueError(f"{inst.instance_id}: length {T} exceeds padding target {target}")
    pad = target - T
    mods = [np.concatenate([np.zeros((pad, x.shape[1])), x], axis=0) for x in inst.modalities]
    return inst.with_modalities(mods, original_length=inst.original_length)


def pad_all(instances: Sequence[MultimodalInstance], target: int | None = None) -> list[MultimodalInstance]:
    """Pre-pad every instance to ``target`` (default: the longest instance)."""
    if target is None:
        target = max(i.length for i in instances)
    return [pre_pad(i, target) for i in instances]


def oversample_minority(
    instances: Sequence[MultimodalInstance], seed: int, num_classes: int | None = None
) -> list[MultimodalInstance]:
    """Duplicate random minority-class instances until every class matches the majority.

    Copies keep their subject and source ids and get ids ``<id>#os<n>``.
    """
    counts = class_counts(instances, num_classes)
    empty = [c for c, n in counts.items() if n == 0]
    if empty:
        raise ValueError(f"cannot oversample: no instances for class(es) {empty}")
    out = list(instances)
    if not counts:
        return out
    target = max(counts.values())
    rng = np.random.default_rng(seed)
    for c, n in counts.items():
        members = [i for i in instances if i.label == c]
        for k, j in enumerate(rng.integers(0, n, size=target - n)):
            src = members[int(j)]
            out.append(
                src.with_modalities(
                    [x.copy() for x in src.modalities], instance_id=f"{src.instance_id}#os{k}"
                )
            )
    return out


_EXACT = {0: (1.0, 0.0), 90: (0.0, 1.0), 180: (-1.0, 0.0), 270: (0.0, -1.0)}


def _cos_sin(deg: float) -> tuple[float, float]:
    key = deg % 360
    if key in _EXACT:
        return _EXACT[key]
    rad = math.radians(deg)
    return math.cos(rad), math.sin(rad)


def rotate_y(x: np.ndarray, deg: float) -> np.ndarray:
    """Rotate every consecutive (x, y, z) triplet of the feature axis about y."""
    if x.shape[-1] % 3:
        raise ValueError(f"positional modality width {x.shape[-1]} is not a multiple of 3")
    c, s = _cos_sin(deg)
    p = x.reshape(x.shape[:-1] + (-1, 3))
    out = np.empty_like(p)
    out[..., 0] = p[..., 0] * c + p[..., 2] * s
    out[..., 1] = p[..., 1]
    out[..., 2] = -p[..., 0] * s + p[..., 2] * c
    return out.reshape(x.shape)


def rotate_augment(
    instances: Iterable[MultimodalInstance],
    angles: Sequence[float] = (0, 90, 180, 270),
    positional: int = 0,
) -> list[MultimodalInstance]:
    """One copy per angle; only the positional modality is rotated.

    The 0° copy is an exact copy. Copies get ids ``<id>#rot<angle>``.
    """
    out = []
    for inst in instances:
        if inst.modalities[positional].shape[1] % 3:
            raise ValueError(
                f"{inst.instance_id}: positional modality width "
                f"{inst.modalities[positional].shape[1]} is not a multiple of 3"
            )
        for deg in angles:
            mods = [x.copy() for x in inst.modalities]
            if deg % 360:
                mods[positional] = rotate_y(inst.modalities[positional], deg)
            out.append(inst.with_modalities(mods, instance_id=f"{inst.instance_id}#rot{deg:g}"))
    return out
