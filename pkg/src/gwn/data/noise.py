"""Gaussian noise injection into a single modality."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .instance import MultimodalInstance


def round_sig1(x: float) -> float:
    """Round to one significant figure (10.54 -> 10.0, 0.00123 -> 0.001)."""
    if x == 0 or not math.isfinite(x):
        return float(x)
    exp = math.floor(math.log10(abs(x)))
    return float(round(x, -exp))


def modality_std(instances: Sequence[MultimodalInstance], modality: int) -> float:
    """Population std of one modality pooled over all features and real timesteps."""
    if not instances:
        raise ValueError("no instances")
    vals = np.concatenate([i.unpadded()[modality].ravel() for i in instances])
    if vals.size == 0:
        raise ValueError("modality has no real timesteps")
    return float(vals.std())


def noise_sigma(std: float, fraction: float = 0.10) -> float:
    return round_sig1(fraction * std)


def inject_noise(
    instances: Sequence[MultimodalInstance],
    modality: int,
    fraction: float = 0.10,
    seed: int = 0,
    reference_std: float | None = None,
) -> tuple[list[MultimodalInstance], float]:
    """Add N(0, sigma²) to every real entry of ``modality``.

    sigma is ``fraction`` of the modality's pooled std, rounded to one
    significant figure. Pass ``reference_std`` to take the std from other data
    (e.g. the set before augmentation). Returns new instances and sigma.
    """
    if not instances:
        return [], 0.0
    n_mod = len(instances[0].modalities)
    if not 0 <= modality < n_mod:
        raise ValueError(f"modality {modality} out of range for {n_mod} modalities")
    std = modality_std(instances, modality) if reference_std is None else float(reference_std)
    if std == 0:
        raise ValueError(f"modality {modality} has zero variance; noise level undefined")
    sigma = noise_sigma(std, fraction)
    if sigma == 0:
        return [i.with_modalities([x.copy() for x in i.modalities]) for i in instances], 0.0
    rng = np.random.default_rng(seed)
    out = []
    for inst in instances:
        mods = [x.copy() for x in inst.modalities]
        pad = inst.pad_length
        target = mods[modality]
        target[pad:] += rng.normal(0.0, sigma, size=target[pad:].shape)
        out.append(inst.with_modalities(mods))
    return out, sigma
