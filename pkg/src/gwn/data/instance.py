from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class MultimodalInstance:
    """One exercise instance: M synchronised (T, d_m) streams plus labels.

    ``original_length`` counts the trailing rows that are real data; the
    leading ``T - original_length`` rows are zero pre-padding.
    """

    instance_id: str
    subject_id: str
    label: int
    modalities: list[np.ndarray]
    original_length: int = -1
    source_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.modalities = [np.asarray(x, dtype=np.float64) for x in self.modalities]
        if not self.modalities:
            raise ValueError(f"{self.instance_id}: no modalities")
        for x in self.modalities:
            if x.ndim != 2:
                raise ValueError(f"{self.instance_id}: modality arrays must be (T, d), got {x.shape}")
        lengths = {x.shape[0] for x in self.modalities}
        if len(lengths) != 1:
            raise ValueError(f"{self.instance_id}: modalities disagree on T: {sorted(lengths)}")
        if self.original_length < 0:
            self.original_length = self.length
        if self.original_length > self.length:
            raise ValueError(f"{self.instance_id}: original_length exceeds T")
        if not self.source_id:
            self.source_id = self.instance_id

    @property
    def length(self) -> int:
        return self.modalities[0].shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(x.shape[1] for x in self.modalities)

    @property
    def pad_length(self) -> int:
        return self.length - self.original_length

    def valid_mask(self) -> np.ndarray:
        mask = np.zeros(self.length, dtype=bool)
        mask[self.pad_length :] = True
        return mask

    def unpadded(self) -> list[np.ndarray]:
        return [x[self.pad_length :] for x in self.modalities]

    def with_modalities(self, modalities, **changes) -> "MultimodalInstance":
        return replace(self, modalities=list(modalities), meta=dict(self.meta), **changes)


def class_counts(instances, num_classes: int | None = None) -> dict[int, int]:
    counts: dict[int, int] = {}
    if num_classes is not None:
        counts = {c: 0 for c in range(num_classes)}
    for inst in instances:
        counts[inst.label] = counts.get(inst.label, 0) + 1
    return dict(sorted(counts.items()))
