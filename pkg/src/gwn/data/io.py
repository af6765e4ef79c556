"""Dataset manifest (JSON) plus one headerless CSV per instance per modality.

Manifest schema::

    {
      "format": "gwn-dataset-v1",
      "name": str,
      "modalities": [{"name": str, "dim": int, "sampling_rate": float,
                      "positional": bool}, ...],
      "label_scheme": {"name": str, "classes": [str, ...]},
      "instances": [{"instance_id": str, "subject_id": str, "label": int,
                     "original_length": int, "source_id": str,
                     "files": [relative path per modality]}, ...]
    }

CSV values are written with 17 significant digits so float64 round-trips exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .instance import MultimodalInstance

MANIFEST_FORMAT = "gwn-dataset-v1"
MANIFEST_NAME = "manifest.json"


class DatasetError(ValueError):
    """Invalid manifest, missing file, or data that contradicts the manifest."""


@dataclass
class ModalitySpec:
    name: str
    dim: int
    sampling_rate: float = 60.0
    positional: bool = False


@dataclass
class DatasetManifest:
    name: str
    modalities: list[ModalitySpec]
    classes: list[str]
    label_scheme: str = "pain_level"
    entries: list[dict] = field(default_factory=list)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.dim for m in self.modalities)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def positional_index(self) -> int | None:
        for i, m in enumerate(self.modalities):
            if m.positional:
                return i
        return None

    def to_json(self) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "name": self.name,
            "modalities": [
                {"name": m.name, "dim": m.dim, "sampling_rate": m.sampling_rate, "positional": m.positional}
                for m in self.modalities
            ],
            "label_scheme": {"name": self.label_scheme, "classes": list(self.classes)},
            "instances": self.entries,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "DatasetManifest":
        if raw.get("format") != MANIFEST_FORMAT:
            raise DatasetError(f"unsupported manifest format {raw.get('format')!r}")
        try:
            mods = [
                ModalitySpec(
                    str(m["name"]),
                    int(m["dim"]),
                    float(m.get("sampling_rate", 60.0)),
                    bool(m.get("positional", False)),
                )
                for m in raw["modalities"]
            ]
            scheme = raw["label_scheme"]
            entries = list(raw["instances"])
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"manifest missing field: {exc}") from exc
        for m in mods:
            if m.dim <= 0:
                raise DatasetError(f"modality {m.name!r} has non-positive dim {m.dim}")
        return cls(str(raw.get("name", "")), mods, list(scheme["classes"]), str(scheme.get("name", "")), entries)


def _write_csv(path: Path, x: np.ndarray) -> None:
    np.savetxt(path, x, delimiter=",", fmt="%.17g")


def _read_csv(path: Path, dim: int) -> np.ndarray:
    text = path.read_text()
    if not text.strip():
        return np.zeros((0, dim))
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)


def write_dataset(
    root: str | os.PathLike, manifest: DatasetManifest, instances: list[MultimodalInstance]
) -> Path:
    """Write CSVs and the manifest under ``root``; returns the manifest path."""
    root = Path(root)
    (root / "instances").mkdir(parents=True, exist_ok=True)
    entries = []
    for inst in sorted(instances, key=lambda i: i.instance_id):
        files = []
        for spec, x in zip(manifest.modalities, inst.modalities):
            rel = f"instances/{inst.instance_id}_{spec.name}.csv"
            _write_csv(root / rel, x)
            files.append(rel)
        entries.append(
            {
                "instance_id": inst.instance_id,
                "subject_id": inst.subject_id,
                "label": int(inst.label),
                "original_length": int(inst.original_length),
                "source_id": inst.source_id,
                "files": files,
            }
        )
    manifest.entries = entries
    path = root / MANIFEST_NAME
    path.write_text(json.dumps(manifest.to_json(), indent=1, sort_keys=True) + "\n")
    return path


def read_manifest(path: str | os.PathLike) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise DatasetError(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: {exc}") from exc
    return DatasetManifest.from_json(raw)


def load_dataset(path: str | os.PathLike) -> tuple[DatasetManifest, list[MultimodalInstance]]:
    """Load and validate every instance listed in a manifest, sorted by instance_id."""
    path = Path(path)
    manifest = read_manifest(path)
    root = path if path.is_dir() else path.parent
    instances = []
    for entry in manifest.entries:
        iid = str(entry.get("instance_id", ""))
        sid = str(entry.get("subject_id", ""))
        if not iid or not sid:
            raise DatasetError(f"instance entry lacks instance_id/subject_id: {entry}")
        label = entry.get("label")
        if not isinstance(label, int) or not 0 <= label < manifest.num_classes:
            raise DatasetError(f"{iid}: unknown label {label!r} for classes {manifest.classes}")
        files = entry.get("files", [])
        if len(files) != len(manifest.modalities):
            raise DatasetError(f"{iid}: {len(files)} files for {len(manifest.modalities)} modalities")
        mods = []
        for spec, rel in zip(manifest.modalities, files):
            fpath = root / rel
            if not fpath.exists():
                raise DatasetError(f"{iid}: missing file {fpath}")
            x = _read_csv(fpath, spec.dim)
            if x.shape[1] != spec.dim:
                raise DatasetError(
                    f"{iid}: modality {spec.name!r} has {x.shape[1]} columns, expected {spec.dim}"
                )
            mods.append(x)
        try:
            inst = MultimodalInstance(
                iid,
                sid,
                label,
                mods,
                int(entry.get("original_length", -1)),
                str(entry.get("source_id", "")),
            )
        except ValueError as exc:
            raise DatasetError(str(exc)) from exc
        instances.append(inst)
    instances.sort(key=lambda i: i.instance_id)
    return manifest, instances
