"""Named parameter collections and their checkpoint file format.

Checkpoint layout::

    8 bytes   little-endian uint64: length N of the JSON header
    N bytes   UTF-8 JSON {"format": ..., "entries": [{"name", "shape", "trainable"}, ...]}
    rest      float64 little-endian payload, entries concatenated in header order
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import Iterator

import numpy as np

from .tensor import Tensor

CHECKPOINT_FORMAT = "gwn-params-v1"


class ParamStore:
    """Ordered mapping from hierarchical names to parameter tensors.

    Insertion order is iteration order. Each entry is trainable or frozen;
    frozen entries still take part in the forward pass but receive no
    gradient and are skipped by the optimiser.
    """

    def __init__(self):
        self._tensors: dict[str, Tensor] = {}
        self._trainable: dict[str, bool] = {}

    def add(self, name: str, value, trainable: bool = True) -> Tensor:
        if name in self._tensors:
            raise KeyError(f"duplicate parameter name {name!r}")
        t = Tensor(value, requires_grad=trainable, name=name)
        self._tensors[name] = t
        self._trainable[name] = trainable
        return t

    def set(self, name: str, value) -> None:
        """Replace the value of an existing entry (tensors themselves are immutable)."""
        if name not in self._tensors:
            raise KeyError(name)
        old = self._tensors[name]
        arr = np.asarray(value, dtype=np.float64)
        if arr.shape != old.shape:
            raise ValueError(f"{name}: shape {arr.shape} != {old.shape}")
        self._tensors[name] = Tensor(arr, requires_grad=self._trainable[name], name=name)

    def freeze(self, prefix: str = "") -> None:
        self._set_flag(prefix, False)

    def unfreeze(self, prefix: str = "") -> None:
        self._set_flag(prefix, True)

    def _set_flag(self, prefix: str, flag: bool) -> None:
        for name in self._tensors:
            if name.startswith(prefix):
                self._trainable[name] = flag
                self._tensors[name].requires_grad = flag

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self):
        return list(self._tensors.items())

    def trainable_items(self):
        return [(n, t) for n, t in self._tensors.items() if self._trainable[n]]

    def is_trainable(self, name: str) -> bool:
        return self._trainable[name]

    def subset(self, prefix: str) -> "ParamStore":
        """Entries under ``prefix``; the tensors are shared, not copied."""
        out = ParamStore()
        for name, t in self._tensors.items():
            if name.startswith(prefix):
                out._tensors[name] = t
                out._trainable[name] = self._trainable[name]
        return out

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for name, t in self._tensors.items():
            out.add(name, t.data, self._trainable[name])
        return out

    def update_from(self, other: "ParamStore", prefix: str = "") -> None:
        """Copy values for every name present in both stores (optionally under a prefix)."""
        for name in other:
            if name.startswith(prefix) and name in self._tensors:
                self.set(name, other[name].data)

    def num_values(self) -> int:
        return sum(t.data.size for t in self._tensors.values())

    def equals(self, other: "ParamStore") -> bool:
        """Bitwise equality of names, flags and values."""
        if self.names() != other.names():
            return False
        return all(
            self._trainable[n] == other._trainable[n]
            and self[n].shape == other[n].shape
            and self[n].data.tobytes() == other[n].data.tobytes()
            for n in self
        )

    # -- serialisation -----------------------------------------------------

    def to_bytes(self) -> bytes:
        header = {
            "format": CHECKPOINT_FORMAT,
            "entries": [
                {"name": n, "shape": list(t.shape), "trainable": self._trainable[n]}
                for n, t in self._tensors.items()
            ],
        }
        head = json.dumps(header, sort_keys=True).encode("utf-8")
        payload = b"".join(
            np.ascontiguousarray(t.data, dtype="<f8").tobytes() for t in self._tensors.values()
        )
        return struct.pack("<Q", len(head)) + head + payload

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ParamStore":
        if len(raw) < 8:
            raise ValueError("checkpoint truncated before header length")
        (n,) = struct.unpack("<Q", raw[:8])
        header = json.loads(raw[8 : 8 + n].decode("utf-8"))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"unknown checkpoint format {header.get('format')!r}")
        store = cls()
        offset = 8 + n
        for entry in header["entries"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape, dtype=np.int64))
            end = offset + 8 * count
            if end > len(raw):
                raise ValueError(f"checkpoint payload truncated at {entry['name']!r}")
            arr = np.frombuffer(raw[offset:end], dtype="<f8").reshape(shape)
            store.add(entry["name"], arr, bool(entry["trainable"]))
            offset = end
        if offset != len(raw):
            raise ValueError("trailing bytes after checkpoint payload")
        return store

    def save(self, path: str | os.PathLike) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(self.to_bytes())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ParamStore":
        return cls.from_bytes(Path(path).read_bytes())
