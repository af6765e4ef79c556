"""Confusion matrices, accuracy, multiclass MCC and per-class / macro F1."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (L, L) ints; rows = true class, cols = predicted

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(true: Sequence[int], pred: Sequence[int], num_classes: int) -> ConfusionMatrix:
    true = np.asarray(true, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if true.shape != pred.shape:
        raise ValueError(f"{true.size} true labels but {pred.size} predictions")
    for name, arr in (("true", true), ("predicted", pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
            raise ValueError(f"{name} label outside 0..{num_classes - 1}")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (true, pred), 1)
    return ConfusionMatrix(counts)


@dataclass
class Metrics:
    acc: float
    mcc: float
    f1: list[float]
    f1_avg: float
    mcc_degenerate: bool = False

    def row(self) -> dict:
        out = {"acc": self.acc, "mcc": self.mcc}
        for k, v in enumerate(self.f1):
            out[f"f1_{k}"] = v
        out["f1_avg"] = self.f1_avg
        return out


def mcc_from_counts(counts: np.ndarray) -> tuple[float, bool]:
    """Multiclass MCC in covariance form; returns (value, degenerate).

    Exact integer arithmetic up to the final division. A zero factor under the
    square root gives 0 with ``degenerate=True``.
    """
    c = [[int(v) for v in row] for row in counts]
    L = len(c)
    s = sum(map(sum, c))
    correct = sum(c[k][k] for k in range(L))
    t = [sum(c[k]) for k in range(L)]
    p = [sum(c[i][k] for i in range(L)) for k in range(L)]
    num = correct * s - sum(tk * pk for tk, pk in zip(t, p))
    a = s * s - sum(pk * pk for pk in p)
    b = s * s - sum(tk * tk for tk in t)
    if a == 0 or b == 0:
        return 0.0, True
    return num / math.sqrt(a * b), False


def f1_score(tp: int, fp: int, fn: int) -> float:
    """Harmonic mean of precision and recall; undefined parts count as 0."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def metrics(cm: ConfusionMatrix) -> Metrics:
    counts = cm.counts
    if counts.size == 0 or cm.total == 0:
        raise ValueError("metrics of an empty confusion matrix")
    total = cm.total
    acc = int(np.trace(counts)) / total
    mcc, degenerate = mcc_from_counts(counts)
    f1 = []
    for k in range(cm.num_classes):
        tp = int(counts[k, k])
        fp = int(counts[:, k].sum()) - tp
        fn = int(counts[k, :].sum()) - tp
        f1.append(f1_score(tp, fp, fn))
    return Metrics(acc, mcc, f1, sum(f1) / len(f1), degenerate)


def evaluate_labels(true, pred, num_classes: int) -> Metrics:
    return metrics(confusion(true, pred, num_classes))
