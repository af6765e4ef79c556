"""Cross-validated model comparison producing a Table-1 style report."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..model import TrainConfig, predict_batch
from ..pipeline import Protocol, fit, uniform_length
from .cv import CvPlan, Fold
from .metrics import Metrics, evaluate_labels
from .wilcoxon import WilcoxonResult, wilcoxon_signed_rank


@dataclass
class FoldOutcome:
    model: str
    fold: int
    fold_name: str
    metrics: Metrics
    n_test: int
    true: list[int] = field(default_factory=list)
    pred: list[int] = field(default_factory=list)
    traces: list | None = None


@dataclass
class ComparisonReport:
    plan: str
    models: list[str]
    num_classes: int
    outcomes: list[FoldOutcome]
    significance: dict[str, WilcoxonResult] = field(default_factory=dict)
    f1_significance: dict[str, WilcoxonResult] = field(default_factory=dict)

    def per_fold(self, model: str) -> list[FoldOutcome]:
        return sorted((o for o in self.outcomes if o.model == model), key=lambda o: o.fold)

    def aggregate(self, model: str) -> dict:
        rows = [o.metrics.row() for o in self.per_fold(model)]
        return {k: float(np.mean([r[k] for r in rows])) for k in rows[0]}

    def pooled(self, model: str) -> Metrics:
        """Metrics over the concatenated test predictions of all folds."""
        outs = self.per_fold(model)
        true = [t for o in outs for t in o.true]
        pred = [p for o in outs for p in o.pred]
        return evaluate_labels(true, pred, self.num_classes)

    def table_rows(self) -> list[dict]:
        """One row per (model, fold), then mean rows with the test columns filled."""
        rows = []
        for m in self.models:
            for o in self.per_fold(m):
                rows.append({"model": m, "fold": o.fold_name, "n_test": o.n_test, **o.metrics.row(), "r": "", "p": ""})
        for i, m in enumerate(self.models):
            sig = self.significance.get(m) if i > 0 else None
            rows.append(
                {
                    "model": m,
                    "fold": "mean",
                    "n_test": sum(o.n_test for o in self.per_fold(m)),
                    **self.aggregate(m),
                    "r": "" if sig is None else sig.r,
                    "p": "" if sig is None else sig.pvalue,
                }
            )
        return rows

    def columns(self) -> list[str]:
        f1 = [f"f1_{k}" for k in range(self.num_classes)]
        return ["model", "fold", "n_test", "acc", "mcc", *f1, "f1_avg", "r", "p"]

    def write_csv(self, path) -> None:
        write_rows(path, self.columns(), self.table_rows())

    def summary(self) -> dict:
        def sig(res: WilcoxonResult) -> dict:
            return {
                "W": res.statistic,
                "p": res.pvalue,
                "z": res.z,
                "r": res.r,
                "n": res.n,
                "exact": res.exact,
                "degenerate": res.degenerate,
            }

        return {
            "plan": self.plan,
            "models": self.models,
            "folds": len(self.per_fold(self.models[0])),
            "mean": {m: self.aggregate(m) for m in self.models},
            "pooled": {m: self.pooled(m).row() for m in self.models},
            "wilcoxon_accuracy": {k: sig(v) for k, v in self.significance.items()},
            "wilcoxon_f1_avg": {k: sig(v) for k, v in self.f1_significance.items()},
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=1, sort_keys=True, default=_json_default)
            fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([format_value(r.get(c, "")) for c in columns])


def _run_fold(args) -> FoldOutcome:
    kind, fold_idx, fold, by_id, config, protocol, num_classes, keep_traces = args
    train_set = [by_id[i] for i in fold.train_ids]
    test_set = uniform_length([by_id[i] for i in fold.test_ids])
    present = {i.label for i in train_set}
    missing = sorted(set(range(num_classes)) - present)
    if missing:
        raise ValueError(f"fold {fold.name}: class(es) {missing} absent from the training set")
    result = fit(kind, train_set, config, protocol, num_classes)
    preds = predict_batch(result.model, test_set)
    true = [i.label for i in test_set]
    m = evaluate_labels(true, preds.labels, num_classes)
    return FoldOutcome(
        kind,
        fold_idx,
        fold.name,
        m,
        len(test_set),
        true,
        [int(p) for p in preds.labels],
        preds.traces if keep_traces else None,
    )


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GWN_WORKERS", "1")))
    except ValueError:
        return 1


def run_folds(jobs, workers: int | None = None) -> list[FoldOutcome]:
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_run_fold(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_fold, jobs))


def run_comparison(
    models: list[str],
    instances,
    plan: CvPlan,
    config: TrainConfig,
    protocol: Protocol | None = None,
    num_classes: int | None = None,
    workers: int | None = None,
    keep_traces: bool = False,
) -> ComparisonReport:
    """Train every model on each fold's training subjects with the same seed and data.

    Wilcoxon tests pair per-fold accuracy (and macro F1) of ``models[0]``
    against each other model.
    """
    if not models:
        raise ValueError("no models to compare")
    protocol = protocol or Protocol()
    instances = list(instances)
    if num_classes is None:
        num_classes = max(i.label for i in instances) + 1
    by_id = {i.instance_id: i for i in instances}
    jobs = [
        (kind, k, fold, by_id, config, protocol, num_classes, keep_traces)
        for kind in models
        for k, fold in enumerate(plan.folds)
    ]
    outcomes = run_folds(jobs, workers)
    report = ComparisonReport(plan.kind, list(models), num_classes, outcomes)
    ref = report.per_fold(models[0])
    for other in models[1:]:
        cand = report.per_fold(other)
        report.significance[other] = wilcoxon_signed_rank(
            [o.metrics.acc for o in ref], [o.metrics.acc for o in cand]
        )
        report.f1_significance[other] = wilcoxon_signed_rank(
            [o.metrics.f1_avg for o in ref], [o.metrics.f1_avg for o in cand]
        )
    return report


def with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return replace(config, seed=seed)


__all__ = [
    "ComparisonReport",
    "Fold",
    "FoldOutcome",
    "run_comparison",
    "run_folds",
    "with_seed",
    "write_rows",
]
