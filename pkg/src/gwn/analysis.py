"""Attention-pattern taxonomy, switch counting and the noise-robustness experiment.

A modality "attends to itself" at a step when its self score is strictly
larger than every other entry of its row; ties count as attending elsewhere.
Padded steps are dropped before any statistic is taken.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .attention import AttentionTrace
from .data import inject_noise, modality_std
from .evaluation.compare import ComparisonReport, run_comparison, write_rows
from .evaluation.cv import make_plan
from .evaluation.wilcoxon import WilcoxonResult, wilcoxon_signed_rank
from .model import TrainConfig
from .pipeline import Protocol

LABELS = ("FIA", "FOS", "FIOB", "FIS", "FOA")
_LOW = Fraction(2, 5)
_HIGH = Fraction(3, 5)


@dataclass
class SelfAttentionSeries:
    instance_id: str
    head: int
    modality: int
    weights: np.ndarray  # self score per valid step
    favored_self: np.ndarray  # bool per valid step

    def __len__(self) -> int:
        return int(self.weights.size)

    @property
    def fraction(self) -> Fraction:
        return Fraction(int(self.favored_self.sum()), len(self))


def favors_self(rows: np.ndarray, m: int) -> np.ndarray:
    """rows: (..., M) attention rows of modality m. Strict dominance of entry m."""
    others = np.delete(rows, m, axis=-1)
    if others.shape[-1] == 0:
        return np.ones(rows.shape[:-1], dtype=bool)
    return rows[..., m] > others.max(axis=-1)


def self_attention_series(trace: AttentionTrace) -> list[SelfAttentionSeries]:
    """One series per (head, modality), restricted to valid steps."""
    valid = np.asarray(trace.valid, dtype=bool)
    if not valid.any():
        raise ValueError(f"trace {trace.instance_id!r} has no valid timesteps")
    scores = trace.scores[valid]  # (T', K, M, M)
    _, K, M, _ = scores.shape
    out = []
    for k in range(K):
        for m in range(M):
            rows = scores[:, k, m, :]
            out.append(SelfAttentionSeries(trace.instance_id, k, m, rows[:, m].copy(), favors_self(rows, m)))
    return out


def count_switches(series) -> int:
    """Changes of favored target between consecutive valid steps."""
    fav = series.favored_self if isinstance(series, SelfAttentionSeries) else np.asarray(series, dtype=bool)
    if fav.size == 0:
        raise ValueError("empty series")
    return int(np.count_nonzero(fav[1:] != fav[:-1]))


def classify_fraction(s) -> str:
    """Pattern label for a self-attention fraction s in [0, 1].

    Floats are read through their shortest decimal repr so that 0.6 means 3/5.
    """
    if not isinstance(s, Fraction):
        s = Fraction(repr(float(s))) if isinstance(s, float) else Fraction(s)
    if s < 0 or s > 1:
        raise ValueError(f"fraction {s} outside [0, 1]")
    if s == 1:
        return "FIA"
    if s > _HIGH:
        return "FOS"
    if s >= _LOW:
        return "FIOB"
    if s > 0:
        return "FIS"
    return "FOA"


def classify_pattern(series) -> str:
    if isinstance(series, SelfAttentionSeries):
        if len(series) == 0:
            raise ValueError("empty series")
        return classify_fraction(series.fraction)
    return classify_fraction(series)


@dataclass
class PatternRecord:
    instance: str
    head: int
    modality: int
    s: float
    switches: int
    label: str


def pattern_records(traces: Sequence[AttentionTrace]) -> list[PatternRecord]:
    out = []
    for tr in traces:
        for ser in self_attention_series(tr):
            out.append(
                PatternRecord(
                    tr.instance_id,
                    ser.head,
                    ser.modality,
                    float(ser.fraction),
                    count_switches(ser),
                    classify_pattern(ser),
                )
            )
    return out


@dataclass
class PatternSummary:
    """Per-modality label frequencies and switch statistics for one condition."""

    condition: str
    modality_names: list[str]
    frequencies: np.ndarray  # (M, 5) in LABELS order
    switch_mean: np.ndarray  # (M,)
    switch_std: np.ndarray  # (M,) population std
    counts: np.ndarray  # (M,) classified (instance, head) pairs
    head: int | None = None  # None when heads are pooled

    def frequency(self, label: str, modality: int) -> float:
        return float(self.frequencies[modality, LABELS.index(label)])

    def row(self) -> dict:
        out = {"condition": self.condition}
        if self.head is not None:
            out["head"] = self.head
        for j, lab in enumerate(LABELS):
            for m, name in enumerate(self.modality_names):
                out[f"{lab}_{name}"] = float(self.frequencies[m, j])
        for m, name in enumerate(self.modality_names):
            out[f"switch_mean_{name}"] = float(self.switch_mean[m])
        for m, name in enumerate(self.modality_names):
            out[f"switch_std_{name}"] = float(self.switch_std[m])
        return out


def table2_columns(modality_names: Sequence[str], per_head: bool = False) -> list[str]:
    cols = ["condition"] + (["head"] if per_head else [])
    cols += [f"{lab}_{n}" for lab in LABELS for n in modality_names]
    cols += [f"switch_mean_{n}" for n in modality_names]
    cols += [f"switch_std_{n}" for n in modality_names]
    return cols


def default_names(M: int) -> list[str]:
    return [f"m{m}" for m in range(M)]


def summarize_records(
    records: Sequence[PatternRecord],
    condition: str = "none",
    modality_names: Sequence[str] | None = None,
    head: int | None = None,
) -> PatternSummary:
    if not records:
        raise ValueError("no pattern records to summarize")
    M = max(r.modality for r in records) + 1
    names = list(modality_names) if modality_names is not None else default_names(M)
    if len(names) < M:
        raise ValueError(f"{len(names)} modality names for {M} modalities")
    M = len(names)
    freq = np.zeros((M, len(LABELS)))
    mean = np.zeros(M)
    std = np.zeros(M)
    counts = np.zeros(M, dtype=np.int64)
    for m in range(M):
        rs = [r for r in records if r.modality == m]
        counts[m] = len(rs)
        if not rs:
            continue
        tally = np.array([sum(r.label == lab for r in rs) for lab in LABELS], dtype=np.int64)
        freq[m] = tally / tally.sum()
        sw = np.array([r.switches for r in rs], dtype=np.float64)
        mean[m] = sw.mean()
        std[m] = sw.std()
    return PatternSummary(condition, names, freq, mean, std, counts, head)


def pattern_table(
    traces: Sequence[AttentionTrace],
    condition: str = "none",
    modality_names: Sequence[str] | None = None,
) -> PatternSummary:
    """Heads pooled: frequencies over all (instance, head) pairs per modality."""
    if not traces:
        raise ValueError("empty trace set")
    return summarize_records(pattern_records(traces), condition, modality_names)


def per_head_tables(
    records: Sequence[PatternRecord],
    condition: str = "none",
    modality_names: Sequence[str] | None = None,
) -> list[PatternSummary]:
    heads = sorted({r.head for r in records})
    return [
        summarize_records([r for r in records if r.head == k], condition, modality_names, head=k) for k in heads
    ]


PATTERN_COLUMNS = ["instance", "head", "modality", "s", "switches", "label"]


def write_patterns_csv(path, records: Sequence[PatternRecord]) -> None:
    write_rows(path, PATTERN_COLUMNS, [r.__dict__ for r in records])


def write_summary_csv(path, summaries: Sequence[PatternSummary]) -> None:
    per_head = any(s.head is not None for s in summaries)
    write_rows(path, table2_columns(summaries[0].modality_names, per_head), [s.row() for s in summaries])


# ---------------------------------------------------------------- noise experiment

NONE = "none"


def condition_names(num_modalities: int) -> list[str]:
    return [NONE] + [f"noise-in-modality-{m}" for m in range(num_modalities)]


def noised_modality(condition: str, num_modalities: int) -> int | None:
    if condition == NONE:
        return None
    prefix = "noise-in-modality-"
    if condition.startswith(prefix):
        tail = condition[len(prefix) :]
        if tail.isdigit() and int(tail) < num_modalities:
            return int(tail)
    raise ValueError(f"invalid condition {condition!r}; expected one of {condition_names(num_modalities)}")


def display_name(condition: str, modality_names: Sequence[str]) -> str:
    m = noised_modality(condition, len(modality_names))
    return "None" if m is None else f"In {modality_names[m]}"


def noise_seed(seed: int, modality: int) -> int:
    return 1_000_003 * (seed + 1) + modality


def apply_condition(instances, condition: str, seed: int, fraction: float = 0.1, reference_std=None):
    """Returns (instances, sigma). The reference std is taken from ``instances``
    unless given (it should come from pre-augmentation data)."""
    M = len(instances[0].modalities)
    m = noised_modality(condition, M)
    if m is None:
        return list(instances), 0.0
    ref = modality_std(instances, m) if reference_std is None else reference_std
    return inject_noise(instances, m, fraction, noise_seed(seed, m), reference_std=ref)


@dataclass
class ConditionRun:
    condition: str
    seed: int
    sigma: float
    report: ComparisonReport
    patterns: list[PatternRecord]

    @property
    def metrics(self) -> dict:
        return self.report.aggregate(self.report.models[0])

    def fold_accuracies(self) -> list[float]:
        return [o.metrics.acc for o in self.report.per_fold(self.report.models[0])]


@dataclass
class NoiseExperiment:
    plan: str
    modality_names: list[str]
    num_classes: int
    conditions: list[str]
    seeds: list[int]
    runs: list[ConditionRun] = field(default_factory=list)

    def run_for(self, condition: str, seed: int) -> ConditionRun:
        for r in self.runs:
            if r.condition == condition and r.seed == seed:
                return r
        raise KeyError((condition, seed))

    # Table-3 analogue
    def metric_rows(self) -> list[dict]:
        rows = []
        base = {s: self.run_for(NONE, s) for s in self.seeds} if NONE in self.conditions else {}
        for cond in self.conditions:
            runs = [self.run_for(cond, s) for s in self.seeds]
            for r in runs:
                rows.append({"noise": display_name(cond, self.modality_names), "condition": cond, "seed": r.seed, "sigma": r.sigma, **r.metrics})
            mean = {k: float(np.mean([r.metrics[k] for r in runs])) for k in runs[0].metrics}
            row = {"noise": display_name(cond, self.modality_names), "condition": cond, "seed": "mean", "sigma": runs[0].sigma, **mean}
            if cond != NONE and base:
                sig = self.significance(cond)
                row["r"], row["p"] = sig.r, sig.pvalue
            rows.append(row)
        return rows

    def metric_columns(self) -> list[str]:
        f1 = [f"f1_{k}" for k in range(self.num_classes)]
        return ["noise", "condition", "seed", "sigma", "acc", "mcc", *f1, "f1_avg", "r", "p"]

    def significance(self, condition: str) -> WilcoxonResult:
        """Paired per-fold accuracy (all seeds) of ``none`` against ``condition``."""
        a = [x for s in self.seeds for x in self.run_for(NONE, s).fold_accuracies()]
        b = [x for s in self.seeds for x in self.run_for(condition, s).fold_accuracies()]
        return wilcoxon_signed_rank(a, b)

    # Table-2 analogue
    def pattern_summaries(self, per_seed: bool = False) -> list[PatternSummary]:
        out = []
        for cond in self.conditions:
            label = display_name(cond, self.modality_names)
            if per_seed:
                for s in self.seeds:
                    ps = summarize_records(self.run_for(cond, s).patterns, label, self.modality_names)
                    ps.condition = f"{label} (seed {s})"
                    out.append(ps)
            recs = [p for s in self.seeds for p in self.run_for(cond, s).patterns]
            out.append(summarize_records(recs, label, self.modality_names))
        return out

    def fia_deltas(self) -> list[dict]:
        """Per seed: FIA frequency of the noised modality, noised minus clean."""
        rows = []
        for cond in self.conditions:
            m = noised_modality(cond, len(self.modality_names))
            if m is None:
                continue
            for s in self.seeds:
                clean = summarize_records(self.run_for(NONE, s).patterns, NONE, self.modality_names)
                noisy = summarize_records(self.run_for(cond, s).patterns, cond, self.modality_names)
                before, after = clean.frequency("FIA", m), noisy.frequency("FIA", m)
                delta = after - before
                direction = "decrease" if delta < 0 else "increase" if delta > 0 else "unchanged"
                rows.append(
                    {
                        "condition": cond,
                        "modality": self.modality_names[m],
                        "seed": s,
                        "fia_none": before,
                        "fia_noise": after,
                        "delta": delta,
                        "direction": direction,
                    }
                )
        return rows

    FIA_COLUMNS = ["condition", "modality", "seed", "fia_none", "fia_noise", "delta", "direction"]

    def write(self, out_dir) -> dict[str, str]:
        from pathlib import Path

        out = Path(out_dir)
        paths = {
            "noise_report": out / "noise_report.csv",
            "pattern_summary": out / "pattern_summary.csv",
            "pattern_summary_by_seed": out / "pattern_summary_by_seed.csv",
            "fia_deltas": out / "fia_deltas.csv",
            "patterns": out / "patterns.csv",
        }
        write_rows(paths["noise_report"], self.metric_columns(), self.metric_rows())
        write_summary_csv(paths["pattern_summary"], self.pattern_summaries())
        write_summary_csv(paths["pattern_summary_by_seed"], self.pattern_summaries(per_seed=True))
        write_rows(paths["fia_deltas"], self.FIA_COLUMNS, self.fia_deltas())
        rows = []
        for r in self.runs:
            for p in r.patterns:
                rows.append({"condition": r.condition, "seed": r.seed, **p.__dict__})
        write_rows(paths["patterns"], ["condition", "seed", *PATTERN_COLUMNS], rows)
        return {k: str(v) for k, v in paths.items()}


def run_condition(
    instances,
    condition: str,
    seed: int,
    config: TrainConfig,
    plan_kind: str = "5x2",
    protocol: Protocol | None = None,
    num_classes: int | None = None,
    fraction: float = 0.1,
    workers: int | None = None,
) -> ConditionRun:
    """Noise (if any) on the whole dataset, then GWN under the seeded CV plan.

    Patterns come from the test-fold traces. The ``none`` condition is the same
    computation as a plain single-model comparison run with this seed.
    """
    instances = list(instances)
    noisy, sigma = apply_condition(instances, condition, seed, fraction)
    plan = make_plan(plan_kind, noisy, seed)
    cfg = replace(config, seed=seed)
    report = run_comparison(["gwn"], noisy, plan, cfg, protocol, num_classes, workers, keep_traces=True)
    traces = [t for o in report.per_fold("gwn") for t in (o.traces or [])]
    return ConditionRun(condition, seed, sigma, report, pattern_records(traces))


def noise_experiment(
    instances,
    config: TrainConfig,
    seeds: Sequence[int] = (0,),
    conditions: Sequence[str] | None = None,
    plan_kind: str = "5x2",
    protocol: Protocol | None = None,
    num_classes: int | None = None,
    modality_names: Sequence[str] | None = None,
    fraction: float = 0.1,
    workers: int | None = None,
) -> NoiseExperiment:
    instances = list(instances)
    if not instances:
        raise ValueError("empty dataset")
    M = len(instances[0].modalities)
    conditions = list(conditions) if conditions is not None else condition_names(M)
    for c in conditions:
        noised_modality(c, M)
    if len(conditions) > 1 and NONE not in conditions:
        conditions = [NONE, *conditions]
    if num_classes is None:
        num_classes = max(i.label for i in instances) + 1
    names = list(modality_names) if modality_names is not None else default_names(M)
    exp = NoiseExperiment(plan_kind, names, num_classes, conditions, list(seeds))
    for cond in conditions:
        for s in seeds:
            exp.runs.append(
                run_condition(instances, cond, s, config, plan_kind, protocol, num_classes, fraction, workers)
            )
    return exp


__all__ = [
    "LABELS",
    "ConditionRun",
    "NoiseExperiment",
    "PatternRecord",
    "PatternSummary",
    "SelfAttentionSeries",
    "apply_condition",
    "classify_fraction",
    "classify_pattern",
    "condition_names",
    "count_switches",
    "favors_self",
    "noise_experiment",
    "noised_modality",
    "pattern_records",
    "pattern_table",
    "per_head_tables",
    "run_condition",
    "self_attention_series",
    "summarize_records",
    "table2_columns",
    "write_patterns_csv",
    "write_summary_csv",
]
