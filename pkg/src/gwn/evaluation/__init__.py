"""Metrics, cross-validation plans, significance testing and model comparison."""

from .compare import ComparisonReport, FoldOutcome, run_comparison, write_rows
from .cv import CvPlan, Fold, five_by_two_plan, losocv_plan, make_plan
from .metrics import (
    ConfusionMatrix,
    Metrics,
    confusion,
    evaluate_labels,
    f1_score,
    mcc_from_counts,
    metrics,
)
from .wilcoxon import EXACT_MAX_N, WilcoxonResult, exact_null_counts, signed_ranks, wilcoxon_signed_rank

__all__ = [
    "ComparisonReport",
    "ConfusionMatrix",
    "CvPlan",
    "EXACT_MAX_N",
    "Fold",
    "FoldOutcome",
    "Metrics",
    "WilcoxonResult",
    "confusion",
    "evaluate_labels",
    "exact_null_counts",
    "f1_score",
    "five_by_two_plan",
    "losocv_plan",
    "make_plan",
    "mcc_from_counts",
    "metrics",
    "run_comparison",
    "signed_ranks",
    "wilcoxon_signed_rank",
    "write_rows",
]
