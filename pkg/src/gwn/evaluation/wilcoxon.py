"""Wilcoxon signed-rank test with an exact null distribution for small n."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm, rankdata

EXACT_MAX_N = 25


@dataclass
class WilcoxonResult:
    statistic: float  # W = min(T+, T-); nan when degenerate
    pvalue: float
    z: float  # normal-approximation z of T+ (sign follows a - b)
    r: float  # effect size z / sqrt(n)
    n: int  # pairs left after dropping zero differences
    t_plus: float
    exact: bool
    degenerate: bool = False


def signed_ranks(diffs: np.ndarray) -> np.ndarray:
    """Average ranks of |d| carrying the sign of d (zeros must already be removed)."""
    return np.sign(diffs) * rankdata(np.abs(diffs), method="average")


def exact_null_counts(ranks2: Sequence[int]) -> np.ndarray:
    """Number of sign assignments giving each value of 2·T+.

    ``ranks2`` are doubled ranks (integers even with half-rank ties). Index v of
    the result counts assignments whose positive ranks sum to v / 2.
    """
    total = int(sum(ranks2))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in ranks2:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def _exact_p(ranks2: list[int], w2: int) -> float:
    counts = exact_null_counts(ranks2)
    total = len(counts) - 1
    v = np.arange(total + 1)
    hit = np.minimum(v, total - v) <= w2
    return float(sum(counts[hit]) / 2 ** len(ranks2))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Paired two-sided test of a vs b.

    Zero differences are dropped, tied |d| get average ranks. p is exact
    (P under the null that min(T+, T-) is at most the observed W) for n up to
    25 and uses the tie-corrected normal approximation with continuity
    correction above that. z and r always come from the normal approximation.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length: {a.size} vs {b.size}")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(math.nan, 1.0, 0.0, 0.0, 0, 0.0, True, degenerate=True)

    sr = signed_ranks(d)
    t_plus = float(sr[sr > 0].sum())
    total = n * (n + 1) / 2
    w = min(t_plus, total - t_plus)

    mu = total / 2
    _, tie_sizes = np.unique(np.abs(sr), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - float((tie_sizes**3 - tie_sizes).sum()) / 48
    dev = t_plus - mu
    if var > 0 and dev != 0:
        z = (dev - math.copysign(0.5, dev)) / math.sqrt(var)
    else:
        z = 0.0

    if n <= EXACT_MAX_N:
        ranks2 = [int(round(2 * abs(r))) for r in sr]
        p = _exact_p(ranks2, int(round(2 * w)))
        exact = True
    else:
        p = min(1.0, 2 * norm.sf(abs(z)))
        exact = False
    return WilcoxonResult(w, p, z, z / math.sqrt(n), n, t_plus, exact)
