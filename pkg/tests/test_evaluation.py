import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats
from sklearn.metrics import f1_score as sk_f1
from sklearn.metrics import matthews_corrcoef

from gwn.evaluation import (
    confusion,
    evaluate_labels,
    exact_null_counts,
    f1_score,
    five_by_two_plan,
    losocv_plan,
    make_plan,
    mcc_from_counts,
    run_comparison,
    wilcoxon_signed_rank,
)
from gwn.model import TrainConfig
from gwn.pipeline import Protocol

from conftest import make_instances


# ---------------------------------------------------------------- brute-force oracles


def brute_metrics(true, pred, L):
    n = len(true)
    acc = sum(t == p for t, p in zip(true, pred)) / n
    f1 = []
    for k in range(L):
        tp = sum(t == k and p == k for t, p in zip(true, pred))
        fp = sum(t != k and p == k for t, p in zip(true, pred))
        fn = sum(t == k and p != k for t, p in zip(true, pred))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    # MCC as the Pearson correlation of one-hot indicator matrices
    X = np.eye(L)[true] - np.eye(L)[true].mean(axis=0)
    Y = np.eye(L)[pred] - np.eye(L)[pred].mean(axis=0)
    cov_xy = (X * Y).sum()
    den = math.sqrt((X * X).sum() * (Y * Y).sum())
    mcc = cov_xy / den if den else 0.0
    return acc, mcc, f1


def test_metrics_match_brute_force_on_random_datasets():
    r = np.random.default_rng(0)
    for _ in range(100):
        L = int(r.integers(2, 6))
        n = int(r.integers(5, 60))
        true = r.integers(0, L, n).tolist()
        pred = [t if r.random() < 0.5 else int(r.integers(0, L)) for t in true]
        m = evaluate_labels(true, pred, L)
        acc, mcc, f1 = brute_metrics(true, pred, L)
        assert m.acc == acc
        assert m.mcc == pytest.approx(mcc, abs=1e-12)
        assert m.f1 == pytest.approx(f1, abs=1e-15)
        assert m.f1_avg == pytest.approx(np.mean(f1), abs=1e-15)
        labels = list(range(L))
        assert m.mcc == pytest.approx(matthews_corrcoef(true, pred), abs=1e-12)
        sk = sk_f1(true, pred, labels=labels, average=None, zero_division=0)
        np.testing.assert_allclose(m.f1, sk, atol=1e-12)


def test_binary_mcc_closed_form():
    r = np.random.default_rng(1)
    for _ in range(100):
        tp, fn, fp, tn = (int(v) for v in r.integers(1, 200, 4))
        got, degenerate = mcc_from_counts(np.array([[tn, fp], [fn, tp]]))
        expected = (tp * tn - fp * fn) / math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
        assert not degenerate
        assert abs(got - expected) < 1e-12


def test_mcc_degenerate_and_extremes():
    assert mcc_from_counts(np.array([[5, 0], [3, 0]])) == (0.0, True)
    assert mcc_from_counts(np.array([[4, 0], [0, 6]]))[0] == 1.0
    assert mcc_from_counts(np.array([[0, 4], [6, 0]]))[0] == -1.0


def test_f1_conventions_and_table_row():
    assert f1_score(0, 0, 0) == 0.0
    assert f1_score(2, 0, 0) == 1.0
    m = evaluate_labels([0, 0, 1, 1], [0, 1, 1, 1], 3)
    assert m.f1[2] == 0.0
    row = m.row()
    assert list(row) == ["acc", "mcc", "f1_0", "f1_1", "f1_2", "f1_avg"]


def test_confusion_validation():
    cm = confusion([0, 1, 1], [1, 1, 0], 2)
    np.testing.assert_array_equal(cm.counts, [[0, 1], [1, 1]])
    with pytest.raises(ValueError):
        confusion([0, 2], [0, 0], 2)
    with pytest.raises(ValueError):
        confusion([0], [0, 1], 2)
    with pytest.raises(ValueError):
        evaluate_labels([], [], 2)


# ---------------------------------------------------------------- Wilcoxon


def enumerate_p(d):
    """Exact two-sided p by listing all 2^n sign patterns of the observed ranks."""
    d = np.asarray(d, dtype=float)
    d = d[d != 0]
    ranks = stats.rankdata(np.abs(d))
    total = ranks.sum()
    tp = ranks[d > 0].sum()
    w = min(tp, total - tp)
    hits = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        t = float(np.dot(signs, ranks))
        hits += min(t, total - t) <= w + 1e-9
    return hits / 2 ** len(d)


def test_exact_p_equals_full_enumeration():
    r = np.random.default_rng(2)
    for k in range(50):
        n = int(r.integers(1, 11))
        if k % 3 == 0:  # integer differences produce ties
            d = r.integers(-4, 5, n).astype(float)
        else:
            d = r.normal(size=n)
        if not (d != 0).any():
            continue
        res = wilcoxon_signed_rank(d, np.zeros(n))
        assert res.exact
        assert res.pvalue == pytest.approx(enumerate_p(d), abs=1e-12)


def test_all_positive_five():
    res = wilcoxon_signed_rank([1, 2, 3, 4, 5], [0] * 5)
    assert res.pvalue == 0.0625
    assert res.statistic == 0 and res.t_plus == 15 and res.n == 5
    assert res.r == pytest.approx(res.z / math.sqrt(5))
    assert res.r > 0


def test_matches_scipy_exact_without_ties():
    r = np.random.default_rng(3)
    for _ in range(20):
        a, b = r.normal(size=9), r.normal(size=9)
        ours = wilcoxon_signed_rank(a, b)
        ref = stats.wilcoxon(a, b, method="exact")
        assert ours.pvalue == pytest.approx(ref.pvalue, abs=1e-12)
        assert ours.statistic == ref.statistic


def test_null_counts_sum_to_power_of_two():
    counts = exact_null_counts([2, 4, 6, 8])  # doubled ranks 1..4
    assert sum(counts) == 16
    assert counts[0] == 1 and counts[20] == 1


def test_wilcoxon_edge_cases():
    res = wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])
    assert res.degenerate and res.pvalue == 1.0 and math.isnan(res.statistic)
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0], [1.0, 2.0])


def test_normal_approximation_for_large_n():
    r = np.random.default_rng(4)
    a = r.normal(0.3, 1, 40)
    res = wilcoxon_signed_rank(a, np.zeros(40))
    assert not res.exact
    ref = stats.wilcoxon(a, method="approx", correction=True)
    assert res.pvalue == pytest.approx(ref.pvalue, rel=1e-9)


@given(st.lists(st.integers(-20, 20).filter(lambda v: v != 0), min_size=1, max_size=12))
def test_p_value_in_unit_interval_and_symmetric(d):
    a = wilcoxon_signed_rank(d, [0] * len(d))
    b = wilcoxon_signed_rank([-v for v in d], [0] * len(d))
    assert 0 < a.pvalue <= 1
    assert a.pvalue == b.pvalue
    assert a.z == pytest.approx(-b.z)


# ---------------------------------------------------------------- CV plans


def test_losocv_plan():
    data = make_instances(4, 3)
    plan = losocv_plan(data)
    assert len(plan) == 4
    for f in plan:
        assert len(f.test_subjects) == 1
        assert not set(f.train_subjects) & set(f.test_subjects)
        assert len(f.train_ids) + len(f.test_ids) == 12
    assert sorted(i for f in plan for i in f.test_ids) == sorted(i.instance_id for i in data)


def test_five_by_two_plan():
    data = make_instances(7, 2)
    plan = five_by_two_plan(data, seed=3)
    assert len(plan) == 10
    for rep in range(5):
        a, b = plan.folds[2 * rep], plan.folds[2 * rep + 1]
        assert a.train_ids == b.test_ids and a.test_ids == b.train_ids
        assert not set(a.train_subjects) & set(a.test_subjects)
        assert len(a.train_subjects) == 3 and len(a.test_subjects) == 4
    same = five_by_two_plan(data, seed=3)
    assert [f.test_ids for f in same] == [f.test_ids for f in plan]
    other = five_by_two_plan(data, seed=4)
    assert [f.test_ids for f in other] != [f.test_ids for f in plan]
    with pytest.raises(ValueError):
        make_plan("kfold", data)
    with pytest.raises(ValueError):
        losocv_plan(make_instances(1, 3))


# ---------------------------------------------------------------- comparison


TINY = dict(hidden=4, heads=2, memory=4, ffn=4, pred_hidden=4, enc_hidden=4, epochs=2)


def test_comparison_report_shape(tmp_path):
    data = make_instances(4, 3, T=4, dims=(6, 2))
    plan = make_plan("5x2", data, seed=0)
    rep = run_comparison(["gwn", "concatn"], data, plan, TrainConfig(seed=0, **TINY), Protocol(augment=False))
    rows = rep.table_rows()
    assert len(rows) == 2 * 10 + 2
    means = [r for r in rows if r["fold"] == "mean"]
    assert means[0]["r"] == "" and means[1]["p"] == rep.significance["concatn"].pvalue
    rep.write_csv(tmp_path / "c.csv")
    header = (tmp_path / "c.csv").read_text().splitlines()[0]
    assert header == "model,fold,n_test,acc,mcc,f1_0,f1_1,f1_2,f1_avg,r,p"
    rep.write_json(tmp_path / "c.json")
    summary = json.loads((tmp_path / "c.json").read_text())
    assert summary["folds"] == 10 and set(summary["mean"]) == {"gwn", "concatn"}
    again = run_comparison(["gwn", "concatn"], data, plan, TrainConfig(seed=0, **TINY), Protocol(augment=False))
    again.write_csv(tmp_path / "d.csv")
    assert (tmp_path / "c.csv").read_bytes() == (tmp_path / "d.csv").read_bytes()


def test_comparison_rejects_missing_training_class():
    data = make_instances(3, 3, T=3, dims=(6, 2))
    for inst in data:
        if inst.subject_id == "S00":
            inst.label = 2
        else:
            inst.label = inst.label % 2
    with pytest.raises(ValueError, match="absent"):
        run_comparison(["concatn"], data, losocv_plan(data), TrainConfig(seed=0, **TINY), Protocol(augment=False))
