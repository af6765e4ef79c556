"""Acceptance suite: each test checks one numbered criterion at its stated
tolerance and records a PASS/FAIL line (shown in the pytest terminal summary).

Run alone with ``pytest tests/test_acceptance.py -v`` (about 6 minutes on one core).
"""

import csv
import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from gwn.analysis import (
    classify_pattern,
    count_switches,
    pattern_records,
    pattern_table,
    self_attention_series,
)
from gwn.attention import AttentionTrace, attention_forward, init_attention, scaled_attention
from gwn.cli import run as cli_run
from gwn.core import ParamStore, Tensor, cross_entropy, finite_diff_check
from gwn.data import (
    MultimodalInstance,
    SynthConfig,
    class_counts,
    downsample,
    noise_sigma,
    oversample_minority,
    pad_all,
    pre_pad,
    rotate_augment,
    synth_generate,
)
from gwn.evaluation import evaluate_labels, five_by_two_plan, mcc_from_counts, wilcoxon_signed_rank
from gwn.model import TrainConfig, build_model, forward_batch, predict_batch, train

from conftest import make_instances, record_criterion

ROOT = Path(__file__).resolve().parents[1]
COMPARISON_CONFIG = ROOT / "configs" / "comparison.json"


# ---------------------------------------------------------------- 1


def test_criterion_1_gradcheck_tiny_config():
    cfg = TrainConfig(seed=0, hidden=8, heads=2, memory=8, ffn=8, pred_hidden=8, enc_hidden=8)
    r = np.random.default_rng(7)
    xs = [r.standard_normal((2, 5, 6)), r.standard_normal((2, 5, 3))]
    start = time.perf_counter()
    worst = {}
    for kind in ("gwn", "concatn"):
        m = build_model(kind, (6, 3), 3, cfg)
        rep = finite_diff_check(lambda p: cross_entropy(forward_batch(m, xs).logits, [0, 2]), m.params, h=1e-5)
        worst[kind] = rep.worst
    elapsed = time.perf_counter() - start
    ok = all(v < 1e-4 for v in worst.values()) and elapsed < 60
    record_criterion(1, ok, f"max rel err gwn={worst['gwn']:.2e} concatn={worst['concatn']:.2e}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- 2


def test_criterion_2_attention_properties():
    store = ParamStore()
    init_attention(store, 8, 2, 8, np.random.default_rng(0))
    r = np.random.default_rng(2)
    row_err = perm_err = state_err = 0.0
    for _ in range(1000):
        M = int(r.integers(2, 6))
        x = r.normal(scale=r.choice([0.1, 1.0, 10.0]), size=(M, 8))
        out, scores = attention_forward(Tensor(x), store)
        for a in scores:
            row_err = max(row_err, float(np.abs(a.data.sum(-1) - 1).max()))
            assert (a.data >= 0).all()
        perm = r.permutation(M)
        out_p, scores_p = attention_forward(Tensor(x[perm]), store)
        perm_err = max(perm_err, float(np.abs(out_p.data - out.data[perm]).max()))
        for a, ap in zip(scores, scores_p):
            perm_err = max(perm_err, float(np.abs(ap.data - a.data[np.ix_(perm, perm)]).max()))
        again, _ = attention_forward(Tensor(x), store)
        state_err = max(state_err, float(np.abs(again.data - out.data).max()))
    ok = row_err <= 1e-9 and perm_err <= 1e-9 and state_err == 0.0
    record_criterion(2, ok, f"row-sum err {row_err:.1e}, permutation err {perm_err:.1e}, repeat diff {state_err}")
    assert ok


# ---------------------------------------------------------------- 3


def test_criterion_3_hand_example():
    Q = K = Tensor([[1.0], [0.0]])
    ctx, a = scaled_attention(Q, K, Tensor([[2.0], [4.0]]))
    err_a = float(np.abs(a.data - [[0.7311, 0.2689], [0.5, 0.5]]).max())
    err_c = float(np.abs(ctx.data - [[2.5379], [3.0]]).max())
    ok = err_a < 1e-4 and err_c < 1e-4
    record_criterion(3, ok, f"scores {a.data.round(4).tolist()}, context {ctx.data.round(4).ravel().tolist()}")
    assert ok


# ---------------------------------------------------------------- 4


def _brute(true, pred, L):
    n = len(true)
    acc = sum(t == p for t, p in zip(true, pred)) / n
    f1 = []
    for k in range(L):
        tp = sum(t == k == p for t, p in zip(true, pred))
        fp = sum(t != k and p == k for t, p in zip(true, pred))
        fn = sum(t == k and p != k for t, p in zip(true, pred))
        f1.append(2 * tp / (2 * tp + fp + fn) if tp else 0.0)
    X = np.eye(L)[true] - np.eye(L)[true].mean(0)
    Y = np.eye(L)[pred] - np.eye(L)[pred].mean(0)
    den = math.sqrt((X * X).sum() * (Y * Y).sum())
    return acc, ((X * Y).sum() / den if den else 0.0), f1


def test_criterion_4_metrics():
    r = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        L = int(r.integers(2, 6))
        n = int(r.integers(5, 80))
        true = r.integers(0, L, n).tolist()
        pred = [t if r.random() < 0.4 else int(r.integers(0, L)) for t in true]
        m = evaluate_labels(true, pred, L)
        acc, mcc, f1 = _brute(true, pred, L)
        worst = max(worst, abs(m.acc - acc), abs(m.mcc - mcc), float(np.abs(np.array(m.f1) - f1).max()))
    mcc_err = 0.0
    for _ in range(100):
        tp, fn, fp, tn = (int(v) for v in r.integers(1, 500, 4))
        got, _ = mcc_from_counts(np.array([[tn, fp], [fn, tp]]))
        ref = (tp * tn - fp * fn) / math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
        mcc_err = max(mcc_err, abs(got - ref))
    ok = worst < 1e-12 and mcc_err < 1e-12
    record_criterion(4, ok, f"max diff vs brute force {worst:.1e}, binary MCC closed-form diff {mcc_err:.1e}")
    assert ok


# ---------------------------------------------------------------- 5


def _enumerated_p(d):
    d = np.asarray(d, float)
    d = d[d != 0]
    ranks = stats.rankdata(np.abs(d))
    total = ranks.sum()
    w = min(ranks[d > 0].sum(), total - ranks[d > 0].sum())
    hits = sum(
        min(t, total - t) <= w + 1e-9
        for t in (float(np.dot(s, ranks)) for s in itertools.product((0, 1), repeat=d.size))
    )
    return hits / 2**d.size


def test_criterion_5_wilcoxon():
    r = np.random.default_rng(5)
    worst = 0.0
    for k in range(50):
        n = int(r.integers(1, 11))
        d = r.integers(-3, 4, n).astype(float) if k % 2 else r.normal(size=n)
        if not d.any():
            d[0] = 1.0
        worst = max(worst, abs(wilcoxon_signed_rank(d, np.zeros(n)).pvalue - _enumerated_p(d)))
    p5 = wilcoxon_signed_rank([1, 2, 3, 4, 5], [0] * 5).pvalue
    ok = worst < 1e-12 and p5 == 0.0625
    record_criterion(5, ok, f"max |p - enumeration| {worst:.1e} over 50 samples, n=5 all-positive p={p5}")
    assert ok


# ---------------------------------------------------------------- 6


def test_criterion_6_preprocessing():
    r = np.random.default_rng(6)
    inst = MultimodalInstance("a", "s", 0, [r.normal(size=(7, 9)), r.normal(size=(7, 2))])
    padded = pre_pad(inst, 12)
    trailing = all(np.array_equal(p[-7:], x) for p, x in zip(padded.modalities, inst.modalities))
    leading_zero = all(not p[:5].any() for p in padded.modalities)

    data = make_instances(3, 2, T=5, dims=(9, 2), seed=6)
    rot = rotate_augment(data, (0, 90, 180, 270), positional=0)
    norm_err = 0.0
    for j, src in enumerate(data):
        base = np.linalg.norm(src.modalities[0].reshape(5, -1, 3), axis=-1)
        for copy in rot[4 * j : 4 * j + 4]:
            norm_err = max(norm_err, float(np.abs(np.linalg.norm(copy.modalities[0].reshape(5, -1, 3), axis=-1) - base).max()))
    zero_copy = all(np.array_equal(rot[4 * j].modalities[0], s.modalities[0]) for j, s in enumerate(data))

    skewed = [i for i in make_instances(4, 5, classes=3, seed=2) if not (i.label == 2 and int(i.instance_id[1:]) % 2)]
    counts = class_counts(oversample_minority(skewed, seed=0, num_classes=3), 3)

    s1, s2 = noise_sigma(105.4), noise_sigma(0.0123)
    ok = (
        trailing
        and leading_zero
        and norm_err <= 1e-9
        and len(rot) == 4 * len(data)
        and zero_copy
        and len(set(counts.values())) == 1
        and s1 == 10
        and s2 == 0.001
    )
    record_criterion(
        6,
        ok,
        f"pre-pad trailing identical={trailing}, rotation norm err {norm_err:.1e}, x{len(rot) // len(data)} copies, "
        f"0deg identical={zero_copy}, oversampled counts {sorted(counts.values())}, sigma {s1:g} / {s2:g}",
    )
    assert ok


# ---------------------------------------------------------------- 7


@pytest.mark.slow
def test_criterion_7_gwn_learns_synthetic_data():
    start = time.perf_counter()
    _, insts = synth_generate(SynthConfig(seed=0))
    insts = pad_all([downsample(i, 6) for i in insts])
    fold = five_by_two_plan(insts, seed=0).folds[0]
    by_id = {i.instance_id: i for i in insts}
    tr, te = [by_id[i] for i in fold.train_ids], [by_id[i] for i in fold.test_ids]
    res = train("gwn", tr, TrainConfig(seed=0, epochs=200, patience=200), num_classes=3)

    def acc(s):
        return float(np.mean(predict_batch(res.model, s).labels == [i.label for i in s]))

    a_tr, a_te = acc(tr), acc(te)
    elapsed = time.perf_counter() - start
    ok = a_tr >= 0.95 and a_te >= 0.85 and res.stopped_epoch <= 200 and elapsed < 900
    record_criterion(
        7,
        ok,
        f"{len(insts)} instances, train acc {a_tr:.3f}, held-out acc {a_te:.3f} ({len(te)} unseen-subject instances), "
        f"{res.stopped_epoch} epochs, {elapsed:.0f}s",
    )
    assert ok


# ---------------------------------------------------------------- 8


TABLE1 = ["model", "fold", "n_test", "acc", "mcc", "f1_0", "f1_1", "f1_2", "f1_avg", "r", "p"]


@pytest.mark.slow
def test_criterion_8_compare_over_ten_seeds(tmp_path):
    cfg = str(COMPARISON_CONFIG)
    assert cli_run(["synth", "-c", cfg, "-o", str(tmp_path / "synth")]) == 0
    assert cli_run(["preprocess", "-c", cfg, "-o", str(tmp_path / "data"), "-d", str(tmp_path / "synth")]) == 0
    wins, lines, shape_ok = 0, [], True
    for seed in range(10):
        out = tmp_path / f"cmp{seed}"
        code = cli_run(["compare", "-c", cfg, "-o", str(out), "-d", str(tmp_path / "data"),
                        "--plan", "5x2", "--seed", str(seed)])
        assert code == 0
        with open(out / "compare.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        shape_ok &= list(rows[0]) == TABLE1 and len(rows) == 22
        mean = {r["model"]: r for r in rows if r["fold"] == "mean"}
        shape_ok &= mean["concatn"]["r"] != "" and mean["concatn"]["p"] != ""
        g, c = float(mean["gwn"]["f1_avg"]), float(mean["concatn"]["f1_avg"])
        wins += g >= c
        lines.append(f"{g:.3f}/{c:.3f}")
    ok = shape_ok and wins >= 7
    record_criterion(8, ok, f"Table-1 report shape ok={shape_ok}; GWN >= CONCATN macro-F1 in {wins}/10 seeds ({', '.join(lines)})")
    assert ok


# ---------------------------------------------------------------- 9


def test_criterion_9_patterns_and_noise_experiment(tmp_path):
    flags = [True] * 411
    for i in (50, 150, 300):
        flags[i] = False
    T = len(flags)
    scores = np.full((T, 1, 2, 2), 0.5)
    scores[:, 0, 0, :] = [[0.8, 0.2] if f else [0.2, 0.8] for f in flags]
    tr = AttentionTrace(scores, np.ones(T, bool), "x")
    label_direct = classify_pattern(0.9854)
    series = self_attention_series(tr)[0]
    six = count_switches(series) == 6 and classify_pattern(series) == "FOS"

    r = np.random.default_rng(9)
    freq_ok = zero_ok = True
    for _ in range(200):
        Tn, K, M = int(r.integers(1, 15)), int(r.integers(1, 4)), int(r.integers(2, 4))
        e = np.exp(r.normal(scale=3, size=(Tn, K, M, M)))
        valid = np.arange(Tn) >= int(r.integers(0, Tn))
        trs = [AttentionTrace(e / e.sum(-1, keepdims=True), valid, "t")]
        summary = pattern_table(trs)
        freq_ok &= bool(np.allclose(summary.frequencies.sum(1), 1.0, atol=1e-12))
        zero_ok &= all(p.switches == 0 for p in pattern_records(trs) if p.label in ("FIA", "FOA"))

    cfg = {
        "seed": 0,
        "synth": {"subjects": 4, "instances_per_subject": 3, "classes": 2, "min_length": 12, "max_length": 18},
        "preprocess": {"downsample": 3, "pad": True},
        "train": {"epochs": 2, "hidden": 4, "heads": 2, "memory": 4, "ffn": 4, "pred_hidden": 4, "enc_hidden": 4},
        "protocol": {"oversample": True, "augment": False},
        "noise": {"fraction": 0.1, "seeds": [0, 1, 2]},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert cli_run(["synth", "-c", str(path), "-o", str(tmp_path / "s")]) == 0
    assert cli_run(["preprocess", "-c", str(path), "-o", str(tmp_path / "d"), "-d", str(tmp_path / "s")]) == 0
    assert cli_run(["noise-experiment", "-c", str(path), "-o", str(tmp_path / "n"), "-d", str(tmp_path / "d")]) == 0
    with open(tmp_path / "n" / "noise_report.csv", newline="") as fh:
        t3 = list(csv.DictReader(fh))
    with open(tmp_path / "n" / "pattern_summary.csv", newline="") as fh:
        t2 = list(csv.DictReader(fh))
    with open(tmp_path / "n" / "fia_deltas.csv", newline="") as fh:
        deltas = list(csv.DictReader(fh))
    conds = ["none", "noise-in-modality-0", "noise-in-modality-1"]
    t3_ok = [r["condition"] for r in t3 if r["seed"] == "mean"] == conds and len(t3) == 3 * 4
    t2_ok = len(t2) == 3 and len(t2[0]) == 1 + 5 * 2 + 2 * 2
    delta_ok = sorted((d["condition"], d["seed"]) for d in deltas) == sorted(
        (c, str(s)) for c in conds[1:] for s in (0, 1, 2)
    )
    ok = label_direct == "FOS" and six and freq_ok and zero_ok and t3_ok and t2_ok and delta_ok
    record_criterion(
        9,
        ok,
        f"s=0.9854 -> {label_direct}, 6-switch series FOS={six}, frequencies sum to 1={freq_ok}, "
        f"FIA/FOA have 0 switches={zero_ok}, Table-3 rows ok={t3_ok}, Table-2 ok={t2_ok}, per-seed FIA deltas ok={delta_ok}",
    )
    assert ok


# ---------------------------------------------------------------- 10


def test_criterion_10_byte_identical_reruns(tmp_path):
    cfg = {
        "seed": 3,
        "plan": "losocv",
        "synth": {"subjects": 3, "instances_per_subject": 3, "classes": 2, "min_length": 9, "max_length": 15},
        "preprocess": {"downsample": 3, "pad": True, "oversample": True, "augment": True},
        "train": {"epochs": 2, "hidden": 4, "heads": 2, "memory": 4, "ffn": 4, "pred_hidden": 4, "enc_hidden": 4},
        "protocol": {"oversample": True, "augment": True, "pretrain_epochs": 1},
        "noise": {"fraction": 0.1, "seeds": [0, 1]},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))

    def chain(d: Path) -> dict:
        steps = [
            ("synth", "synth", []),
            ("preprocess", "prep", ["-d", str(d / "synth")]),
            ("inject-noise", "noisy", ["-d", str(d / "prep")]),
            ("pretrain", "enc", ["-d", str(d / "prep")]),
            ("train", "train", ["-d", str(d / "prep"), "--encoders", str(d / "enc" / "encoders.ckpt")]),
            ("predict", "pred", ["-d", str(d / "prep"), "--checkpoint", str(d / "train")]),
            ("compare", "cmp", ["-d", str(d / "prep")]),
            ("analyze", "ana", ["--traces", str(d / "pred" / "traces.csv")]),
            ("noise-experiment", "noise", ["-d", str(d / "prep")]),
        ]
        files = {}
        for command, name, extra in steps:
            assert cli_run([command, "-c", str(path), "-o", str(d / name), *extra]) == 0, command
            out = d / name
            files[command] = {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*.csv"))}
        return files

    a, b = chain(tmp_path / "a"), chain(tmp_path / "b")
    mismatched = [c for c in a if not a[c] or a[c] != b[c]]
    n_csv = sum(len(v) for v in a.values())
    ok = not mismatched
    record_criterion(10, ok, f"{len(a)} subcommands, {n_csv} CSVs byte-identical on re-run; mismatches: {mismatched or 'none'}")
    assert ok
