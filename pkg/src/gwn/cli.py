"""``gwn`` command line: one JSON config, subcommands for every pipeline stage.

Exit codes: 0 success, 1 runtime failure, 2 configuration error. Every
subcommand stages its artifacts in a temporary sibling directory and renames
it into place, so a failed run never leaves partial output behind.
"""

from __future__ import annotations

import argparse
import contextlib
import copy
import hashlib
import json
import logging
import os
import platform
import shutil
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    condition_names,
    display_name,
    noise_experiment,
    noised_modality,
    pattern_records,
    per_head_tables,
    run_condition,
    summarize_records,
    write_patterns_csv,
    write_summary_csv,
)
from .attention import read_traces_csv, write_traces_csv
from .core import ParamStore
from .data import (
    DatasetError,
    SynthConfig,
    downsample,
    inject_noise,
    load_dataset,
    oversample_minority,
    pad_all,
    rotate_augment,
    synth_generate,
    write_dataset,
)
from .evaluation import make_plan, run_comparison, write_rows
from .mapping import pretrain_autoencoders
from .model import KINDS as MODEL_KINDS, Model, TrainConfig, predict_batch
from .pipeline import Protocol, fit, prepare_training_set

log = logging.getLogger("gwn")

WORKERS_ENV = "GWN_WORKERS"

DEFAULTS: dict = {
    "dataset": None,
    "output": None,
    "checkpoint": None,
    "encoders": None,
    "traces": [],
    "model_kind": "gwn",
    "models": ["gwn", "concatn"],
    "plan": "5x2",
    "workers": None,
    "train": {},
    "protocol": {},
    "synth": {},
    "preprocess": {"downsample": 1, "pad": True, "oversample": False, "augment": False, "angles": [0, 90, 180, 270]},
    "noise": {"modality": 0, "fraction": 0.1, "condition": "none", "conditions": None, "seeds": [0]},
}


class ConfigError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"config error in '{field}': {message}")
        self.field = field


# ---------------------------------------------------------------- config


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(dotted, f"'{k}' is not a section")
    node[keys[-1]] = value


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_seeds(text: str) -> list[int]:
    try:
        if "-" in text and "," not in text:
            lo, hi = text.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError("noise.seeds", f"cannot parse {text!r}") from exc


# flag dest -> dotted config field
FLAG_FIELDS = {
    "seed": "seed",
    "dataset": "dataset",
    "output": "output",
    "checkpoint": "checkpoint",
    "encoders": "encoders",
    "workers": "workers",
    "model": "model_kind",
    "plan": "plan",
    "epochs": "train.epochs",
    "lr": "train.lr",
    "batch_size": "train.batch_size",
    "downsample": "preprocess.downsample",
    "modality": "noise.modality",
    "fraction": "noise.fraction",
    "condition": "noise.condition",
    "pretrain_epochs": "protocol.pretrain_epochs",
}


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError("config", f"file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config", "top level must be a JSON object")
        unknown = set(loaded) - set(DEFAULTS) - {"seed"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        cfg = merge(cfg, loaded)
    for dest, dotted in FLAG_FIELDS.items():
        v = getattr(args, dest, None)
        if v is not None:
            set_path(cfg, dotted, v)
    if getattr(args, "seeds", None) is not None:
        set_path(cfg, "noise.seeds", parse_seeds(args.seeds))
    if getattr(args, "traces", None):
        cfg["traces"] = list(args.traces)
    if getattr(args, "models", None):
        cfg["models"] = args.models.split(",")
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(item, "--set expects key=value")
        k, v = item.split("=", 1)
        set_path(cfg, k.strip(), parse_value(v))
    return cfg


def require_seed(cfg: dict) -> int:
    seed = cfg.get("seed")
    if seed is None:
        raise ConfigError("seed", "required (no implicit randomness)")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", f"must be a non-negative integer, got {seed!r}")
    return seed


def require_path(cfg: dict, key: str, must_exist: bool = True) -> Path:
    v = cfg.get(key)
    if not v:
        raise ConfigError(key, "required")
    p = Path(v)
    if must_exist and not p.exists():
        raise ConfigError(key, f"path does not exist: {p}")
    return p


def _build(section: str, cls, raw: dict, **extra):
    if not isinstance(raw, dict):
        raise ConfigError(section, "must be an object")
    known = {f.name for f in fields(cls)}
    for k in raw:
        if k not in known:
            raise ConfigError(f"{section}.{k}", "unknown field")
    try:
        return cls(**{**raw, **extra})
    except (TypeError, ValueError) as exc:
        name = next((f"{section}.{k}" for k in known if str(exc).startswith(k)), section)
        raise ConfigError(name, str(exc)) from exc


def train_config(cfg: dict) -> TrainConfig:
    raw = dict(cfg.get("train") or {})
    if "seed" in raw:
        raise ConfigError("train.seed", "set the top-level 'seed' instead")
    return _build("train", TrainConfig, raw, seed=require_seed(cfg))


def protocol_config(cfg: dict) -> Protocol:
    return _build("protocol", Protocol, dict(cfg.get("protocol") or {}))


def model_kind(cfg: dict, key: str = "model_kind") -> str:
    kind = cfg.get(key)
    if kind not in MODEL_KINDS:
        raise ConfigError(key, f"must be one of {list(MODEL_KINDS)}, got {kind!r}")
    return kind


def plan_kind(cfg: dict) -> str:
    plan = cfg.get("plan")
    if plan not in ("losocv", "5x2"):
        raise ConfigError("plan", f"must be 'losocv' or '5x2', got {plan!r}")
    return plan


def workers(cfg: dict) -> int:
    w = cfg.get("workers")
    if w is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            w = int(raw)
        except ValueError as exc:
            raise ConfigError("workers", f"{WORKERS_ENV}={raw!r} is not an integer") from exc
    if isinstance(w, bool) or not isinstance(w, int) or w < 1:
        raise ConfigError("workers", f"must be a positive integer, got {w!r}")
    return w


def noise_section(cfg: dict) -> dict:
    n = merge(DEFAULTS["noise"], cfg.get("noise") or {})
    unknown = set(n) - set(DEFAULTS["noise"])
    if unknown:
        raise ConfigError(f"noise.{sorted(unknown)[0]}", "unknown field")
    if not isinstance(n["fraction"], (int, float)) or not n["fraction"] > 0:
        raise ConfigError("noise.fraction", f"must be positive, got {n['fraction']!r}")
    seeds = n["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError("noise.seeds", f"must be a non-empty list of non-negative integers, got {seeds!r}")
    return n


def load_data(cfg: dict):
    path = require_path(cfg, "dataset")
    try:
        return load_dataset(path)
    except DatasetError as exc:
        raise ConfigError("dataset", str(exc)) from exc


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def versions() -> dict:
    return {"gwn": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


# ---------------------------------------------------------------- output staging


@contextlib.contextmanager
def staged_output(out_dir: Path):
    """Yield a temporary directory that replaces ``out_dir`` on success."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_dir.parent / f".{out_dir.name}.tmp-{os.getpid()}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir()
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    old = None
    if out_dir.exists():
        old = out_dir.parent / f".{out_dir.name}.old-{os.getpid()}"
        os.replace(out_dir, old)
    os.replace(tmp, out_dir)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_provenance(tmp: Path, command: str, cfg: dict, details: dict | None = None) -> None:
    artifacts = {
        str(p.relative_to(tmp)): sha256_file(p) for p in sorted(tmp.rglob("*")) if p.is_file()
    }
    record = {
        "command": command,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": cfg.get("seed"),
        "versions": versions(),
        "artifacts": artifacts,
        "details": details or {},
    }
    (tmp / "run.json").write_text(json.dumps(record, indent=1, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o))


# ---------------------------------------------------------------- subcommands


def cmd_synth(cfg: dict, out: Path) -> dict:
    seed = require_seed(cfg)
    sc = _build("synth", SynthConfig, dict(cfg.get("synth") or {}), seed=seed)
    manifest, instances = synth_generate(sc)
    write_dataset(out, manifest, instances)
    return {"instances": len(instances), "synth": sc.to_dict()}


def _preprocess_section(cfg: dict) -> dict:
    p = merge(DEFAULTS["preprocess"], cfg.get("preprocess") or {})
    unknown = set(p) - set(DEFAULTS["preprocess"])
    if unknown:
        raise ConfigError(f"preprocess.{sorted(unknown)[0]}", "unknown field")
    f = p["downsample"]
    if isinstance(f, bool) or not isinstance(f, int) or f < 1:
        raise ConfigError("preprocess.downsample", f"must be a positive integer, got {f!r}")
    return p


def cmd_preprocess(cfg: dict, out: Path) -> dict:
    seed = require_seed(cfg)
    p = _preprocess_section(cfg)
    manifest, instances = load_data(cfg)
    n_in = len(instances)
    instances = [downsample(i, p["downsample"]) for i in instances]
    if p["oversample"]:
        instances = oversample_minority(instances, seed, manifest.num_classes)
    if p["augment"]:
        pos = manifest.positional_index()
        if pos is None:
            raise ConfigError("preprocess.augment", "dataset has no positional modality to rotate")
        instances = rotate_augment(instances, tuple(p["angles"]), pos)
    if p["pad"]:
        instances = pad_all(instances)
    for spec in manifest.modalities:
        spec.sampling_rate = spec.sampling_rate / p["downsample"]
    write_dataset(out, manifest, instances)
    return {"instances_in": n_in, "instances_out": len(instances), "preprocess": p}


def cmd_inject_noise(cfg: dict, out: Path) -> dict:
    seed = require_seed(cfg)
    n = noise_section(cfg)
    manifest, instances = load_data(cfg)
    m = n["modality"]
    if isinstance(m, bool) or not isinstance(m, int) or not 0 <= m < len(manifest.modalities):
        raise ConfigError("noise.modality", f"must be in 0..{len(manifest.modalities) - 1}, got {m!r}")
    noisy, sigma = inject_noise(instances, m, n["fraction"], seed)
    write_dataset(out, manifest, noisy)
    return {"modality": m, "fraction": n["fraction"], "sigma_noise": sigma}


def cmd_pretrain(cfg: dict, out: Path) -> dict:
    tc = train_config(cfg)
    prot = protocol_config(cfg)
    manifest, instances = load_data(cfg)
    epochs = prot.pretrain_epochs or 100
    train_set = prepare_training_set(instances, prot, tc.seed, manifest.num_classes)
    res = pretrain_autoencoders(
        train_set,
        epochs=epochs,
        lr=prot.pretrain_lr,
        hidden=tc.hidden,
        enc_hidden=tc.enc_hidden,
        seed=tc.seed,
        batch_size=prot.pretrain_batch,
    )
    res.encoders().save(out / "encoders.ckpt")
    write_rows(out / "pretrain_loss.csv", ["epoch", "loss"], [{"epoch": e, "loss": l} for e, l in enumerate(res.losses)])
    return {"epochs": epochs, "final_loss": res.losses[-1]}


def cmd_train(cfg: dict, out: Path) -> dict:
    kind = model_kind(cfg)
    tc = train_config(cfg)
    prot = protocol_config(cfg)
    manifest, instances = load_data(cfg)
    encoders = None
    if cfg.get("encoders"):
        enc_path = require_path(cfg, "encoders")
        encoders = ParamStore.load(enc_path)
    res = fit(kind, instances, tc, prot, manifest.num_classes, encoders)
    res.model.save(out / "model")
    rows = [{"epoch": e + 1, "loss": l, "accuracy": a} for e, (l, a) in enumerate(zip(res.loss, res.accuracy))]
    write_rows(out / "train_log.csv", ["epoch", "loss", "accuracy"], rows)
    return {"model": kind, "epochs_run": res.stopped_epoch, "final_loss": res.loss[-1] if res.loss else None}


def cmd_predict(cfg: dict, out: Path) -> dict:
    ckpt = require_path(cfg, "checkpoint", must_exist=False)
    stem = ckpt.with_suffix("") if ckpt.suffix in (".ckpt", ".json") else ckpt
    if not stem.with_suffix(".ckpt").exists() and (ckpt / "model.ckpt").exists():
        stem = ckpt / "model"
    if not stem.with_suffix(".ckpt").exists():
        raise ConfigError("checkpoint", f"no checkpoint at {ckpt}")
    model = Model.load(stem)
    manifest, instances = load_data(cfg)
    if tuple(manifest.dims) != tuple(model.dims):
        raise ConfigError("dataset", f"modality dims {manifest.dims} do not match model dims {model.dims}")
    preds = predict_batch(model, instances)
    cols = ["instance_id", "true", "predicted", *[f"p_{k}" for k in range(model.num_classes)]]
    rows = []
    for n, inst in enumerate(instances):
        row = {"instance_id": inst.instance_id, "true": inst.label, "predicted": int(preds.labels[n])}
        row.update({f"p_{k}": float(preds.probs[n, k]) for k in range(model.num_classes)})
        rows.append(row)
    write_rows(out / "predictions.csv", cols, rows)
    if preds.traces is not None:
        write_traces_csv(out / "traces.csv", preds.traces)
    acc = float(np.mean(preds.labels == np.array([i.label for i in instances])))
    return {"model": model.kind, "instances": len(instances), "accuracy": acc}


def cmd_compare(cfg: dict, out: Path) -> dict:
    tc = train_config(cfg)
    prot = protocol_config(cfg)
    plan = plan_kind(cfg)
    models = cfg.get("models")
    if not isinstance(models, list) or not models:
        raise ConfigError("models", "must be a non-empty list")
    for k, m in enumerate(models):
        if m not in MODEL_KINDS:
            raise ConfigError(f"models[{k}]", f"unknown model {m!r}")
    manifest, instances = load_data(cfg)
    cv = make_plan(plan, instances, tc.seed)
    report = run_comparison(models, instances, cv, tc, prot, manifest.num_classes, workers(cfg))
    report.write_csv(out / "compare.csv")
    report.write_json(out / "compare.json")
    return {"plan": plan, "folds": len(cv.folds), "models": models}


def _modality_count(instances) -> int:
    return len(instances[0].modalities)


def cmd_analyze(cfg: dict, out: Path) -> dict:
    n = noise_section(cfg)
    condition = n["condition"]
    traces_in = cfg.get("traces") or []
    names = None
    if traces_in:
        if cfg.get("dataset"):
            manifest, _ = load_data(cfg)
            names = [m.name for m in manifest.modalities]
        traces = []
        for t in traces_in:
            p = Path(t)
            if not p.exists():
                raise ConfigError("traces", f"path does not exist: {p}")
            traces.extend(read_traces_csv(p))
        if not traces:
            raise ConfigError("traces", "no traces found")
        M = traces[0].scores.shape[2]
        try:
            noised_modality(condition, M)
        except ValueError as exc:
            raise ConfigError("noise.condition", str(exc)) from exc
        records = pattern_records(traces)
        write_patterns_csv(out / "patterns.csv", records)
        label = display_name(condition, names or [f"m{m}" for m in range(M)])
        write_summary_csv(out / "pattern_summary.csv", [summarize_records(records, label, names)])
        write_summary_csv(out / "pattern_summary_by_head.csv", per_head_tables(records, label, names))
        return {"source": "traces", "traces": len(traces), "condition": condition}

    tc = train_config(cfg)
    prot = protocol_config(cfg)
    plan = plan_kind(cfg)
    manifest, instances = load_data(cfg)
    names = [m.name for m in manifest.modalities]
    try:
        noised_modality(condition, _modality_count(instances))
    except ValueError as exc:
        raise ConfigError("noise.condition", str(exc)) from exc
    label = display_name(condition, names)
    summaries, all_records, rows, sigmas = [], [], [], {}
    for s in n["seeds"]:
        run = run_condition(
            instances, condition, s, tc, plan, prot, manifest.num_classes, n["fraction"], workers(cfg)
        )
        sigmas[str(s)] = run.sigma
        ps = summarize_records(run.patterns, f"{label} (seed {s})", names)
        summaries.append(ps)
        all_records.extend(run.patterns)
        rows.extend({"seed": s, **p.__dict__} for p in run.patterns)
    summaries.append(summarize_records(all_records, label, names))
    write_rows(out / "patterns.csv", ["seed", "instance", "head", "modality", "s", "switches", "label"], rows)
    write_summary_csv(out / "pattern_summary.csv", summaries)
    write_summary_csv(out / "pattern_summary_by_head.csv", per_head_tables(all_records, label, names))
    return {"source": "training", "condition": condition, "seeds": n["seeds"], "sigma_noise": sigmas}


def cmd_noise_experiment(cfg: dict, out: Path) -> dict:
    tc = train_config(cfg)
    prot = protocol_config(cfg)
    plan = plan_kind(cfg)
    n = noise_section(cfg)
    manifest, instances = load_data(cfg)
    M = _modality_count(instances)
    conditions = n["conditions"] or condition_names(M)
    for k, c in enumerate(conditions):
        try:
            noised_modality(c, M)
        except ValueError as exc:
            raise ConfigError(f"noise.conditions[{k}]", str(exc)) from exc
    exp = noise_experiment(
        instances,
        tc,
        seeds=n["seeds"],
        conditions=conditions,
        plan_kind=plan,
        protocol=prot,
        num_classes=manifest.num_classes,
        modality_names=[m.name for m in manifest.modalities],
        fraction=n["fraction"],
        workers=workers(cfg),
    )
    exp.write(out)
    sig = {c: {"r": exp.significance(c).r, "p": exp.significance(c).pvalue} for c in exp.conditions if c != "none"}
    sigmas = {f"{r.condition}/{r.seed}": r.sigma for r in exp.runs}
    summary = {"conditions": exp.conditions, "seeds": exp.seeds, "sigma_noise": sigmas, "wilcoxon_vs_none": sig}
    (out / "noise_summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return summary


COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "inject-noise": cmd_inject_noise,
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "predict": cmd_predict,
    "compare": cmd_compare,
    "analyze": cmd_analyze,
    "noise-experiment": cmd_noise_experiment,
}


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gwn", description="Global workspace network for multimodal sequences.")
    parser.add_argument("--version", action="version", version=f"gwn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="JSON run configuration")
    common.add_argument("-o", "--output", help="output directory (replaced atomically)")
    common.add_argument("--seed", type=int)
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field, e.g. train.lr=0.01")
    common.add_argument("-v", "--verbose", action="count", default=0)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("-d", "--dataset", help="dataset directory or manifest")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--epochs", type=int)
    training.add_argument("--lr", type=float)
    training.add_argument("--batch-size", type=int)
    training.add_argument("--pretrain-epochs", type=int)

    pool = argparse.ArgumentParser(add_help=False)
    pool.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")

    sub.add_parser("synth", parents=[common], help="generate the synthetic dataset")
    p = sub.add_parser("preprocess", parents=[common, data], help="downsample, oversample, augment, pre-pad")
    p.add_argument("--downsample", type=int)
    p = sub.add_parser("inject-noise", parents=[common, data], help="add Gaussian noise to one modality")
    p.add_argument("--modality", type=int)
    p.add_argument("--fraction", type=float)
    sub.add_parser("pretrain", parents=[common, data, training], help="pre-train modality autoencoders")
    p = sub.add_parser("train", parents=[common, data, training], help="train GWN or CONCATN")
    p.add_argument("--model", choices=MODEL_KINDS)
    p.add_argument("--encoders", help="pre-trained encoder checkpoint")
    p = sub.add_parser("predict", parents=[common, data], help="predict and export attention traces")
    p.add_argument("--checkpoint", help="model checkpoint stem, .ckpt file or train output directory")
    p = sub.add_parser("compare", parents=[common, data, training, pool], help="cross-validated comparison")
    p.add_argument("--plan", choices=("losocv", "5x2"))
    p.add_argument("--models", help="comma-separated list, first is the reference (default gwn,concatn)")
    p = sub.add_parser("analyze", parents=[common, data, training, pool], help="attention-pattern analysis")
    p.add_argument("--traces", nargs="+", help="trace CSVs to analyze instead of training")
    p.add_argument("--condition", help="none or noise-in-modality-<m>")
    p.add_argument("--seeds", help="comma list or range, e.g. 0,1,2 or 0-4")
    p.add_argument("--plan", choices=("losocv", "5x2"))
    p.add_argument("--fraction", type=float)
    p = sub.add_parser("noise-experiment", parents=[common, data, training, pool], help="noise robustness study")
    p.add_argument("--seeds", help="comma list or range, e.g. 0,1,2 or 0-4")
    p.add_argument("--plan", choices=("losocv", "5x2"))
    p.add_argument("--fraction", type=float)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = resolve_config(args)
        out = require_path(cfg, "output", must_exist=False)
        with staged_output(out) as tmp:
            details = COMMANDS[args.command](cfg, tmp)
            write_provenance(tmp, args.command, cfg, details)
    except ConfigError as exc:
        print(f"gwn {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported, mapped to exit 1
        log.debug("failure", exc_info=True)
        print(f"gwn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    print(str(out))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
