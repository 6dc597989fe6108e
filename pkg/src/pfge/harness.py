"""Experiment orchestration: pretraining, algorithm runs, evaluation,
connectivity analysis, and report emission.

Directory layout per run: ``{output_dir}/{run_id}/member-{idx}.ckpt`` plus
``report.json`` and CSV side-files. All JSON is written with sorted keys so
that repeated runs with one (config, seed) pair produce byte-identical
artifacts apart from creation timestamps.
"""

import csv
import json
import re
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ExperimentConfig, iterations_per_epoch, validate_against_schema
from .connectivity import initial_curve, mc_value, profile_curve, train_curve
from .data import (
    Dataset,
    apply_standardization,
    batches,
    feature_stats,
    gen_blobs,
    gen_two_spirals,
    load_csv,
    load_idx,
)
from .errors import ConfigurationError, NumericError
from .metrics import PredictionBatch, accuracy, ece, nll, reliability
from .nn import init_model, loss_and_grad
from .rng import STREAM_CURVE, stream_rng
from .training import (
    EnsembleSet,
    MomentumState,
    ensemble_predict,
    run_fge,
    run_pfge,
    run_swa,
    sgd_step,
)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def build_datasets(cfg: ExperimentConfig):
    """Materialize the (train, test) pair named by the config, unstandardized."""
    ds = cfg.dataset
    kind = ds["kind"]
    if kind == "two_spirals":
        train = gen_two_spirals(ds["n_per_class"], ds["noise_sd"], ds["seed"])
        test = gen_two_spirals(ds["test_n_per_class"], ds["noise_sd"], ds["test_seed"])
    elif kind == "blobs":
        train = gen_blobs(ds["centers"], ds["n_per_class"], ds["sd"], ds["seed"])
        test = gen_blobs(ds["centers"], ds["test_n_per_class"], ds["sd"], ds["test_seed"])
    elif kind == "csv":
        train = load_csv(ds["train_path"])
        test = load_csv(ds["test_path"])
    else:
        train = load_idx(ds["train_images"], ds["train_labels"])
        test = load_idx(ds["test_images"], ds["test_labels"])
    if train.n_features != cfg.model_spec.sizes[0]:
        raise ConfigurationError(
            f"dataset has {train.n_features} features but the model expects "
            f"{cfg.model_spec.sizes[0]} inputs"
        )
    if train.classes > cfg.model_spec.n_classes:
        raise ConfigurationError(
            f"dataset has {train.classes} classes but the model has "
            f"{cfg.model_spec.n_classes} outputs"
        )
    return train, test


def _pretrain_lr_factor(progress: float) -> float:
    # Constant, then linear decay between 50% and 90% of the budget, then
    # constant at 1% of the base rate.
    if progress < 0.5:
        return 1.0
    if progress < 0.9:
        return 1.0 - 0.99 * (progress - 0.5) / 0.4
    return 0.01


def pretrain(cfg: ExperimentConfig) -> Checkpoint:
    """Train the shared starting point with decaying-LR SGD and save it.

    Feature standardization statistics are computed on the training split
    here and stored in the checkpoint; every later phase reuses them.
    """
    train, _ = build_datasets(cfg)
    mean, std = feature_stats(train)
    train_std = apply_standardization(train, mean, std)
    settings = cfg.pretrain
    e = iterations_per_epoch(len(train_std), cfg.batch_size)
    total = settings["epochs"] * e
    w = init_model(cfg.model_spec, cfg.seed)
    state = MomentumState.initial(w, settings["momentum"], settings["weight_decay"])
    stream = iter(batches(train_std, cfg.batch_size, cfg.seed))
    for i in range(1, total + 1):
        lr = settings["lr"] * _pretrain_lr_factor((i - 1) / total)
        loss, grad = loss_and_grad(w, next(stream), settings["l2_coeff"])
        if not np.isfinite(loss.total):
            raise NumericError(f"non-finite loss at iteration {i}")
        try:
            w, state = sgd_step(w, grad, lr, state)
        except NumericError as exc:
            raise NumericError(f"{exc} (iteration {i})") from None
    train_preds = np.argmax(
        ensemble_predict(EnsembleSet((w,), (total,)), train_std.inputs)[0], axis=1
    )
    ckpt = Checkpoint(
        weights=w,
        standardization={"mean": mean.tolist(), "std": std.tolist()},
        meta={
            "role": "w0",
            "seed": cfg.seed,
            "epochs": settings["epochs"],
            "final_train_accuracy": float(np.mean(train_preds == train_std.labels)),
            "created_at": _now(),
        },
    )
    save_checkpoint(cfg.w0_path, ckpt)
    return ckpt


def _standardized_datasets(cfg: ExperimentConfig, standardization: Optional[dict]):
    train, test = build_datasets(cfg)
    if standardization is None:
        return train, test
    mean, std = standardization["mean"], standardization["std"]
    return apply_standardization(train, mean, std), apply_standardization(test, mean, std)


def _metrics_record(probs: np.ndarray, labels: np.ndarray, ece_bins: int) -> dict:
    p = PredictionBatch(probs, labels)
    raw_nll = nll(p)
    return {
        "accuracy": accuracy(p),
        "nll": raw_nll,
        "nll_pct": 100.0 * raw_nll,
        "ece": ece(p, ece_bins),
    }


def run(cfg: ExperimentConfig, w0: Checkpoint):
    """Dispatch to the configured trainer, persist members, write the report.

    Returns ``(EnsembleSet, report dict)``.
    """
    started = _now()
    if w0.spec != cfg.model_spec:
        raise ConfigurationError(
            f"starting checkpoint architecture {w0.spec.sizes} does not match "
            f"config model {cfg.model_spec.sizes}"
        )
    train, test = _standardized_datasets(cfg, w0.standardization)
    e = iterations_per_epoch(len(train), cfg.batch_size)
    sched = cfg.resolve_schedule(e)
    budget = cfg.resolve_budget(e)
    opt_cfg = cfg.optimizer
    opt = MomentumState.initial(w0.weights, opt_cfg["momentum"], opt_cfg["weight_decay"])
    stream = batches(train, cfg.batch_size, cfg.seed)
    l2 = opt_cfg["l2_coeff"]

    algo = cfg.algorithm
    if algo == "swa":
        w_avg, trace = run_swa(w0.weights, sched, budget.total_iters, stream, opt, l2_coeff=l2)
        ensemble = EnsembleSet((w_avg,), (budget.total_iters,))
    elif algo == "fge":
        ensemble, trace = run_fge(w0.weights, sched, budget.total_iters, stream, opt, l2_coeff=l2)
    elif algo == "pfge":
        ensemble, trace = run_pfge(
            w0.weights, sched, budget.total_iters, budget.record_period, stream, opt, l2_coeff=l2
        )
    else:
        # Plain cyclical-LR SGD baseline: same trajectory as the snapshot
        # collectors, but only the final iterate survives as a single model.
        full, trace = run_fge(w0.weights, sched, budget.total_iters, stream, opt, l2_coeff=l2)
        ensemble = EnsembleSet((full.members[-1],), (full.recorded_at[-1],))

    run_dir = cfg.run_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    member_files = []
    for idx, (member, recorded_at) in enumerate(zip(ensemble.members, ensemble.recorded_at)):
        name = f"member-{idx}.ckpt"
        save_checkpoint(
            run_dir / name,
            Checkpoint(
                weights=member,
                standardization=w0.standardization,
                meta={
                    "role": "member",
                    "index": idx,
                    "recorded_at": recorded_at,
                    "algorithm": algo,
                    "seed": cfg.seed,
                    "run_id": cfg.run_id,
                    "created_at": _now(),
                },
            ),
        )
        member_files.append(name)

    ece_bins = cfg.ece_bins
    member_metrics = []
    series = []
    prob_sum = None
    for idx, member in enumerate(ensemble.members):
        single = EnsembleSet((member,), (ensemble.recorded_at[idx],))
        probs, _ = ensemble_predict(single, test.inputs)
        member_metrics.append(
            {
                "index": idx,
                "recorded_at": ensemble.recorded_at[idx],
                "checkpoint": member_files[idx],
                "metrics": _metrics_record(probs, test.labels, ece_bins),
            }
        )
        prob_sum = probs if prob_sum is None else prob_sum + probs
        series.append(
            {
                "n_members": idx + 1,
                "metrics": _metrics_record(prob_sum / (idx + 1), test.labels, ece_bins),
            }
        )

    full_probs, _ = ensemble_predict(ensemble, test.inputs, cfg.last_k)
    bins = reliability(PredictionBatch(full_probs, test.labels), ece_bins)
    bins.write_csv(run_dir / "reliability.csv")
    _write_series_csv(run_dir / "ensemble_series.csv", series)

    report = {
        "format_version": 1,
        "run_id": cfg.run_id,
        "algorithm": algo,
        "seed": cfg.seed,
        "resolved": {
            "alpha1": sched.alpha1,
            "alpha2": sched.alpha2,
            "cycle_len": sched.cycle_len,
            "total_iters": budget.total_iters,
            "record_period": budget.record_period,
            "iterations_per_epoch": e,
        },
        "members": member_metrics,
        "ensemble_series": series,
        "ensemble": {
            "last_k": cfg.last_k,
            "metrics": _metrics_record(full_probs, test.labels, ece_bins),
        },
        "config": cfg.document,
        "timing": {"started_at": started, "finished_at": _now()},
        "files": {
            "reliability_csv": "reliability.csv",
            "ensemble_series_csv": "ensemble_series.csv",
        },
    }
    validate_against_schema(report, "report.schema.json")
    _write_json(run_dir / "report.json", report)
    return ensemble, report


def _write_series_csv(path: Path, series) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_members", "accuracy", "nll", "nll_pct", "ece"])
        for entry in series:
            m = entry["metrics"]
            writer.writerow(
                [
                    entry["n_members"],
                    repr(m["accuracy"]),
                    repr(m["nll"]),
                    repr(m["nll_pct"]),
                    repr(m["ece"]),
                ]
            )


def member_checkpoint_paths(run_dir) -> list:
    """Member checkpoints in a run directory, ordered by index."""
    run_dir = Path(run_dir)
    found = []
    for path in run_dir.glob("member-*.ckpt"):
        match = re.fullmatch(r"member-(\d+)\.ckpt", path.name)
        if match:
            found.append((int(match.group(1)), path))
    return [path for _, path in sorted(found)]


def evaluate(members, dataset: Dataset, last_k: Optional[int], ece_bins: int,
             reliability_csv=None) -> dict:
    """Ensemble metrics of a member list on a raw dataset.

    Standardization statistics stored with the members are applied to the
    dataset first; the members must agree on spec and standardization.
    """
    if not members:
        raise ConfigurationError("no member checkpoints to evaluate")
    spec = members[0].spec
    stats = members[0].standardization
    for ckpt in members[1:]:
        if ckpt.spec != spec:
            raise ConfigurationError("member checkpoints have mismatched architectures")
        if ckpt.standardization != stats:
            raise ConfigurationError("member checkpoints have mismatched standardization")
    if stats is not None:
        dataset = apply_standardization(dataset, stats["mean"], stats["std"])
    ensemble = EnsembleSet(
        tuple(c.weights for c in members), tuple(range(1, len(members) + 1))
    )
    probs, _ = ensemble_predict(ensemble, dataset.inputs, last_k)
    record = {
        "n_members": len(members),
        "last_k": last_k,
        "metrics": _metrics_record(probs, dataset.labels, ece_bins),
    }
    if reliability_csv is not None:
        bins = reliability(PredictionBatch(probs, dataset.labels), ece_bins)
        bins.write_csv(reliability_csv)
        record["reliability_csv"] = str(reliability_csv)
    return record


def _select_pair(cfg: ExperimentConfig):
    paths = member_checkpoint_paths(cfg.run_dir)
    if len(paths) < 2:
        raise ConfigurationError(
            f"need at least 2 member checkpoints in {cfg.run_dir} to connect"
        )
    if cfg.connectivity["pair"] == "last":
        return paths[-2], paths[-1]
    rng = stream_rng(cfg.seed, STREAM_CURVE, index=1)
    start = int(rng.integers(0, len(paths) - 1))
    return paths[start], paths[start + 1]


def connectivity_run(cfg: ExperimentConfig, member_a=None, member_b=None) -> dict:
    """Train a curve between two members, profile it, and compute the
    mode-connectivity gap. Artifacts land in ``{run_dir}/connectivity/``."""
    settings = cfg.connectivity
    if member_a is None or member_b is None:
        member_a, member_b = _select_pair(cfg)
    ckpt_a = load_checkpoint(member_a)
    ckpt_b = load_checkpoint(member_b)
    if ckpt_a.spec != ckpt_b.spec:
        raise ConfigurationError("curve endpoints have mismatched architectures")
    if ckpt_a.standardization != ckpt_b.standardization:
        raise ConfigurationError("curve endpoints have mismatched standardization")
    train, test = _standardized_datasets(cfg, ckpt_a.standardization)
    k = settings["k"]
    iters = settings["iters"]
    if iters == 0:
        curve = initial_curve(ckpt_a.weights, ckpt_b.weights, k)
    else:
        stream = batches(train, cfg.batch_size, cfg.seed)
        curve = train_curve(
            ckpt_a.weights,
            ckpt_b.weights,
            k,
            iters,
            stream,
            settings["lr"],
            cfg.seed,
            l2_coeff=cfg.optimizer["l2_coeff"],
        )
    grid_size = settings["grid_size"]
    profile = profile_curve(curve, grid_size, train, test, cfg.optimizer["l2_coeff"])
    mc, t_star = mc_value(curve, grid_size, train, l2_coeff=cfg.optimizer["l2_coeff"])

    outdir = cfg.run_dir / "connectivity"
    outdir.mkdir(parents=True, exist_ok=True)
    profile.write_csv(outdir / "curve_profile.csv")
    for j, control in enumerate(curve.controls):
        save_checkpoint(
            outdir / f"curve-control-{j}.ckpt",
            Checkpoint(
                weights=control,
                standardization=ckpt_a.standardization,
                meta={"role": "curve-control", "index": j, "created_at": _now()},
            ),
        )
    record = {
        "mc": mc,
        "mc_abs": abs(mc),
        "t_star": t_star,
        "k": k,
        "iters": iters,
        "lr": settings["lr"],
        "grid_size": grid_size,
        "member_a": str(member_a),
        "member_b": str(member_b),
        "train_loss_summary": profile.train_loss_summary,
        "test_error_summary": profile.test_error_summary,
        "files": {"profile_csv": "curve_profile.csv"},
    }
    _write_json(outdir / "connectivity.json", record)
    return record


def load_report(run_dir) -> dict:
    path = Path(run_dir) / "report.json"
    return json.loads(path.read_text())


def format_report(report: dict) -> str:
    """Human-readable rendering of a run report."""
    lines = []
    resolved = report["resolved"]
    lines.append(
        f"run {report['run_id']}  algorithm={report['algorithm']}  seed={report['seed']}"
    )
    lines.append(
        "  schedule: alpha1={alpha1} alpha2={alpha2} cycle_len={cycle_len} "
        "total_iters={total_iters} record_period={record_period}".format(**resolved)
    )
    lines.append("  snapshots:")
    lines.append("    idx  iter  accuracy    nll       ece")
    for member in report["members"]:
        m = member["metrics"]
        lines.append(
            f"    {member['index']:>3}  {member['recorded_at']:>4}  "
            f"{m['accuracy']:.4f}    {m['nll']:.4f}    {m['ece']:.4f}"
        )
    lines.append("  ensemble vs. member count:")
    lines.append("    m    accuracy    nll       ece")
    for entry in report["ensemble_series"]:
        m = entry["metrics"]
        lines.append(
            f"    {entry['n_members']:>3}  {m['accuracy']:.4f}    {m['nll']:.4f}    {m['ece']:.4f}"
        )
    full = report["ensemble"]["metrics"]
    lines.append(
        f"  final ensemble (last_k={report['ensemble']['last_k']}): "
        f"accuracy={full['accuracy']:.4f} nll={full['nll']:.4f} "
        f"nll_pct={full['nll_pct']:.2f} ece={full['ece']:.4f}"
    )
    return "\n".join(lines)
