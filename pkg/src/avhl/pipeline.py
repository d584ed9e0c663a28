"""End-to-end orchestration: validate -> cluster -> pseudo -> train -> predict -> eval.

Every stage writes its artifact into the run directory; a final
``artifacts.json`` records content hashes so reruns can be audited for
determinism. Stage failures carry a stable exit code.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import clustering, model as hnet, pseudo as ph, rng, store
from .metrics import EvalReport, binarize_gt, evaluate
from .synth import SynthConfig, generate

STAGE_CODES = {"validate": 10, "cluster": 20, "pseudo": 30, "train": 40, "eval": 50}

STREAM_SUBSET = 5  # data-fraction subsampling


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.exit_code = STAGE_CODES[stage]


@dataclass
class RunConfig:
    """One pipeline run. Defaults follow the reference configuration."""

    seed: int = 0
    # cluster
    k_range: tuple[int, int] = (4, 15)
    reducer: str = "pca"
    # pseudo
    t: float = 0.5
    metric: str = "cosine"
    exclude_self: bool = False
    target_source: str = "avph"
    # train
    variant: str = "AV"
    d_model: int = 128
    extra_sa: bool = False
    extra_fc: bool = False
    lr: float = 2.5e-3
    epochs: int = 20
    targets: str = "pseudo"  # pseudo | gt (supervised ablation)
    data_fraction: float = 1.0
    predictor: str = "model"  # model | pseudo (recurrence-score baseline)
    # eval
    gt_policy: str = "top-rating"
    eval_split: str = "test"

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        flat: dict = {}
        for key, value in raw.items():
            if key in ("cluster", "pseudo", "train", "eval") and isinstance(value, dict):
                flat.update(value)
            else:
                flat[key] = value
        if "k_range" in flat:
            flat["k_range"] = tuple(flat["k_range"])
        return cls(**flat)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["k_range"] = list(d["k_range"])
        return d

    def model_config(self) -> hnet.ModelConfig:
        return hnet.ModelConfig(
            variant=self.variant, d_model=self.d_model,
            extra_sa=self.extra_sa, extra_fc=self.extra_fc,
            lr=self.lr, epochs=self.epochs, seed=self.seed, t=self.t)


def _restrict_train(dataset: store.Dataset, fraction: float,
                    seed: int) -> store.Dataset:
    """Drop train videos so only ``fraction`` of them remain (seeded)."""
    if fraction >= 1.0:
        return dataset
    train_ids = sorted(r.video_id for r in dataset.split("train"))
    keep_n = max(1, round(fraction * len(train_ids)))
    gen = rng.stream(seed, STREAM_SUBSET)
    keep = set(np.array(train_ids)[gen.permutation(len(train_ids))[:keep_n]])
    records = [r for r in dataset.records
               if r.split != "train" or r.video_id in keep]
    return store.Dataset(name=dataset.name, d_v=dataset.d_v, d_a=dataset.d_a,
                         records=records,
                         very_good_threshold=dataset.very_good_threshold)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_pipeline(dataset_root: Path, out_dir: Path,
                 config: RunConfig) -> EvalReport:
    """Execute the full pipeline; artifacts land in ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: list[Path] = []

    try:
        dataset = store.read_dataset(dataset_root)
    except (store.FormatError, OSError) as exc:
        raise StageError("validate", str(exc)) from exc
    dataset = _restrict_train(dataset, config.data_fraction, config.seed)

    try:
        pooled = clustering.pool_split(dataset, "train")
        cat_model = clustering.select_k(
            pooled, k_range=config.k_range, seed=config.seed,
            reducer_method=config.reducer)
    except ValueError as exc:
        raise StageError("cluster", str(exc)) from exc
    clustering.save_model(cat_model, out_dir / "pseudo_categories.json")
    artifacts.append(out_dir / "pseudo_categories.json")

    try:
        pools = ph.build_pools(dataset, cat_model)
        pseudo = ph.build_pseudo_highlights(
            dataset, cat_model, t=config.t, metric=config.metric,
            exclude_self=config.exclude_self,
            target_source=config.target_source, pools=pools)
    except ValueError as exc:
        raise StageError("pseudo", str(exc)) from exc
    ph.save_pseudo_highlights(pseudo, out_dir / "pseudo_highlights.json")
    artifacts.append(out_dir / "pseudo_highlights.json")

    if config.predictor == "model":
        try:
            net = hnet.build_model(config.model_config(), dataset.d_v, dataset.d_a)
            if config.targets == "gt":
                targets = {}
                for rec in dataset.split("train"):
                    if rec.gt_scores is None:
                        raise ValueError(
                            f"supervised run needs gt for {rec.video_id!r}")
                    targets[rec.video_id] = binarize_gt(
                        rec.gt_scores, config.gt_policy,
                        dataset.very_good_threshold)
                losses = hnet.train(net, dataset, targets=targets)
            else:
                losses = hnet.train(net, dataset, pseudo=pseudo)
        except (ValueError, FloatingPointError) as exc:
            raise StageError("train", str(exc)) from exc
        hnet.save_model(net, out_dir / "model.ckpt")
        _write_json(out_dir / "train_log.json", {"epoch_loss": losses})
        artifacts += [out_dir / "model.ckpt", out_dir / "train_log.json"]
        predictions = hnet.predict(net, dataset, split=config.eval_split)
    elif config.predictor == "pseudo":
        predictions = hnet.pseudo_as_prediction(
            cat_model, pools, dataset, split=config.eval_split,
            metric=config.metric, exclude_self=config.exclude_self)
    else:
        raise StageError("train", f"unknown predictor {config.predictor!r}")

    scores_dir = out_dir / "scores"
    scores_dir.mkdir(exist_ok=True)
    for vid in sorted(predictions):
        path = scores_dir / f"{vid}.avhf"
        store.write_avhf(path, np.asarray(predictions[vid],
                                          dtype=np.float32).reshape(-1, 1))
        artifacts.append(path)

    try:
        report = evaluate(predictions, dataset, split=config.eval_split,
                          gt_policy=config.gt_policy)
    except ValueError as exc:
        raise StageError("eval", str(exc)) from exc
    _write_json(out_dir / "report.json", report.to_dict())
    artifacts.append(out_dir / "report.json")

    _write_json(out_dir / "run_config.json", config.to_dict())
    artifacts.append(out_dir / "run_config.json")
    _write_json(out_dir / "artifacts.json",
                {str(p.relative_to(out_dir)): _sha256(p) for p in artifacts})
    return report


def synth_and_run(synth_config: SynthConfig, out_dir: Path,
                  run_config: RunConfig) -> EvalReport:
    """Generate a synthetic dataset under ``out_dir`` and run the pipeline on it."""
    out_dir = Path(out_dir)
    data_root = out_dir / "dataset"
    store.write_dataset(generate(synth_config), data_root)
    return run_pipeline(data_root, out_dir / "run", run_config)


# --- ablation runner ---------------------------------------------------------

AXIS_SETTERS = {
    "targets": lambda cfg, v: dataclasses.replace(cfg, target_source=v),
    "model": lambda cfg, v: dataclasses.replace(cfg, variant=v),
    "metric": lambda cfg, v: dataclasses.replace(cfg, metric=v),
    "k": lambda cfg, v: dataclasses.replace(cfg, k_range=(int(v), int(v))),
    "data_fraction": lambda cfg, v: dataclasses.replace(cfg, data_fraction=float(v)),
    "supervised": lambda cfg, v: dataclasses.replace(
        cfg, targets="gt" if v else "pseudo"),
    "predictor": lambda cfg, v: dataclasses.replace(cfg, predictor=v),
}


def _worker_count() -> int:
    cap = os.environ.get("RH_THREADS")
    return max(1, int(cap)) if cap else min(4, os.cpu_count() or 1)


def ablate(dataset_root: Path, axes: dict[str, list], seeds: list[int],
           base_config: RunConfig, out_dir: Path) -> list[dict]:
    """Run the cross product of ablation axes over the given seeds.

    Emits one row per cell with per-metric mean and standard deviation, and
    writes ``ablation.json`` plus a plain-text table (percentages).
    """
    for axis in axes:
        if axis not in AXIS_SETTERS:
            raise ValueError(f"unknown ablation axis {axis!r}")
    out_dir = Path(out_dir)
    names = sorted(axes)
    combos = list(itertools.product(*(axes[a] for a in names))) or [()]

    jobs = []
    for combo in combos:
        cell = dict(zip(names, combo))
        cfg = base_config
        for axis, value in cell.items():
            cfg = AXIS_SETTERS[axis](cfg, value)
        key = "baseline" if not cell else ",".join(
            f"{a}={cell[a]}" for a in names)
        for seed in seeds:
            jobs.append((key, cell, dataclasses.replace(cfg, seed=seed)))

    def run(job):
        key, cell, cfg = job
        cell_dir = out_dir / "cells" / key.replace(",", "__").replace("=", "-")
        report = run_pipeline(dataset_root, cell_dir / f"seed{cfg.seed}", cfg)
        return key, cell, cfg.seed, report

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        results = list(pool.map(run, jobs))

    rows = []
    for key in sorted({k for k, *_ in results}):
        cell_results = sorted([r for r in results if r[0] == key],
                              key=lambda r: r[2])
        cell = cell_results[0][1]
        metrics = {}
        for metric_name, attr in (("mAP", "map"), ("HIT@1", "hit_at_1"),
                                  ("top5_mAP", "top5_map")):
            values = [getattr(r[3], attr) for r in cell_results]
            metrics[metric_name] = {"mean": float(np.mean(values)),
                                    "sd": float(np.std(values))}
        rows.append({"cell": key, "axes": cell, "seeds": [r[2] for r in cell_results],
                     "metrics": metrics})

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "ablation.json", rows)
    lines = [f"{'cell':<40} {'mAP':>16} {'HIT@1':>16} {'top5_mAP':>16}"]
    for row in rows:
        cols = [
            f"{row['metrics'][m]['mean'] * 100:6.2f} ±{row['metrics'][m]['sd'] * 100:5.2f}"
            for m in ("mAP", "HIT@1", "top5_mAP")]
        lines.append(f"{row['cell']:<40} " + " ".join(f"{c:>16}" for c in cols))
    (out_dir / "ablation.txt").write_text("\n".join(lines) + "\n")
    return rows
