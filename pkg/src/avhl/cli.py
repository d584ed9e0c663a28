"""Command-line interface for the highlight detection pipeline."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import clustering, model as hnet, pseudo as ph, store
from .metrics import evaluate
from .pipeline import RunConfig, StageError, ablate as run_ablate, run_pipeline
from .synth import SynthConfig, generate


@click.group()
def main():
    """Unsupervised audio-visual highlight detection on clip features."""


def _load_run_config(config_path: str | None, seed: int | None) -> RunConfig:
    raw = json.loads(Path(config_path).read_text()) if config_path else {}
    cfg = RunConfig.from_dict(raw)
    if seed is not None:
        cfg.seed = seed
    return cfg


@main.command()
@click.argument("root", type=click.Path(exists=True))
def validate(root):
    """Validate a dataset root; exit 10 on violations."""
    try:
        dataset = store.read_dataset(Path(root))
    except store.FormatError as exc:
        click.echo(f"invalid: {exc}", err=True)
        sys.exit(10)
    report = store.validate_dataset(dataset)
    for violation in report:
        click.echo(str(violation), err=True)
    if report:
        sys.exit(10)
    click.echo(f"ok: {len(dataset.records)} videos, "
               f"d_v={dataset.d_v}, d_a={dataset.d_a}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="SynthConfig JSON; defaults used when omitted.")
@click.option("--out", "out_root", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
def synth(config_path, out_root, seed):
    """Generate a synthetic planted-recurrence dataset."""
    raw = json.loads(Path(config_path).read_text()) if config_path else {}
    if seed is not None:
        raw["seed"] = seed
    cfg = SynthConfig.from_dict(raw)
    paths = store.write_dataset(generate(cfg), Path(out_root))
    click.echo(f"wrote {len(paths)} files to {out_root}")


@main.command()
@click.option("--dataset", "root", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--k-min", type=int, default=4, show_default=True)
@click.option("--k-max", type=int, default=15, show_default=True)
@click.option("--reducer", type=click.Choice(["pca", "identity"]), default="pca")
@click.option("--seed", type=int, default=0)
def cluster(root, out_path, k_min, k_max, reducer, seed):
    """Fit pseudo-categories on the train split."""
    dataset = store.read_dataset(Path(root))
    pooled = clustering.pool_split(dataset, "train")
    model = clustering.select_k(pooled, k_range=(k_min, k_max), seed=seed,
                                reducer_method=reducer)
    clustering.save_model(model, Path(out_path))
    click.echo(f"K={model.k}, silhouette={model.silhouette_by_k[model.k]:.4f}")


@main.command()
@click.option("--dataset", "root", required=True, type=click.Path(exists=True))
@click.option("--categories", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--t", type=float, default=0.5, show_default=True)
@click.option("--metric", type=click.Choice(["cosine", "pcc"]), default="cosine")
@click.option("--exclude-self-video", "exclude_self", is_flag=True)
@click.option("--target-source", type=click.Choice(["avph", "aph", "vph"]),
              default="avph")
def pseudo(root, categories, out_path, t, metric, exclude_self, target_source):
    """Compute recurrence pseudo-highlights for the train split."""
    dataset = store.read_dataset(Path(root))
    cat_model = clustering.load_model(Path(categories))
    highlights = ph.build_pseudo_highlights(
        dataset, cat_model, t=t, metric=metric,
        exclude_self=exclude_self, target_source=target_source)
    ph.save_pseudo_highlights(highlights, Path(out_path))
    click.echo(f"wrote pseudo-highlights for {len(highlights)} videos")


@main.command()
@click.option("--dataset", "root", required=True, type=click.Path(exists=True))
@click.option("--pseudo", "pseudo_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--variant", type=click.Choice(hnet.VARIANTS), default="AV")
@click.option("--d-model", type=int, default=128, show_default=True)
@click.option("--lr", type=float, default=2.5e-3, show_default=True)
@click.option("--epochs", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--t", type=float, default=0.5)
@click.option("--extra-sa/--no-extra-sa", default=False)
@click.option("--extra-fc/--no-extra-fc", default=False)
def train(root, pseudo_path, out_path, variant, d_model, lr, epochs, seed, t,
          extra_sa, extra_fc):
    """Train the highlight network on pseudo-highlight targets."""
    dataset = store.read_dataset(Path(root))
    highlights = ph.load_pseudo_highlights(Path(pseudo_path))
    config = hnet.ModelConfig(variant=variant, d_model=d_model, lr=lr,
                              epochs=epochs, seed=seed, t=t,
                              extra_sa=extra_sa, extra_fc=extra_fc)
    net = hnet.build_model(config, dataset.d_v, dataset.d_a)
    losses = hnet.train(net, dataset, pseudo=highlights)
    hnet.save_model(net, Path(out_path))
    click.echo(f"final epoch loss {losses[-1]:.4f}; checkpoint at {out_path}")


@main.command()
@click.option("--dataset", "root", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--split", type=click.Choice(store.VALID_SPLITS), default="test")
def predict(root, model_path, out_dir, split):
    """Write per-video score files (AVHF, d=1) for a split."""
    dataset = store.read_dataset(Path(root))
    net = hnet.load_model(Path(model_path))
    scores = hnet.predict(net, dataset, split=split)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for vid in sorted(scores):
        store.write_avhf(out / f"{vid}.avhf",
                         np.asarray(scores[vid], dtype=np.float32).reshape(-1, 1))
    click.echo(f"wrote scores for {len(scores)} videos")


@main.command(name="eval")
@click.option("--dataset", "root", required=True, type=click.Path(exists=True))
@click.option("--scores", "scores_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--split", type=click.Choice(store.VALID_SPLITS), default="test")
@click.option("--gt-policy", default="top-rating", show_default=True)
def eval_cmd(root, scores_dir, out_path, split, gt_policy):
    """Score predictions against ground truth; write report.json."""
    dataset = store.read_dataset(Path(root))
    predictions = {}
    for path in sorted(Path(scores_dir).glob("*.avhf")):
        predictions[path.name[:-len(".avhf")]] = store.read_avhf(path).reshape(-1)
    report = evaluate(predictions, dataset, split=split, gt_policy=gt_policy)
    Path(out_path).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    click.echo(f"mAP {report.map * 100:.2f}  HIT@1 {report.hit_at_1 * 100:.2f}  "
               f"top-5 mAP {report.top5_map * 100:.2f}  "
               f"({report.n_videos_evaluated} videos)")


@main.command()
@click.option("--dataset", "root", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
def pipeline(root, out_dir, config_path, seed):
    """Run the full chain and write all artifacts."""
    cfg = _load_run_config(config_path, seed)
    try:
        report = run_pipeline(Path(root), Path(out_dir), cfg)
    except StageError as exc:
        click.echo(str(exc), err=True)
        sys.exit(exc.exit_code)
    click.echo(f"mAP {report.map * 100:.2f}  HIT@1 {report.hit_at_1 * 100:.2f}  "
               f"top-5 mAP {report.top5_map * 100:.2f}")


@main.command()
@click.option("--dataset", "root", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--axes", "axes_json", default="{}",
              help='JSON, e.g. {"metric": ["cosine", "pcc"]}')
@click.option("--seeds", default="0", help="comma-separated seed list")
def ablate(root, out_dir, config_path, axes_json, seeds):
    """Run the cross product of ablation axes; write ablation.json/.txt."""
    cfg = _load_run_config(config_path, None)
    axes = json.loads(axes_json)
    seed_list = [int(s) for s in seeds.split(",") if s.strip()]
    try:
        rows = run_ablate(Path(root), axes, seed_list, cfg, Path(out_dir))
    except StageError as exc:
        click.echo(str(exc), err=True)
        sys.exit(exc.exit_code)
    click.echo((Path(out_dir) / "ablation.txt").read_text().rstrip())
    click.echo(f"{len(rows)} cells")


if __name__ == "__main__":
    main()
