"""The audio-visual highlight detection network and its training loop.

Architecture: per-modality linear projections to a shared width, unimodal
self-attention, bimodal cross-attention (queries come from the modality named
first, keys/values from the other), and a score regressor (SR) that fuses the
attended streams with softmax-normalized scalar gates and maps each clip to a
sigmoid score through two fully-connected layers.

Variants: AV (full), A / V (one modality, one self-attention), SA_EARLY
(concatenate projections, one self-attention), SA_LATE (two self-attentions,
concatenate outputs). ``extra_sa`` / ``extra_fc`` add a self-attention over
the fused stream and one more FC layer inside SR (the large-dataset variant).
"""

from __future__ import annotations

import dataclasses
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import rng
from .clustering import PseudoCategoryModel, assign, pool_video
from .optim import Adam, ParamSet
from .pseudo import CategoryPool, PseudoHighlight, clip_scores, fuse_and_select
from .store import Dataset, VideoRecord

VARIANTS = ("AV", "A", "V", "SA_EARLY", "SA_LATE")

GRAD_CLIP_NORM = 5.0  # batch-of-one Adam occasionally spikes without this

CKPT_MAGIC = b"AVHC"
CKPT_VERSION = 1


@dataclass
class ModelConfig:
    variant: str = "AV"
    d_model: int = 128
    extra_sa: bool = False
    extra_fc: bool = False
    lr: float = 2.5e-3
    epochs: int = 20
    seed: int = 0
    t: float = 0.5

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if (self.extra_sa or self.extra_fc) and self.variant != "AV":
            raise ValueError("extra_sa/extra_fc only apply to the AV variant")


@dataclass
class HighlightModel:
    config: ModelConfig
    d_v: int
    d_a: int
    params: ParamSet


def _glorot(gen: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return gen.uniform(-a, a, size=(fan_in, fan_out))


def _add_linear(params: ParamSet, gen, name: str, d_in: int, d_out: int) -> None:
    params[f"{name}.W"] = ad.leaf(_glorot(gen, d_in, d_out), name=f"{name}.W")
    params[f"{name}.b"] = ad.leaf(np.zeros((1, d_out)), name=f"{name}.b")


def _add_attention(params: ParamSet, gen, name: str, d: int) -> None:
    for part in ("Wq", "Wk", "Wv", "Wo"):
        params[f"{name}.{part}"] = ad.leaf(_glorot(gen, d, d), name=f"{name}.{part}")


def _n_streams(config: ModelConfig) -> int:
    return 4 if config.variant == "AV" else 1


def _fused_width(config: ModelConfig) -> int:
    if config.variant in ("SA_EARLY", "SA_LATE"):
        return 2 * config.d_model
    return config.d_model


def build_model(config: ModelConfig, d_v: int, d_a: int,
                seed: int | None = None) -> HighlightModel:
    """Initialize the parameter set for a variant; deterministic per seed."""
    if d_v < 1 or d_a < 1:
        raise ValueError("feature widths must be positive")
    seed = config.seed if seed is None else seed
    gen = rng.stream(seed, rng.STREAM_MODEL)
    dm = config.d_model
    params: ParamSet = {}
    if config.variant in ("AV", "V", "SA_EARLY", "SA_LATE"):
        _add_linear(params, gen, "visual_proj", d_v, dm)
    if config.variant in ("AV", "A", "SA_EARLY", "SA_LATE"):
        _add_linear(params, gen, "audio_proj", d_a, dm)
    if config.variant in ("AV", "V", "SA_LATE"):
        _add_attention(params, gen, "self_attn_visual", dm)
    if config.variant in ("AV", "A", "SA_LATE"):
        _add_attention(params, gen, "self_attn_audio", dm)
    if config.variant == "AV":
        _add_attention(params, gen, "cross_attn_a2v", dm)
        _add_attention(params, gen, "cross_attn_v2a", dm)
    if config.variant == "SA_EARLY":
        _add_attention(params, gen, "fused_attn", 2 * dm)
    params["sr_gates"] = ad.leaf(np.zeros((1, _n_streams(config))), name="sr_gates")
    if config.extra_sa:
        _add_attention(params, gen, "sr_attn", _fused_width(config))
    _add_linear(params, gen, "sr_fc1", _fused_width(config), dm)
    if config.extra_fc:
        _add_linear(params, gen, "sr_fc_extra", dm, dm)
    _add_linear(params, gen, "sr_fc2", dm, 1)
    return HighlightModel(config=config, d_v=d_v, d_a=d_a, params=params)


def _attn(params: ParamSet, name: str, xq: ad.Tensor, xkv: ad.Tensor) -> ad.Tensor:
    return ad.attention(xq, xkv,
                        params[f"{name}.Wq"], params[f"{name}.Wk"],
                        params[f"{name}.Wv"], params[f"{name}.Wo"])


def _linear(params: ParamSet, name: str, x: ad.Tensor) -> ad.Tensor:
    return ad.linear(x, params[f"{name}.W"], params[f"{name}.b"])


def forward_graph(model: HighlightModel, visual: np.ndarray,
                  audio: np.ndarray) -> ad.Tensor:
    """Build the forward graph for one video; returns (n, 1) sigmoid scores."""
    cfg = model.config
    p = model.params
    if visual.shape[0] < 1:
        raise ValueError("video has no clips")
    if visual.shape[1] != model.d_v or audio.shape[1] != model.d_a:
        raise ValueError(
            f"feature width mismatch: got ({visual.shape[1]}, {audio.shape[1]}), "
            f"model expects ({model.d_v}, {model.d_a})")
    xv = xa = None
    if "visual_proj.W" in p:
        xv = _linear(p, "visual_proj", ad.leaf(visual.astype(np.float64)))
    if "audio_proj.W" in p:
        xa = _linear(p, "audio_proj", ad.leaf(audio.astype(np.float64)))

    if cfg.variant == "AV":
        vv = _attn(p, "self_attn_visual", xv, xv)
        aa = _attn(p, "self_attn_audio", xa, xa)
        av = _attn(p, "cross_attn_a2v", aa, vv)  # audio queries over visual
        va = _attn(p, "cross_attn_v2a", vv, aa)  # visual queries over audio
        streams = [vv, aa, va, av]
    elif cfg.variant == "V":
        streams = [_attn(p, "self_attn_visual", xv, xv)]
    elif cfg.variant == "A":
        streams = [_attn(p, "self_attn_audio", xa, xa)]
    elif cfg.variant == "SA_EARLY":
        x = ad.concat_cols(xv, xa)
        streams = [_attn(p, "fused_attn", x, x)]
    else:  # SA_LATE
        vv = _attn(p, "self_attn_visual", xv, xv)
        aa = _attn(p, "self_attn_audio", xa, xa)
        streams = [ad.concat_cols(vv, aa)]

    gates = ad.softmax_rows(p["sr_gates"])
    fused = ad.weighted_sum(streams, gates)
    if cfg.extra_sa:
        fused = _attn(p, "sr_attn", fused, fused)
    h = ad.relu(_linear(p, "sr_fc1", fused))
    if cfg.extra_fc:
        h = ad.relu(_linear(p, "sr_fc_extra", h))
    return ad.sigmoid(_linear(p, "sr_fc2", h))


def forward(model: HighlightModel, record: VideoRecord) -> np.ndarray:
    """Highlight scores for one video, as a length-n vector in (0, 1)."""
    return forward_graph(model, record.visual, record.audio).data.reshape(-1)


def _clip_gradients(params, max_norm: float) -> None:
    total = math.sqrt(sum(float((p.grad ** 2).sum()) for p in params.values()))
    if total > max_norm:
        factor = max_norm / total
        for p in params.values():
            p.grad *= factor


def train(model: HighlightModel, dataset: Dataset,
          pseudo: dict[str, PseudoHighlight] | None = None,
          targets: dict[str, np.ndarray] | None = None) -> list[float]:
    """Optimize on the train split; one Adam step per video.

    Targets come from ``pseudo`` (the usual path) or an explicit
    ``targets`` map (supervised ablation). Returns per-epoch mean loss.
    """
    cfg = model.config
    if targets is None:
        if pseudo is None:
            raise ValueError("need pseudo highlights or explicit targets")
        targets = {vid: ph.targets for vid, ph in pseudo.items()}
    videos = sorted(dataset.split("train"), key=lambda r: r.video_id)
    for rec in videos:
        if rec.video_id not in targets:
            raise ValueError(f"no training targets for video {rec.video_id!r}")
    opt = Adam(model.params, lr=cfg.lr)
    losses: list[float] = []
    for epoch in range(cfg.epochs):
        gen = rng.stream(cfg.seed, rng.STREAM_TRAIN, epoch)
        order = gen.permutation(len(videos))
        epoch_losses = []
        for i in order:
            rec = videos[i]
            scores = forward_graph(model, rec.visual, rec.audio)
            loss = ad.bce_loss(scores, targets[rec.video_id])
            value = float(loss.data[0, 0])
            if not np.isfinite(value):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, video {rec.video_id!r}")
            ad.backward(loss)
            _clip_gradients(model.params, GRAD_CLIP_NORM)
            opt.step()
            epoch_losses.append(value)
        losses.append(float(np.mean(epoch_losses)))
    return losses


def predict(model: HighlightModel, dataset: Dataset,
            split: str = "test") -> dict[str, np.ndarray]:
    """Pure inference over one split."""
    return {rec.video_id: forward(model, rec) for rec in dataset.split(split)}


def pseudo_as_prediction(cat_model: PseudoCategoryModel,
                         pools: dict[int, CategoryPool], dataset: Dataset,
                         split: str = "test", metric: str = "cosine",
                         exclude_self: bool = False) -> dict[str, np.ndarray]:
    """Recurrence-score baseline: fused pseudo-highlight scores as predictions.

    Each video is assigned to its nearest centroid and scored against that
    category's train pool.
    """
    out: dict[str, np.ndarray] = {}
    for rec in dataset.split(split):
        cat = assign(cat_model, pool_video(rec))
        if cat not in pools or pools[cat].size == 0:
            raise ValueError(f"no train pool for category {cat}")
        aph = clip_scores(rec, pools[cat], "audio", metric, exclude_self)
        vph = clip_scores(rec, pools[cat], "visual", metric, exclude_self)
        avph, _ = fuse_and_select(aph, vph, t=1.0)
        out[rec.video_id] = avph
    return out


def save_model(model: HighlightModel, path: Path) -> None:
    """Binary checkpoint: JSON manifest + float64 payloads, name-sorted."""
    names = sorted(model.params)
    header = {
        "config": dataclasses.asdict(model.config),
        "d_v": model.d_v,
        "d_a": model.d_a,
        "params": [{"name": n, "rows": model.params[n].shape[0],
                    "cols": model.params[n].shape[1]} for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", CKPT_MAGIC, CKPT_VERSION, len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(model.params[n].data, dtype="<f8").tobytes())


def load_model(path: Path) -> HighlightModel:
    raw = Path(path).read_bytes()
    magic, version, hlen = struct.unpack_from("<4sII", raw)
    if magic != CKPT_MAGIC or version != CKPT_VERSION:
        raise ValueError(f"{path}: not a model checkpoint")
    header = json.loads(raw[12:12 + hlen])
    config = ModelConfig(**header["config"])
    params: ParamSet = {}
    offset = 12 + hlen
    for entry in header["params"]:
        count = entry["rows"] * entry["cols"]
        data = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        params[entry["name"]] = ad.leaf(
            data.reshape(entry["rows"], entry["cols"]).copy(), name=entry["name"])
        offset += 8 * count
    return HighlightModel(config=config, d_v=header["d_v"], d_a=header["d_a"],
                          params=params)
