"""Recurrence-based pseudo-highlight generation.

Every clip of a video is compared against all clips pooled across the videos
of its pseudo-category. The per-modality mean similarity is the clip's audio
or visual pseudo-highlight score; their average, binarized at the top-t
fraction, becomes the training target.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import PseudoCategoryModel
from .store import Dataset, VideoRecord

ZERO_NORM_EPS = 1e-12


def cosine_sim(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0 if either vector is (numerically) zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < ZERO_NORM_EPS or nv < ZERO_NORM_EPS:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def pcc_sim(u: np.ndarray, v: np.ndarray) -> float:
    """Pearson correlation of the two vectors' entries; 0 for constant input."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    if u.size < 2:
        raise ValueError("pcc needs vectors of length >= 2")
    return cosine_sim(u - u.mean(), v - v.mean())


def _normalize_rows(x: np.ndarray, metric: str) -> np.ndarray:
    """Rows scaled to unit norm; degenerate rows (which score 0) become zero."""
    x = np.asarray(x, dtype=np.float64)
    if metric == "pcc":
        x = x - x.mean(axis=1, keepdims=True)
    elif metric != "cosine":
        raise ValueError(f"unknown metric {metric!r}")
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    safe = np.where(norms < ZERO_NORM_EPS, 1.0, norms)
    out = x / safe
    out[norms[:, 0] < ZERO_NORM_EPS] = 0.0
    return out


@dataclass
class CategoryPool:
    """All clips of all member videos of one pseudo-category, stacked."""

    category: int
    visual: np.ndarray  # (S, d_v) float64
    audio: np.ndarray   # (S, d_a) float64
    provenance: list[tuple[str, int]]  # (video_id, clip index) per row

    @property
    def size(self) -> int:
        return self.visual.shape[0]


def build_pools(dataset: Dataset, model: PseudoCategoryModel) -> dict[int, CategoryPool]:
    """Stack train-split clips per pseudo-category."""
    members: dict[int, list[VideoRecord]] = {}
    for rec in dataset.split("train"):
        cat = model.assignments.get(rec.video_id)
        if cat is None:
            raise ValueError(f"train video {rec.video_id!r} has no category assignment")
        members.setdefault(cat, []).append(rec)
    pools = {}
    for cat, recs in members.items():
        provenance = [(r.video_id, i) for r in recs for i in range(r.n_clips)]
        pools[cat] = CategoryPool(
            category=cat,
            visual=np.vstack([r.visual for r in recs]).astype(np.float64),
            audio=np.vstack([r.audio for r in recs]).astype(np.float64),
            provenance=provenance,
        )
    return pools


def clip_scores(record: VideoRecord, pool: CategoryPool, modality: str,
                metric: str = "cosine", exclude_self: bool = False) -> np.ndarray:
    """Mean similarity of each clip against every pooled clip.

    The video's own clips are part of the pool by default; ``exclude_self``
    drops them for sensitivity runs.
    """
    if modality == "audio":
        x, pooled = record.audio, pool.audio
    elif modality == "visual":
        x, pooled = record.visual, pool.visual
    else:
        raise ValueError(f"unknown modality {modality!r}")
    if exclude_self:
        keep = np.array([vid != record.video_id for vid, _ in pool.provenance])
        pooled = pooled[keep]
    if pooled.shape[0] == 0:
        raise ValueError(f"empty pool for category {pool.category}")
    if x.shape[1] != pooled.shape[1]:
        raise ValueError(
            f"{modality} width mismatch: {x.shape[1]} vs pool {pooled.shape[1]}")
    sims = _normalize_rows(x, metric) @ _normalize_rows(pooled, metric).T
    return sims.mean(axis=1)


def fuse_and_select(aph: np.ndarray, vph: np.ndarray,
                    t: float) -> tuple[np.ndarray, np.ndarray]:
    """Average the two score vectors and mark the top ceil(t*n) clips.

    Boundary ties break toward the earlier clip index.
    """
    aph = np.asarray(aph, dtype=np.float64)
    vph = np.asarray(vph, dtype=np.float64)
    if aph.shape != vph.shape:
        raise ValueError(f"length mismatch: {aph.shape} vs {vph.shape}")
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must be in (0, 1], got {t}")
    avph = (aph + vph) / 2.0
    m = math.ceil(t * avph.size)
    order = np.argsort(-avph, kind="stable")  # stable: ties keep index order
    targets = np.zeros(avph.size, dtype=np.int64)
    targets[order[:m]] = 1
    return avph, targets


@dataclass
class PseudoHighlight:
    video_id: str
    category: int
    aph: np.ndarray
    vph: np.ndarray
    avph: np.ndarray
    targets: np.ndarray
    t: float
    metric: str
    target_source: str = "avph"  # avph | aph | vph


def build_pseudo_highlights(dataset: Dataset, model: PseudoCategoryModel,
                            t: float = 0.5, metric: str = "cosine",
                            exclude_self: bool = False,
                            target_source: str = "avph",
                            pools: dict[int, CategoryPool] | None = None,
                            ) -> dict[str, PseudoHighlight]:
    """Score every train video against its category pool.

    ``target_source`` selects which score vector is binarized into the
    training target (avph for the full method, aph/vph for ablations).
    """
    if target_source not in ("avph", "aph", "vph"):
        raise ValueError(f"unknown target source {target_source!r}")
    if pools is None:
        pools = build_pools(dataset, model)
    out: dict[str, PseudoHighlight] = {}
    for rec in dataset.split("train"):
        pool = pools[model.assignments[rec.video_id]]
        aph = clip_scores(rec, pool, "audio", metric, exclude_self)
        vph = clip_scores(rec, pool, "visual", metric, exclude_self)
        avph, _ = fuse_and_select(aph, vph, t)
        basis = {"avph": avph, "aph": aph, "vph": vph}[target_source]
        _, targets = fuse_and_select(basis, basis, t)
        out[rec.video_id] = PseudoHighlight(
            video_id=rec.video_id, category=pool.category,
            aph=aph, vph=vph, avph=avph, targets=targets,
            t=t, metric=metric, target_source=target_source)
    return out


def save_pseudo_highlights(pseudo: dict[str, PseudoHighlight], path: Path) -> None:
    payload = {
        vid: {
            "category": ph.category,
            "aph": ph.aph.tolist(),
            "vph": ph.vph.tolist(),
            "avph": ph.avph.tolist(),
            "targets": ph.targets.tolist(),
            "t": ph.t,
            "metric": ph.metric,
            "target_source": ph.target_source,
        }
        for vid, ph in sorted(pseudo.items())
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_pseudo_highlights(path: Path) -> dict[str, PseudoHighlight]:
    payload = json.loads(Path(path).read_text())
    return {
        vid: PseudoHighlight(
            video_id=vid,
            category=int(entry["category"]),
            aph=np.asarray(entry["aph"], dtype=np.float64),
            vph=np.asarray(entry["vph"], dtype=np.float64),
            avph=np.asarray(entry["avph"], dtype=np.float64),
            targets=np.asarray(entry["targets"], dtype=np.int64),
            t=float(entry["t"]),
            metric=entry["metric"],
            target_source=entry.get("target_source", "avph"),
        )
        for vid, entry in payload.items()
    }
