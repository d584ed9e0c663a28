"""Ranking metrics: per-video average precision, mAP, HIT@1, top-5 mAP.

Score ties are broken by the earlier clip index everywhere, which keeps every
metric deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .store import Dataset


def _ranking(scores: np.ndarray) -> np.ndarray:
    """Clip indices in descending score order, earlier index first on ties."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def average_precision(scores: np.ndarray, gt_binary: np.ndarray) -> float:
    """AP of the clip ranking: mean of precision@k over the positive ranks."""
    gt = np.asarray(gt_binary).astype(bool)
    if gt.sum() == 0:
        raise ValueError("average_precision needs at least one positive clip")
    hits = gt[_ranking(scores)]
    ks = np.flatnonzero(hits) + 1
    precisions = np.cumsum(hits)[hits.nonzero()] / ks
    return float(precisions.mean())


def hit_at_1(scores: np.ndarray, gt_binary: np.ndarray) -> int:
    """1 iff the single top-scored clip is a ground-truth positive."""
    gt = np.asarray(gt_binary).astype(bool)
    return int(gt[_ranking(scores)[0]])


def top5_ap(scores: np.ndarray, gt_binary: np.ndarray) -> float:
    """AP truncated to the five highest-scored clips.

    Precision@k keeps its global-rank denominator; the sum is normalized by
    min(5, total positives). Videos with fewer than 5 clips use all clips,
    which reduces to plain AP.
    """
    gt = np.asarray(gt_binary).astype(bool)
    n_pos = int(gt.sum())
    if n_pos == 0:
        raise ValueError("top5_ap needs at least one positive clip")
    hits = gt[_ranking(scores)][:5]
    ks = np.flatnonzero(hits) + 1
    precisions = np.cumsum(hits)[hits.nonzero()] / ks
    return float(precisions.sum() / min(5, n_pos))


def binarize_gt(gt_scores: np.ndarray, policy: str = "top-rating",
                threshold: float = 1.0) -> np.ndarray:
    """Turn fractional gt scores into binary positives.

    ``top-rating``: positives are clips scoring at or above ``threshold``
    (the dataset-declared very-good cutoff). ``fraction:p``: the top-p
    fraction of clips, earlier index first on ties.
    """
    gt = np.asarray(gt_scores, dtype=np.float64)
    if policy == "top-rating":
        return (gt >= threshold).astype(np.int64)
    if policy.startswith("fraction:"):
        p = float(policy.split(":", 1)[1])
        if not 0.0 < p <= 1.0:
            raise ValueError(f"fraction must be in (0, 1], got {p}")
        m = math.ceil(p * gt.size)
        out = np.zeros(gt.size, dtype=np.int64)
        out[_ranking(gt)[:m]] = 1
        return out
    raise ValueError(f"unknown gt policy {policy!r}")


@dataclass
class EvalReport:
    map: float
    hit_at_1: float
    top5_map: float
    per_video: dict[str, float] = field(default_factory=dict)
    n_videos_evaluated: int = 0
    n_videos_skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "mAP": self.map,
            "HIT@1": self.hit_at_1,
            "top5_mAP": self.top5_map,
            "per_video_AP": dict(sorted(self.per_video.items())),
            "n_videos_evaluated": self.n_videos_evaluated,
            "n_videos_skipped": self.n_videos_skipped,
        }


def evaluate(predictions: dict[str, np.ndarray], dataset: Dataset,
             split: str = "test", gt_policy: str = "top-rating") -> EvalReport:
    """Aggregate metrics over one split.

    Videos without ground truth, or whose binarized ground truth has no
    positive clip, are skipped and counted.
    """
    aps, hits, top5s = [], [], []
    per_video: dict[str, float] = {}
    skipped = 0
    for rec in dataset.split(split):
        if rec.gt_scores is None or rec.video_id not in predictions:
            skipped += 1
            continue
        gt = binarize_gt(rec.gt_scores, gt_policy, dataset.very_good_threshold)
        if gt.sum() == 0:
            skipped += 1
            continue
        scores = np.asarray(predictions[rec.video_id], dtype=np.float64)
        ap = average_precision(scores, gt)
        per_video[rec.video_id] = ap
        aps.append(ap)
        hits.append(hit_at_1(scores, gt))
        top5s.append(top5_ap(scores, gt))
    n = len(aps)
    return EvalReport(
        map=float(np.mean(aps)) if n else 0.0,
        hit_at_1=float(np.mean(hits)) if n else 0.0,
        top5_map=float(np.mean(top5s)) if n else 0.0,
        per_video=per_video,
        n_videos_evaluated=n,
        n_videos_skipped=skipped,
    )
