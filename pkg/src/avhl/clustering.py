"""Pseudo-category discovery.

Mean-pool each training video's clip features, reduce the pooled vectors to
10 dimensions, sweep K-means over a range of cluster counts, and keep the K
with the highest silhouette coefficient. Unseen videos are assigned to the
nearest centroid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .store import Dataset, VideoRecord

REDUCED_DIM = 10
KMEANS_MAX_ITER = 300
KMEANS_RESTARTS = 10


@dataclass
class PooledFeature:
    """Video-level representation: per-modality means and their concatenation."""

    video_id: str
    vbar: np.ndarray
    abar: np.ndarray

    @property
    def fbar(self) -> np.ndarray:
        return np.concatenate([self.vbar, self.abar])


@dataclass
class Reducer:
    """Centering plus (for pca) projection onto the top principal directions."""

    method: str  # "pca" | "identity"
    mean: np.ndarray
    components: np.ndarray | None  # (d, out_dim), orthonormal columns; None for identity

    def transform(self, fbar: np.ndarray) -> np.ndarray:
        x = np.asarray(fbar, dtype=np.float64) - self.mean
        if self.method == "identity":
            return x
        return x @ self.components

    @property
    def out_dim(self) -> int:
        return self.mean.size if self.method == "identity" else self.components.shape[1]


@dataclass
class PseudoCategoryModel:
    reducer: Reducer
    k: int
    centroids: np.ndarray  # (k, out_dim)
    assignments: dict[str, int]  # train split video_id -> category
    silhouette_by_k: dict[int, float] = field(default_factory=dict)


def pool_video(record: VideoRecord) -> PooledFeature:
    """Mean of the clip rows per modality, widened to float64."""
    return PooledFeature(
        video_id=record.video_id,
        vbar=record.visual.astype(np.float64).mean(axis=0),
        abar=record.audio.astype(np.float64).mean(axis=0),
    )


def fit_reducer(pooled: list[PooledFeature], out_dim: int = REDUCED_DIM,
                method: str = "pca") -> Reducer:
    """Fit the dimensionality reducer on pooled train features.

    PCA sign convention: the largest-magnitude entry of each principal
    direction is made positive, so the fit is deterministic for a given
    input order. Zero-variance data reduces everything to the zero vector.
    """
    x = np.stack([p.fbar for p in pooled])
    mean = x.mean(axis=0)
    if method == "identity":
        return Reducer(method="identity", mean=mean, components=None)
    if method != "pca":
        raise ValueError(f"unknown reducer method {method!r}")
    if x.shape[0] < out_dim + 1:
        raise ValueError(
            f"pca needs at least {out_dim + 1} videos, got {x.shape[0]}")
    centered = x - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=True)
    components = vt[:out_dim].T
    for j in range(components.shape[1]):
        col = components[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            components[:, j] = -col
    return Reducer(method="pca", mean=mean, components=components)


def _kmeans_pp_init(points: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[gen.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centroids[j] = points[gen.integers(n)]
        else:
            centroids[j] = points[gen.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _lloyd(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    k = centroids.shape[0]
    labels = np.full(points.shape[0], -1)
    for _ in range(KMEANS_MAX_ITER):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        # repair empty clusters with the point farthest from its centroid
        for j in range(k):
            if not (new_labels == j).any():
                farthest = d2[np.arange(points.shape[0]), new_labels].argmax()
                new_labels[farthest] = j
                d2[farthest, :] = np.inf
                d2[farthest, j] = 0.0
        if (new_labels == labels).all():
            break
        labels = new_labels
        for j in range(k):
            centroids[j] = points[labels == j].mean(axis=0)
    inertia = float(((points - centroids[labels]) ** 2).sum())
    return centroids, labels, inertia


def kmeans_fit(points: np.ndarray, k: int, seed: int,
               n_restarts: int = KMEANS_RESTARTS) -> tuple[np.ndarray, np.ndarray, float]:
    """K-means++ / Lloyd with restarts; keeps the lowest-inertia run."""
    points = np.asarray(points, dtype=np.float64)
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    if points.shape[0] < k:
        raise ValueError(f"need at least {k} points, got {points.shape[0]}")
    best = None
    for restart in range(n_restarts):
        gen = rng.stream(seed, rng.STREAM_CLUSTER, k, restart)
        centroids, labels, inertia = _lloyd(points, _kmeans_pp_init(points, k, gen))
        if best is None or inertia < best[2]:
            best = (centroids, labels, inertia)
    return best


def silhouette(points: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette score with Euclidean distance, computed exactly.

    Points in singleton clusters, and points where both the intra and
    nearest-other mean distance are zero, contribute 0.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    d = np.sqrt(np.maximum(
        ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2), 0.0))
    n = points.shape[0]
    scores = np.zeros(n)
    sizes = {c: int((labels == c).sum()) for c in uniq}
    for i in range(n):
        own = labels[i]
        if sizes[own] == 1:
            continue
        mask_own = labels == own
        a = d[i, mask_own].sum() / (sizes[own] - 1)
        b = min(d[i, labels == c].mean() for c in uniq if c != own)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def select_k(pooled: list[PooledFeature], k_range: tuple[int, int] = (4, 15),
             seed: int = 0, reducer_method: str = "pca") -> PseudoCategoryModel:
    """Fit reducer, sweep K-means over k_range, keep the silhouette argmax.

    Ties break toward the smallest K.
    """
    k_min, k_max = k_range
    if k_min > k_max or k_min < 2:
        raise ValueError(f"invalid k range [{k_min}, {k_max}]")
    if len(pooled) < k_min:
        raise ValueError(f"too few videos ({len(pooled)}) for k >= {k_min}")
    reducer = fit_reducer(pooled, method=reducer_method)
    points = np.stack([reducer.transform(p.fbar) for p in pooled])
    best = None
    silhouette_by_k: dict[int, float] = {}
    for k in range(k_min, min(k_max, len(pooled)) + 1):
        centroids, labels, _ = kmeans_fit(points, k, seed)
        sc = silhouette(points, labels)
        silhouette_by_k[k] = sc
        if best is None or sc > best[0]:
            best = (sc, k, centroids, labels)
    _, k, centroids, labels = best
    assignments = {p.video_id: int(labels[i]) for i, p in enumerate(pooled)}
    return PseudoCategoryModel(
        reducer=reducer, k=k, centroids=centroids,
        assignments=assignments, silhouette_by_k=silhouette_by_k)


def assign(model: PseudoCategoryModel, pooled: PooledFeature) -> int:
    """Nearest-centroid category for any video; ties go to the lowest index."""
    z = model.reducer.transform(pooled.fbar)
    if z.shape[0] != model.centroids.shape[1]:
        raise ValueError(
            f"reduced dim {z.shape[0]} != centroid dim {model.centroids.shape[1]}")
    d2 = ((model.centroids - z) ** 2).sum(axis=1)
    return int(d2.argmin())


def pool_split(dataset: Dataset, split: str = "train") -> list[PooledFeature]:
    return [pool_video(r) for r in dataset.split(split)]


def save_model(model: PseudoCategoryModel, path: Path) -> None:
    payload = {
        "K": model.k,
        "silhouette_by_k": {str(k): v for k, v in sorted(model.silhouette_by_k.items())},
        "assignments": dict(sorted(model.assignments.items())),
        "reducer": {
            "method": model.reducer.method,
            "mean": model.reducer.mean.tolist(),
            "components": (None if model.reducer.components is None
                           else model.reducer.components.tolist()),
        },
        "centroids": model.centroids.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_model(path: Path) -> PseudoCategoryModel:
    payload = json.loads(Path(path).read_text())
    red = payload["reducer"]
    reducer = Reducer(
        method=red["method"],
        mean=np.asarray(red["mean"], dtype=np.float64),
        components=(None if red["components"] is None
                    else np.asarray(red["components"], dtype=np.float64)),
    )
    return PseudoCategoryModel(
        reducer=reducer,
        k=int(payload["K"]),
        centroids=np.asarray(payload["centroids"], dtype=np.float64),
        assignments={k: int(v) for k, v in payload["assignments"].items()},
        silhouette_by_k={int(k): float(v) for k, v in payload["silhouette_by_k"].items()},
    )
