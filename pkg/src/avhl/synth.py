"""Synthetic planted-recurrence benchmark.

Each category owns a few unit-norm motif vectors per modality. Highlight
clips interpolate between a motif and fresh noise (controlled by the
recurrence strength alpha) and background clips are pure noise; everything is
renormalized to unit norm so cosine geometry stays interpretable. Ground
truth marks the motif clips, and the manifest records the true categories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .store import Dataset, VideoRecord

MODALITY_CHOICES = ("both", "audio-only", "visual-only")


@dataclass
class SynthConfig:
    n_categories: int = 6
    videos_per_category: int = 20
    clips_per_video: tuple[int, int] = (20, 40)
    d_v: int = 32
    d_a: int = 32
    motifs_per_category: int = 3
    highlight_fraction: float = 0.5
    recurrence_strength: float = 0.85  # alpha: motif vs noise interpolation
    # Probability that a highlight clip borrows a motif from another category,
    # modeling ambiguous/mixed-topic videos. Still ground-truth highlights.
    category_mixing: float = 0.0
    noise_scale: float = 1.0
    modality_informativeness: str = "both"
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0

    def validate(self) -> None:
        if min(self.n_categories, self.videos_per_category,
               self.motifs_per_category, self.d_v, self.d_a,
               self.clips_per_video[0]) < 1:
            raise ValueError("all counts must be >= 1")
        if self.clips_per_video[0] > self.clips_per_video[1]:
            raise ValueError("clips_per_video range inverted")
        if not 0.0 <= self.recurrence_strength <= 1.0:
            raise ValueError("recurrence_strength must be in [0, 1]")
        if not 0.0 < self.highlight_fraction <= 1.0:
            raise ValueError("highlight_fraction must be in (0, 1]")
        if not 0.0 <= self.category_mixing <= 1.0:
            raise ValueError("category_mixing must be in [0, 1]")
        if self.modality_informativeness not in MODALITY_CHOICES:
            raise ValueError(
                f"modality_informativeness must be one of {MODALITY_CHOICES}")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthConfig":
        cfg = cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})
        cfg.validate()
        return cfg


def _unit(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / np.where(n == 0.0, 1.0, n)


def _splits(n: int, fractions: tuple[float, float, float]) -> list[str]:
    n_train = round(fractions[0] * n)
    n_val = round(fractions[1] * n)
    return ["train"] * n_train + ["val"] * n_val + ["test"] * (n - n_train - n_val)


def generate(config: SynthConfig) -> Dataset:
    """Build the planted dataset; deterministic per seed."""
    config.validate()
    gen = rng.stream(config.seed, rng.STREAM_SYNTH)
    alpha = config.recurrence_strength
    informative = {
        "visual": config.modality_informativeness in ("both", "visual-only"),
        "audio": config.modality_informativeness in ("both", "audio-only"),
    }
    motifs = {
        "visual": _unit(gen.standard_normal(
            (config.n_categories, config.motifs_per_category, config.d_v))),
        "audio": _unit(gen.standard_normal(
            (config.n_categories, config.motifs_per_category, config.d_a))),
    }
    records = []
    lo, hi = config.clips_per_video
    for cat in range(config.n_categories):
        splits = _splits(config.videos_per_category, config.split_fractions)
        for j in range(config.videos_per_category):
            n = int(gen.integers(lo, hi + 1))
            n_high = math.ceil(config.highlight_fraction * n)
            is_high = np.zeros(n, dtype=bool)
            is_high[gen.choice(n, size=n_high, replace=False)] = True
            motif_idx = gen.integers(config.motifs_per_category, size=n)
            motif_cat = np.full(n, cat)
            if config.category_mixing > 0.0 and config.n_categories > 1:
                borrow = gen.random(n) < config.category_mixing
                others = gen.integers(config.n_categories - 1, size=n)
                motif_cat = np.where(borrow, np.where(others >= cat, others + 1, others),
                                     motif_cat)
            feats = {}
            for modality, d in (("visual", config.d_v), ("audio", config.d_a)):
                noise = _unit(gen.standard_normal((n, d))) * config.noise_scale
                clips = _unit(noise)
                if informative[modality]:
                    planted = (alpha * motifs[modality][motif_cat, motif_idx]
                               + (1.0 - alpha) * noise)
                    clips = np.where(is_high[:, None], _unit(planted), clips)
                feats[modality] = clips.astype(np.float32)
            records.append(VideoRecord(
                video_id=f"cat{cat}_vid{j:03d}",
                visual=feats["visual"],
                audio=feats["audio"],
                split=splits[j],
                gt_scores=is_high.astype(np.float32),
                category=f"category_{cat}",
            ))
    return Dataset(name="synthetic-recurrence", d_v=config.d_v, d_a=config.d_a,
                   records=records)
