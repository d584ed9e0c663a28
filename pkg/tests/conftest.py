import numpy as np
import pytest

from avhl.store import Dataset, VideoRecord
from avhl.synth import SynthConfig, generate


@pytest.fixture(scope="session")
def small_synth():
    """A quick planted dataset: 3 categories, strong recurrence."""
    return generate(SynthConfig(
        n_categories=3, videos_per_category=10, clips_per_video=(8, 12),
        d_v=16, d_a=16, recurrence_strength=0.9, seed=0))


@pytest.fixture(scope="session")
def small_synth_config():
    return SynthConfig(
        n_categories=3, videos_per_category=10, clips_per_video=(8, 12),
        d_v=16, d_a=16, recurrence_strength=0.9, seed=0)


@pytest.fixture()
def two_video_dataset():
    rng = np.random.default_rng(0)
    records = [
        VideoRecord(
            video_id=f"v{i}",
            visual=rng.standard_normal((6, 4)).astype(np.float32),
            audio=rng.standard_normal((6, 4)).astype(np.float32),
            split="train",
            gt_scores=np.array([1, 0, 0, 1, 0, 0], dtype=np.float32),
        )
        for i in range(2)
    ]
    return Dataset(name="pair", d_v=4, d_a=4, records=records)
