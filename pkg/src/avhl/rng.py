"""Seed-stream management.

All randomness in the pipeline flows from a single 64-bit seed. Each stage
draws from its own Philox (counter-based) stream so that adding or removing
work in one stage never perturbs another. Stream assignment:

    synth       -> (seed, 0)
    cluster     -> (seed, 1, k, restart)
    train       -> (seed, 2, epoch)
    ablate      -> (seed, 3, cell_index)
    model init  -> (seed, 4)
"""

from __future__ import annotations

import numpy as np

STREAM_SYNTH = 0
STREAM_CLUSTER = 1
STREAM_TRAIN = 2
STREAM_ABLATE = 3
STREAM_MODEL = 4


def stream(seed: int, stage: int, *extra: int) -> np.random.Generator:
    """Return the deterministic generator for one (seed, stage) slot."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stage, *extra])))
