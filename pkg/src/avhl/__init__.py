"""Unsupervised audio-visual video highlight detection on clip features."""

__version__ = "0.1.0"

from .store import Dataset, VideoRecord, read_dataset, write_dataset, validate_dataset  # noqa: F401
from .metrics import EvalReport, evaluate  # noqa: F401
from .pipeline import RunConfig, run_pipeline  # noqa: F401
from .synth import SynthConfig, generate  # noqa: F401
