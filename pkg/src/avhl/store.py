"""On-disk dataset format for clip-level audio-visual features (AVHF).

A dataset root holds a ``manifest.json`` plus one binary feature file per
video per modality. Feature files are self-describing:

    magic ``AVHF`` | version u32 (=1) | n u32 | d u32 | n*d float32, little-endian, row-major

Per-clip ground-truth scores, when present, are stored as an AVHF file with
d=1. All paths in the manifest are relative to the root.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"AVHF"
VERSION = 1
_HEADER = struct.Struct("<4sIII")

VALID_SPLITS = ("train", "val", "test")


class FormatError(Exception):
    """Raised when a feature file or manifest is malformed."""


@dataclass
class VideoRecord:
    """One video: clip-level feature matrices plus optional ground truth."""

    video_id: str
    visual: np.ndarray  # (n_clips, d_v) float32
    audio: np.ndarray   # (n_clips, d_a) float32
    split: str = "train"
    gt_scores: np.ndarray | None = None  # (n_clips,) floats in [0, 1]
    category: str | None = None

    @property
    def n_clips(self) -> int:
        return self.visual.shape[0]


@dataclass
class Dataset:
    name: str
    d_v: int
    d_a: int
    records: list[VideoRecord] = field(default_factory=list)
    # Threshold above which a gt score counts as a top-rated ("very good") clip.
    very_good_threshold: float = 1.0

    def __post_init__(self):
        self._by_id = {r.video_id: r for r in self.records}

    def get(self, video_id: str) -> VideoRecord:
        return self._by_id[video_id]

    def split(self, name: str) -> list[VideoRecord]:
        return [r for r in self.records if r.split == name]

    @property
    def category_labels(self) -> dict[str, str]:
        return {r.video_id: r.category for r in self.records if r.category is not None}


@dataclass
class Violation:
    video_id: str | None
    field: str
    message: str

    def __str__(self):
        where = self.video_id if self.video_id is not None else "<dataset>"
        return f"{where}: {self.field}: {self.message}"


def write_avhf(path: Path, matrix: np.ndarray) -> None:
    """Write a 2-D float array as an AVHF file (float32, little-endian)."""
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise ValueError(f"expected 2-D matrix, got shape {matrix.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, m.shape[0], m.shape[1]))
        fh.write(m.tobytes())


def read_avhf(path: Path) -> np.ndarray:
    """Read an AVHF file back into an (n, d) float32 array."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than AVHF header")
    magic, version, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    payload = raw[_HEADER.size:]
    expected = 4 * n * d
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload length {len(payload)} does not match header n={n} d={d}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Check every dataset invariant; an empty report means valid."""
    report: list[Violation] = []
    seen: set[str] = set()
    for rec in dataset.records:
        if rec.video_id in seen:
            report.append(Violation(rec.video_id, "video_id", "duplicate video id"))
        seen.add(rec.video_id)
        if rec.split not in VALID_SPLITS:
            report.append(Violation(rec.video_id, "split", f"unknown split {rec.split!r}"))
        if rec.visual.ndim != 2 or rec.audio.ndim != 2:
            report.append(Violation(rec.video_id, "features", "feature matrices must be 2-D"))
            continue
        n = rec.visual.shape[0]
        if n < 1:
            report.append(Violation(rec.video_id, "n_clips", "video has no clips"))
        if rec.audio.shape[0] != n:
            report.append(Violation(
                rec.video_id, "audio",
                f"clip count mismatch: visual {n} vs audio {rec.audio.shape[0]}"))
        if rec.visual.shape[1] != dataset.d_v:
            report.append(Violation(
                rec.video_id, "visual",
                f"width {rec.visual.shape[1]} != dataset d_v {dataset.d_v}"))
        if rec.audio.shape[1] != dataset.d_a:
            report.append(Violation(
                rec.video_id, "audio",
                f"width {rec.audio.shape[1]} != dataset d_a {dataset.d_a}"))
        for modality, mat in (("visual", rec.visual), ("audio", rec.audio)):
            bad = ~np.isfinite(mat)
            if bad.any():
                row = int(np.argwhere(bad)[0][0])
                report.append(Violation(
                    rec.video_id, modality, f"non-finite value at clip {row}"))
        if rec.gt_scores is not None:
            gt = np.asarray(rec.gt_scores, dtype=np.float64)
            if gt.shape != (n,):
                report.append(Violation(
                    rec.video_id, "gt_scores",
                    f"length {gt.shape} != n_clips {n}"))
            elif (~np.isfinite(gt)).any() or gt.min() < 0.0 or gt.max() > 1.0:
                report.append(Violation(
                    rec.video_id, "gt_scores", "values must be finite and in [0, 1]"))
    return report


def write_dataset(dataset: Dataset, root: Path) -> list[Path]:
    """Write manifest + AVHF feature files; returns all written paths."""
    report = validate_dataset(dataset)
    if report:
        raise ValueError("invalid dataset: " + "; ".join(str(v) for v in report))
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    videos = []
    for rec in dataset.records:
        entry = {
            "id": rec.video_id,
            "n_clips": rec.n_clips,
            "split": rec.split,
            "visual_file": f"{rec.video_id}.visual.avhf",
            "audio_file": f"{rec.video_id}.audio.avhf",
        }
        write_avhf(root / entry["visual_file"], rec.visual)
        write_avhf(root / entry["audio_file"], rec.audio)
        written += [root / entry["visual_file"], root / entry["audio_file"]]
        if rec.gt_scores is not None:
            entry["labels_file"] = f"{rec.video_id}.labels.avhf"
            write_avhf(root / entry["labels_file"],
                       np.asarray(rec.gt_scores, dtype=np.float32).reshape(-1, 1))
            written.append(root / entry["labels_file"])
        if rec.category is not None:
            entry["category"] = rec.category
        videos.append(entry)
    manifest = {
        "name": dataset.name,
        "d_v": dataset.d_v,
        "d_a": dataset.d_a,
        "very_good_threshold": dataset.very_good_threshold,
        "videos": videos,
    }
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return [manifest_path] + written


def read_dataset(root: Path) -> Dataset:
    """Load a dataset root; the result always passes validate_dataset."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise FormatError(f"missing manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    records = []
    for entry in manifest["videos"]:
        visual = read_avhf(root / entry["visual_file"])
        audio = read_avhf(root / entry["audio_file"])
        gt = None
        if "labels_file" in entry:
            gt = read_avhf(root / entry["labels_file"]).reshape(-1)
        records.append(VideoRecord(
            video_id=entry["id"],
            visual=visual,
            audio=audio,
            split=entry["split"],
            gt_scores=gt,
            category=entry.get("category"),
        ))
    dataset = Dataset(
        name=manifest["name"],
        d_v=int(manifest["d_v"]),
        d_a=int(manifest["d_a"]),
        records=records,
        very_good_threshold=float(manifest.get("very_good_threshold", 1.0)),
    )
    report = validate_dataset(dataset)
    if report:
        raise FormatError("dataset failed validation: " + "; ".join(str(v) for v in report))
    return dataset
