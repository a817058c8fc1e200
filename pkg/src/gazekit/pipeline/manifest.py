"""Dataset manifests: JSON-lines ingestion, frame subsampling, and the
subject-disjoint train/val split.

Each manifest line is an object with image_path, landmark_path,
subject_id, video_id, frame_index. Paths resolve relative to the manifest
file. Malformed lines are collected as rejects, not fatal errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import ConfigError

REQUIRED_KEYS = ("image_path", "landmark_path", "subject_id", "video_id", "frame_index")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    image_path: Path
    landmark_path: Path
    subject_id: str
    video_id: str
    frame_index: int

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.subject_id, self.video_id, self.frame_index)

    @property
    def sample_id(self) -> str:
        return f"{self.subject_id}/{self.video_id}/{self.frame_index:06d}"


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    rejects: list[tuple[str, str]] = field(default_factory=list)  # (line ref, reason)

    def __len__(self):
        return len(self.entries)

    def subjects(self) -> list[str]:
        return sorted({e.subject_id for e in self.entries})

    def videos(self) -> list[tuple[str, str]]:
        return sorted({(e.subject_id, e.video_id) for e in self.entries})


@dataclass(frozen=True)
class SplitSpec:
    train_subjects: frozenset[str]
    val_subjects: frozenset[str]
    ratio: float

    def __post_init__(self):
        if self.train_subjects & self.val_subjects:
            raise ConfigError("train and val subjects overlap")


def ingest(manifest_path: str | Path) -> Manifest:
    """Load and validate a JSON-lines manifest.

    Per-line problems (bad JSON, missing keys, missing files, duplicate
    (subject, video, frame)) land in `rejects`; an unreadable file is
    fatal.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise ManifestError(f"manifest not found: {manifest_path}")
    base = manifest_path.parent
    entries: list[ManifestEntry] = []
    rejects: list[tuple[str, str]] = []
    seen: set[tuple[str, str, int]] = set()
    for lineno, line in enumerate(manifest_path.read_text().splitlines(), start=1):
        ref = f"{manifest_path.name}:{lineno}"
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            rejects.append((ref, f"bad JSON: {exc.msg}"))
            continue
        missing = [k for k in REQUIRED_KEYS if k not in obj]
        if missing:
            rejects.append((ref, f"missing keys: {', '.join(missing)}"))
            continue
        try:
            frame_index = int(obj["frame_index"])
            if frame_index < 0:
                raise ValueError
        except (TypeError, ValueError):
            rejects.append((ref, f"bad frame_index: {obj['frame_index']!r}"))
            continue
        entry = ManifestEntry(
            image_path=(base / str(obj["image_path"])).resolve(),
            landmark_path=(base / str(obj["landmark_path"])).resolve(),
            subject_id=str(obj["subject_id"]),
            video_id=str(obj["video_id"]),
            frame_index=frame_index,
        )
        if entry.key in seen:
            rejects.append((ref, f"duplicate (subject, video, frame) {entry.key}"))
            continue
        if not entry.image_path.exists():
            rejects.append((ref, f"missing image file {entry.image_path.name}"))
            continue
        if not entry.landmark_path.exists():
            rejects.append((ref, f"missing landmark file {entry.landmark_path.name}"))
            continue
        seen.add(entry.key)
        entries.append(entry)
    entries.sort(key=lambda e: e.key)
    return Manifest(entries, rejects)


def subsample_frames(manifest: Manifest, stride: int = 3) -> Manifest:
    """Keep every stride-th frame of each (subject, video) stream.

    Filtering is by position in the frame-ordered stream, so when frame
    indices are contiguous from 0 this keeps frame_index % stride == 0 and
    applying strides a then b composes to stride a*b. Original frame
    indices are preserved.
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    rank: dict[tuple[str, str], int] = {}
    kept = []
    for entry in manifest.entries:  # entries are sorted by (subject, video, frame)
        stream = (entry.subject_id, entry.video_id)
        position = rank.get(stream, 0)
        rank[stream] = position + 1
        if position % stride == 0:
            kept.append(entry)
    return Manifest(kept, list(manifest.rejects))


def split_by_subject(manifest: Manifest, ratio: float = 0.7, seed: int = 0) -> SplitSpec:
    """Shuffle subjects by seed and send the first ceil(ratio * n) to train.

    No subject ever appears on both sides. ratio 1.0 produces an empty
    validation side (callers should warn).
    """
    subjects = manifest.subjects()
    if len(subjects) < 2:
        raise ConfigError(f"need >= 2 subjects to split, got {len(subjects)}")
    if not (0.0 < ratio <= 1.0):
        raise ConfigError(f"ratio must be in (0, 1], got {ratio}")
    rng = np.random.default_rng(seed)
    order = list(subjects)
    rng.shuffle(order)
    n_train = math.ceil(ratio * len(order))
    return SplitSpec(
        train_subjects=frozenset(order[:n_train]),
        val_subjects=frozenset(order[n_train:]),
        ratio=ratio,
    )
