"""Assemble in-memory training datasets from manifests plus label sources.

Labels come either from annotate's per-video CSVs (pretext pseudo-labels)
or from a ground-truth CSV (downstream adaptation). Images must already
match the network input size; resizing belongs to the corpus generator,
not the loader.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..config import ConfigError
from ..heuristic import Zone
from ..imgio import load_rgb
from ..nnet.data import ArrayDataset, ZONE_TO_INDEX, image_to_tensor
from .manifest import Manifest, SplitSpec

ZONE_VALUES = {z.value: ZONE_TO_INDEX[z] for z in Zone}


def read_label_csvs(labels_dir: str | Path, use_smoothed: bool = True) -> dict[tuple, int]:
    """(subject, video, frame) -> zone index from annotate's outputs."""
    labels_dir = Path(labels_dir)
    column = "zone_smoothed" if use_smoothed else "zone"
    out: dict[tuple, int] = {}
    for path in sorted(labels_dir.glob("*.csv")):
        subject, video = path.stem.split("__", 1)
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                out[(subject, video, int(row["frame_index"]))] = ZONE_VALUES[row[column]]
    if not out:
        raise ConfigError(f"no label rows found under {labels_dir}")
    return out


def read_ground_truth_labels(gt_csv: str | Path, task: str) -> dict[str, np.ndarray | int]:
    """sample_id -> zone index or gaze vector from a ground-truth CSV."""
    out: dict[str, np.ndarray | int] = {}
    with open(gt_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            if task == "zone":
                out[row["sample_id"]] = ZONE_VALUES[row["zone"]]
            else:
                out[row["sample_id"]] = np.array(
                    [float(row["gaze_x"]), float(row["gaze_y"]), float(row["gaze_z"])]
                )
    if not out:
        raise ConfigError(f"no rows in {gt_csv}")
    return out


def build_dataset(
    manifest: Manifest,
    labels_by_key: dict,
    task: str,
    input_size: int,
    split: SplitSpec | None = None,
) -> ArrayDataset:
    """Load every labeled manifest image into one tensor block.

    `labels_by_key` is keyed by (subject, video, frame) or by sample_id.
    """
    images, labels, ids, subjects = [], [], [], []
    for entry in manifest.entries:
        label = labels_by_key.get(entry.key, labels_by_key.get(entry.sample_id))
        if label is None:
            continue
        rgb = load_rgb(entry.image_path)
        if rgb.shape[0] != input_size or rgb.shape[1] != input_size:
            raise ConfigError(
                f"{entry.image_path.name} is {rgb.shape[1]}x{rgb.shape[0]}, "
                f"expected {input_size}x{input_size}; regenerate the corpus or "
                f"change net.input_size"
            )
        images.append(image_to_tensor(rgb))
        labels.append(label)
        ids.append(entry.sample_id)
        subjects.append(entry.subject_id)
    if not images:
        raise ConfigError("no manifest entry had a label")

    label_arr = (
        np.asarray(labels, dtype=np.int64)
        if task == "zone"
        else np.stack([np.asarray(l, dtype=np.float64) for l in labels])
    )
    data = ArrayDataset(
        images=np.stack(images),
        labels=label_arr,
        ids=ids,
        task=task,
    )
    if split is not None:
        subject_arr = np.array(subjects)
        data.train_idx = np.flatnonzero(np.isin(subject_arr, sorted(split.train_subjects)))
        data.val_idx = np.flatnonzero(np.isin(subject_arr, sorted(split.val_subjects)))
    return data
