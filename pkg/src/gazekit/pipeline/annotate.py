"""Dataset-wide pseudo-labeling: per-frame heuristics, per-video smoothing.

Frames can be labeled by a worker pool; all results are keyed by
(subject, video, frame) and sorted before smoothing and writing, so the
output bytes do not depend on the worker count. Per-sample failures are
collected in a rejects file; the run only fails when nothing was labeled.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..config import Config
from ..heuristic import Zone, pseudo_label, smooth_labels
from ..imaging import to_gray
from ..imgio import load_rgb
from ..landmarks import FaceSample, load_landmarks
from .manifest import Manifest, ManifestEntry

LABEL_COLUMNS = (
    "frame_index",
    "image_path",
    "zone",
    "zone_smoothed",
    "head_pose",
    "theta1",
    "theta2",
    "theta3",
    "theta4",
    "pupil_l_x",
    "pupil_l_y",
    "pupil_r_x",
    "pupil_r_y",
    "flags",
)


class AnnotateError(RuntimeError):
    pass


@dataclass
class AnnotateSummary:
    n_entries: int
    n_labeled: int
    n_rejected: int
    zone_counts: dict[str, int]
    zone_smoothed_counts: dict[str, int]
    head_pose_counts: dict[str, int]
    reject_reasons: dict[str, int]


def load_sample(entry: ManifestEntry) -> FaceSample:
    rgb = load_rgb(entry.image_path)
    gray = to_gray(rgb)
    lms = load_landmarks(entry.landmark_path, image_size=(gray.width, gray.height))
    return FaceSample(
        image=gray,
        landmarks=lms,
        subject_id=entry.subject_id,
        video_id=entry.video_id,
        frame_index=entry.frame_index,
        color=rgb,
    )


def _label_entry(args):
    entry, cfg = args
    try:
        sample = load_sample(entry)
        lbl = pseudo_label(sample, cfg.heuristic, cfg.localizer)
    except Exception as exc:  # per-sample failures become rejects
        return entry.key, None, f"{type(exc).__name__}: {exc}"
    return entry.key, lbl, None


def annotate(
    manifest: Manifest,
    cfg: Config,
    run_dir: str | Path,
    workers: int | None = None,
) -> AnnotateSummary:
    """Label every manifest entry and write per-video CSVs plus a summary.

    Outputs under run_dir: labels/<subject>__<video>.csv, rejects.csv,
    summary.json. Reruns with identical inputs produce identical bytes.
    """
    run_dir = Path(run_dir)
    labels_dir = run_dir / "labels"
    labels_dir.mkdir(parents=True, exist_ok=True)
    workers = workers if workers is not None else cfg.pipeline.workers

    jobs = [(entry, cfg) for entry in manifest.entries]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_label_entry, jobs, chunksize=8))
    else:
        raw = [_label_entry(job) for job in jobs]

    labeled = {}
    rejects = [(f"{ref}", reason) for ref, reason in manifest.rejects]
    for key, lbl, err in raw:
        sample_id = f"{key[0]}/{key[1]}/{key[2]:06d}"
        if err is None:
            labeled[key] = lbl
        else:
            rejects.append((sample_id, err))
    rejects.sort()

    if not labeled:
        reasons = sorted({reason for _, reason in rejects})
        raise AnnotateError(
            f"no sample could be labeled; reasons: {reasons[:10]}"
        )

    by_entry = {e.key: e for e in manifest.entries}
    videos: dict[tuple[str, str], list] = {}
    for key in sorted(labeled):
        videos.setdefault((key[0], key[1]), []).append(key)

    zone_counts = {z.value: 0 for z in Zone}
    smoothed_counts = {z.value: 0 for z in Zone}
    pose_counts = {z.value: 0 for z in Zone}
    window = cfg.heuristic.smoothing_window
    for (subject, video), keys in sorted(videos.items()):
        stream = [labeled[k].zone for k in keys]
        smoothed = smooth_labels(stream, window)
        path = labels_dir / f"{subject}__{video}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(LABEL_COLUMNS)
            for key, zs in zip(keys, smoothed):
                lbl = labeled[key]
                entry = by_entry[key]
                q = lbl.angles
                p = lbl.pupils
                writer.writerow(
                    (
                        key[2],
                        str(entry.image_path),
                        lbl.zone.value,
                        zs.value,
                        lbl.head_pose.value,
                        f"{q.theta1:.4f}",
                        f"{q.theta2:.4f}",
                        f"{q.theta3:.4f}",
                        f"{q.theta4:.4f}",
                        f"{p.left[0]:.4f}",
                        f"{p.left[1]:.4f}",
                        f"{p.right[0]:.4f}",
                        f"{p.right[1]:.4f}",
                        ";".join(lbl.flags),
                    )
                )
                zone_counts[lbl.zone.value] += 1
                smoothed_counts[zs.value] += 1
                pose_counts[lbl.head_pose.value] += 1

    with open(run_dir / "rejects.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("sample_id", "reason"))
        writer.writerows(rejects)

    reject_reasons: dict[str, int] = {}
    for _, reason in rejects:
        reject_reasons[reason] = reject_reasons.get(reason, 0) + 1
    summary = AnnotateSummary(
        n_entries=len(manifest.entries),
        n_labeled=len(labeled),
        n_rejected=len(rejects),
        zone_counts=zone_counts,
        zone_smoothed_counts=smoothed_counts,
        head_pose_counts=pose_counts,
        reject_reasons=reject_reasons,
    )
    with open(run_dir / "summary.json", "w") as fh:
        json.dump(summary.__dict__, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
