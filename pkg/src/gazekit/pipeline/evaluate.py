"""Pupil-localization evaluation against ground-truth centers.

Ground truth is a CSV carrying sample_id plus pupil_{l,r}_{x,y} columns
(the synthetic generator's ground_truth.csv works as-is; externally
sourced data just needs the same columns). Emits a per-sample report CSV
and an aggregate JSON with accuracies at the 0.05 / 0.10 / 0.25
thresholds.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ..config import Config
from ..pupil import PupilPair, jesorsky_error, locate_pupils
from .annotate import load_sample
from .manifest import Manifest

REPORT_COLUMNS = ("sample_id", "e", "hit@0.05", "hit@0.10", "hit@0.25")
THRESHOLDS = (0.05, 0.10, 0.25)


class GroundTruthError(ValueError):
    pass


def load_ground_truth_pupils(path: str | Path) -> dict[str, PupilPair]:
    """sample_id -> ground-truth PupilPair from a CSV."""
    needed = {"sample_id", "pupil_l_x", "pupil_l_y", "pupil_r_x", "pupil_r_y"}
    out: dict[str, PupilPair] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise GroundTruthError(
                f"{path}: need columns {sorted(needed)}, got {reader.fieldnames}"
            )
        for row in reader:
            out[row["sample_id"]] = PupilPair(
                left=(float(row["pupil_l_x"]), float(row["pupil_l_y"])),
                right=(float(row["pupil_r_x"]), float(row["pupil_r_y"])),
            )
    if not out:
        raise GroundTruthError(f"{path}: no ground-truth rows")
    return out


def evaluate_pupils(
    manifest: Manifest,
    ground_truth: dict[str, PupilPair],
    cfg: Config,
    run_dir: str | Path,
) -> dict:
    """Run the localizer over the manifest and score it; returns the summary."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    errors = []
    skipped = []
    for entry in manifest.entries:
        truth = ground_truth.get(entry.sample_id)
        if truth is None:
            skipped.append((entry.sample_id, "no ground truth"))
            continue
        try:
            sample = load_sample(entry)
            predicted = locate_pupils(sample, cfg.localizer)
            e = jesorsky_error(predicted, truth, cfg.localizer.jesorsky_mode)
        except Exception as exc:
            skipped.append((entry.sample_id, f"{type(exc).__name__}: {exc}"))
            continue
        errors.append(e)
        rows.append(
            (entry.sample_id, f"{e:.6f}")
            + tuple(str(int(e <= t)) for t in THRESHOLDS)
        )

    with open(run_dir / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(rows)

    n = len(errors)
    summary = {
        "n_evaluated": n,
        "n_skipped": len(skipped),
        "mean_e": sum(errors) / n if n else None,
        "accuracy": {
            f"e<={t}": (sum(1 for e in errors if e <= t) / n if n else None)
            for t in THRESHOLDS
        },
        "skipped": dict(sorted(skipped)[:50]),
    }
    with open(run_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
