"""Command-line entry points.

Run directories resolve against $GAZEKIT_RUN_ROOT when that variable is
set and the given path is relative.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from ..config import Config, TOY_NET, load_config
from ..nnet import (
    adapt_fine_tune,
    adapt_linear_probe,
    build_capsule_cnn,
    knn_probe,
    load_checkpoint,
    save_checkpoint,
    train_pretext,
)
from ..nnet.losses import angular_error_deg
from ..nnet.train import LOG_COLUMNS
from ..nnet.adapt import ADAPT_LOG_COLUMNS
from . import datasets
from .annotate import annotate
from .evaluate import evaluate_pupils, load_ground_truth_pupils
from .manifest import ingest, split_by_subject, subsample_frames
from .report import generate_report
from .synth import gen_synthetic_corpus

RUN_ROOT_ENV = "GAZEKIT_RUN_ROOT"


def _resolve_run_dir(run_dir: str) -> Path:
    path = Path(run_dir)
    root = os.environ.get(RUN_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _write_log_csv(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([x if isinstance(x, str) else repr(x) for x in row])


@click.group()
def main():
    """Self-supervised gaze-zone pipeline."""


@main.command("gen-synth")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--subjects", default=3, show_default=True)
@click.option("--videos-per-subject", default=1, show_default=True)
@click.option("--frames", default=30, show_default=True, help="frames per video")
@click.option("--image-size", default=128, show_default=True)
@click.option("--noise-sigma", default=4.0, show_default=True)
@click.option("--max-roll", default=8.0, show_default=True,
              help="rolls drawn uniformly from [-max-roll, +max-roll]")
@click.option("--seed", default=0, show_default=True)
def cmd_gen_synth(out_dir, subjects, videos_per_subject, frames, image_size, noise_sigma, max_roll, seed):
    """Generate a synthetic face corpus with exact ground truth."""
    manifest_path = gen_synthetic_corpus(
        out_dir,
        n_subjects=subjects,
        videos_per_subject=videos_per_subject,
        frames_per_video=frames,
        image_size=image_size,
        noise_sigma=noise_sigma,
        roll_range=(-max_roll, max_roll),
        seed=seed,
    )
    click.echo(f"wrote {manifest_path}")


@main.command("ingest")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--stride", default=1, show_default=True, help="keep every stride-th frame")
def cmd_ingest(manifest_path, stride):
    """Validate a manifest and report entry/reject counts."""
    manifest = ingest(manifest_path)
    if stride > 1:
        manifest = subsample_frames(manifest, stride)
    click.echo(f"entries: {len(manifest)}")
    click.echo(f"subjects: {len(manifest.subjects())}")
    click.echo(f"rejects: {len(manifest.rejects)}")
    for ref, reason in manifest.rejects:
        click.echo(f"  {ref}: {reason}", err=True)
    if not manifest.entries:
        sys.exit(1)


@main.command("annotate")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--run-dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--stride", default=1, show_default=True)
@click.option("--workers", type=int, default=None)
def cmd_annotate(manifest_path, run_dir, config_path, stride, workers):
    """Pseudo-label a dataset: per-frame heuristics plus temporal smoothing."""
    cfg = load_config(config_path)
    manifest = ingest(manifest_path)
    if stride > 1:
        manifest = subsample_frames(manifest, stride)
    summary = annotate(manifest, cfg, _resolve_run_dir(run_dir), workers)
    click.echo(f"labeled {summary.n_labeled}/{summary.n_entries}, rejects {summary.n_rejected}")
    click.echo(f"zones: {summary.zone_counts}")


@main.command("train-pretext")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--labels-dir", required=True, type=click.Path(exists=True))
@click.option("--run-dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--toy", is_flag=True, help="use the small 32x32 architecture")
def cmd_train_pretext(manifest_path, labels_dir, run_dir, config_path, toy):
    """Train the zone classifier on pseudo-labels."""
    cfg = load_config(config_path)
    net_cfg = TOY_NET if toy else cfg.net
    manifest = ingest(manifest_path)
    labels = datasets.read_label_csvs(labels_dir, cfg.train.use_smoothed_labels)
    split = split_by_subject(manifest, cfg.pipeline.split_ratio, cfg.pipeline.split_seed)
    if not split.val_subjects:
        click.echo("warning: empty validation split", err=True)
    data = datasets.build_dataset(manifest, labels, "zone", net_cfg.input_size, split)

    net = build_capsule_cnn(net_cfg)
    result = train_pretext(net, data, cfg.train)

    out = _resolve_run_dir(run_dir) / "pretext"
    _write_log_csv(out / "log.csv", LOG_COLUMNS, result.log)
    save_checkpoint(
        out / "checkpoint.bin",
        result.best_state if result.best_state is not None else net,
        metadata={
            "best_epoch": result.best_epoch,
            "best_val_accuracy": result.best_val_accuracy,
            "seed": cfg.train.seed,
            "net_seed": net_cfg.seed,
        },
    )
    with open(out / "split.json", "w") as fh:
        json.dump(
            {
                "train_subjects": sorted(split.train_subjects),
                "val_subjects": sorted(split.val_subjects),
                "ratio": split.ratio,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    click.echo(
        f"best val accuracy {result.best_val_accuracy:.4f} at epoch {result.best_epoch}"
    )


@main.command("adapt")
@click.option("--mode", type=click.Choice(["lp", "ft", "knn"]), required=True)
@click.option("--task", type=click.Choice(["zone", "gaze3d"]), required=True)
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--ground-truth", "gt_csv", required=True, type=click.Path(exists=True))
@click.option("--run-dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
def cmd_adapt(mode, task, checkpoint_path, manifest_path, gt_csv, run_dir, config_path):
    """Adapt a pretext checkpoint: linear probe, fine-tune, or k-NN probe."""
    cfg = load_config(config_path)
    net, _meta = load_checkpoint(checkpoint_path)
    input_size = _input_size_of(net)
    manifest = ingest(manifest_path)
    labels = datasets.read_ground_truth_labels(gt_csv, task)
    split = split_by_subject(manifest, cfg.pipeline.split_ratio, cfg.pipeline.split_seed)
    data = datasets.build_dataset(manifest, labels, task, input_size, split)

    out = _resolve_run_dir(run_dir) / "adapt" / f"{mode}_{task}"
    out.mkdir(parents=True, exist_ok=True)

    if mode == "knn":
        if task != "zone":
            raise click.UsageError("the k-NN probe is a classifier; use --task zone")
        data.require_split()
        train_lat = net.embed(data.images[data.train_idx])
        val_lat = net.embed(data.images[data.val_idx])
        pred = knn_probe(train_lat, data.labels[data.train_idx], val_lat, cfg.adapt.knn_k)
        acc = float((pred == data.labels[data.val_idx]).mean())
        metrics = {"mode": mode, "task": task, "k": cfg.adapt.knn_k, "val_accuracy": acc}
    else:
        run = adapt_linear_probe if mode == "lp" else adapt_fine_tune
        result = run(net, data, task, cfg.adapt)
        _write_log_csv(out / "log.csv", ADAPT_LOG_COLUMNS, result.log)
        save_checkpoint(out / "checkpoint.bin", result.net, metadata={"mode": mode, "task": task})
        metric_name = "val_accuracy" if task == "zone" else "val_angular_error_deg"
        metrics = {"mode": mode, "task": task, metric_name: result.best_val_metric}
        if task == "gaze3d" and result.val_sample_errors is not None:
            with open(out / "val_errors.csv", "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(("index", "angular_error_deg"))
                for i, e in enumerate(result.val_sample_errors):
                    writer.writerow((i, f"{e:.4f}"))
    with open(out / "metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(json.dumps(metrics, sort_keys=True))


def _input_size_of(net) -> int:
    """Infer the square input size from the first dense layer's fan-in."""
    n_caps_dim = None
    spatial_after = None
    for layer in net.layers:
        if layer.kind == "primary_capsule":
            n_caps_dim = layer.n_caps * layer.cap_dim
        if layer.kind == "dense" and n_caps_dim is not None:
            spatial_after = int(round((layer.in_dim / n_caps_dim) ** 0.5))
            break
    if spatial_after is None:
        raise click.UsageError("checkpoint does not look like the pretext architecture")
    return spatial_after * 32  # five 2x2 poolings


@main.command("eval-pupil")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--ground-truth", "gt_csv", required=True, type=click.Path(exists=True))
@click.option("--run-dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
def cmd_eval_pupil(manifest_path, gt_csv, run_dir, config_path):
    """Score the pupil localizer against ground-truth centers."""
    cfg = load_config(config_path)
    manifest = ingest(manifest_path)
    truth = load_ground_truth_pupils(gt_csv)
    summary = evaluate_pupils(manifest, truth, cfg, _resolve_run_dir(run_dir) / "pupil_eval")
    click.echo(json.dumps(summary["accuracy"], sort_keys=True))


@main.command("report")
@click.option("--run-dir", required=True, type=click.Path())
def cmd_report(run_dir):
    """Render SVG charts and a markdown summary for a run directory."""
    path = generate_report(_resolve_run_dir(run_dir))
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
