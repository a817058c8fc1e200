"""Downstream adaptation: linear probing, fine-tuning, and the k-NN probe.

Linear probing freezes the backbone (its blocks stay bit-identical) and
trains a fresh two-layer head; fine-tuning trains everything starting
from the pretrained weights. The k-NN probe classifies in latent space
with similarity-weighted votes and no training at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import AdaptConfig, ConfigError
from .data import ArrayDataset, augment_sample, iter_batches
from .losses import angular_error_deg, cosine_gaze_loss, cross_entropy
from .model import Network, attach_head, make_probe_head
from .optim import SGD

ADAPT_LOG_COLUMNS = ("epoch", "split", "loss", "metric")


@dataclass
class AdaptResult:
    net: Network
    log: list[tuple] = field(default_factory=list)  # rows of ADAPT_LOG_COLUMNS
    best_val_metric: float = 0.0
    val_sample_errors: np.ndarray | None = None  # gaze3d: per-sample degrees


def _loss_and_metric(net: Network, images, labels, task: str, batch_size: int = 256):
    """Eval-mode loss plus task metric (accuracy, or mean angular error)."""
    losses, metric_acc, n = [], 0.0, images.shape[0]
    per_sample = []
    for idx in iter_batches(n, batch_size):
        out = net.forward(images[idx], train=False)
        if task == "zone":
            loss, _ = cross_entropy(out, labels[idx])
            metric_acc += int((out.argmax(axis=1) == labels[idx]).sum())
        else:
            loss, _ = cosine_gaze_loss(labels[idx], out)
            errs = angular_error_deg(labels[idx], out)
            per_sample.append(errs)
            metric_acc += float(errs.sum())
        losses.append(loss * idx.size)
    metric = metric_acc / n
    errors = np.concatenate(per_sample) if per_sample else None
    return sum(losses) / n, metric, errors


def _train_adaptation(net: Network, data: ArrayDataset, cfg: AdaptConfig, augment: bool) -> AdaptResult:
    data.require_split()
    rng = np.random.default_rng(cfg.seed)
    opt = SGD(cfg.lr, cfg.decay, cfg.momentum)
    task = data.task
    x_train = data.images[data.train_idx]
    y_train = data.labels[data.train_idx]
    x_val = data.images[data.val_idx]
    y_val = data.labels[data.val_idx]
    result = AdaptResult(net=net)
    # For zone the tracked metric is accuracy (higher better); for gaze3d
    # it is mean angular error in degrees (lower better).
    best = -np.inf

    def record(epoch: int):
        nonlocal best
        tr = _loss_and_metric(net, x_train, y_train, task)
        va = _loss_and_metric(net, x_val, y_val, task)
        result.log.append((epoch, "train", tr[0], tr[1]))
        result.log.append((epoch, "val", va[0], va[1]))
        score = va[1] if task == "zone" else -va[1]
        if score > best:
            best = score
            result.best_val_metric = va[1]
            result.val_sample_errors = va[2]

    record(0)
    for epoch in range(cfg.epochs):
        for idx in iter_batches(x_train.shape[0], cfg.batch_size, rng):
            xb = x_train[idx]
            yb = y_train[idx]
            if augment:
                xb = xb.copy()
                yb = yb.copy()
                for j in range(xb.shape[0]):
                    xb[j], yb[j] = augment_sample(xb[j], yb[j], task, rng)
            out = net.forward(xb, train=True)
            if task == "zone":
                _, dout = cross_entropy(out, yb)
            else:
                _, dout = cosine_gaze_loss(yb, out)
            net.backward(dout)
            opt.step(net, epoch)
        record(epoch + 1)
    return result


def adapt_linear_probe(
    backbone: Network, data: ArrayDataset, task: str, cfg: AdaptConfig = AdaptConfig()
) -> AdaptResult:
    """Train a new FC head on top of the frozen backbone.

    The donor network is untouched; the returned network's backbone blocks
    are bit-identical to the donor's.
    """
    if task != data.task:
        raise ConfigError(f"dataset task {data.task!r} != requested {task!r}")
    latent_dim = _latent_dim(backbone)
    head = make_probe_head(task, latent_dim, cfg.head_dim, n_classes=3, seed=cfg.seed)
    net = attach_head(backbone, head)
    net.freeze_backbone()
    return _train_adaptation(net, data, cfg, augment=cfg.augment)


def adapt_fine_tune(
    backbone: Network, data: ArrayDataset, task: str, cfg: AdaptConfig = AdaptConfig()
) -> AdaptResult:
    """Train the whole network (same head construction as the probe) from
    the pretrained weights."""
    if task != data.task:
        raise ConfigError(f"dataset task {data.task!r} != requested {task!r}")
    latent_dim = _latent_dim(backbone)
    head = make_probe_head(task, latent_dim, cfg.head_dim, n_classes=3, seed=cfg.seed)
    net = attach_head(backbone, head)
    for layer in net.layers:
        layer.frozen = False
    return _train_adaptation(net, data, cfg, augment=False)


def _latent_dim(net: Network) -> int:
    for layer in reversed(net.layers[: net.latent_index + 1]):
        params = layer.params()
        if "W" in params and params["W"].ndim == 2:
            return params["W"].shape[1]
    raise ConfigError("could not infer latent dimension from the backbone")


def knn_probe(
    train_latents: np.ndarray,
    train_labels: np.ndarray,
    query: np.ndarray,
    k: int = 14,
) -> np.ndarray:
    """Similarity-weighted k-NN labels for one or many query latents.

    Neighbors are ranked by cosine similarity; each of the k nearest votes
    with weight equal to its similarity. Exact ties in total weight break
    on ascending label index.
    """
    train_latents = np.atleast_2d(np.asarray(train_latents, dtype=np.float64))
    queries = np.atleast_2d(np.asarray(query, dtype=np.float64))
    labels = np.asarray(train_labels)
    n = train_latents.shape[0]
    if n == 0:
        raise ConfigError("empty training set for the k-NN probe")
    if not (1 <= k <= n):
        raise ConfigError(f"k must be in [1, {n}], got {k}")

    def unit(v):
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        return v / np.where(norms == 0.0, 1.0, norms)

    sims = unit(queries) @ unit(train_latents).T  # (Q, N)
    out = np.empty(queries.shape[0], dtype=labels.dtype)
    n_classes = int(labels.max()) + 1
    for qi in range(queries.shape[0]):
        row = sims[qi]
        # stable top-k: similarity desc, then training index asc
        order = np.lexsort((np.arange(n), -row))[:k]
        votes = np.zeros(n_classes)
        np.add.at(votes, labels[order], row[order])
        out[qi] = int(votes.argmax())  # argmax keeps the lowest tied label
    return out if np.asarray(query).ndim > 1 else out[0]
