"""Pretext training loop: cross-entropy over the three pseudo zones.

Single-threaded and deterministic: a fixed seed and fixed data order give
bit-identical parameters after any number of epochs. The best-validation
model state is kept (earlier epoch wins ties).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..config import ConfigError, TrainConfig
from .data import ArrayDataset, iter_batches
from .losses import cross_entropy
from .model import Network
from .optim import SGD

LOG_COLUMNS = ("epoch", "split", "loss", "accuracy")


@dataclass
class TrainResult:
    log: list[tuple] = field(default_factory=list)  # rows of LOG_COLUMNS
    best_val_accuracy: float = 0.0
    best_epoch: int = -1
    best_state: Network | None = None
    epochs_run: int = 0


def evaluate_zone(net: Network, images: np.ndarray, labels: np.ndarray, batch_size: int = 256):
    """(mean CE loss, accuracy) in eval mode."""
    losses = []
    correct = 0
    for idx in iter_batches(images.shape[0], batch_size):
        probs = net.forward(images[idx], train=False)
        loss, _ = cross_entropy(probs, labels[idx])
        losses.append(loss * idx.size)
        correct += int((probs.argmax(axis=1) == labels[idx]).sum())
    n = images.shape[0]
    return sum(losses) / n, correct / n


def train_pretext(net: Network, data: ArrayDataset, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Minimize zone cross-entropy; log per-epoch train/val loss/accuracy.

    Epoch 0 rows log the initial (untrained) metrics, so a zero-epoch call
    still returns a measurement.
    """
    if data.task != "zone":
        raise ConfigError("pretext training expects the zone task")
    data.require_split()
    rng = np.random.default_rng(cfg.seed)
    opt = SGD(cfg.lr, cfg.decay, cfg.momentum)
    result = TrainResult()

    x_train = data.images[data.train_idx]
    y_train = data.labels[data.train_idx]
    x_val = data.images[data.val_idx]
    y_val = data.labels[data.val_idx]

    def record(epoch: int) -> float:
        tr_loss, tr_acc = evaluate_zone(net, x_train, y_train)
        va_loss, va_acc = evaluate_zone(net, x_val, y_val)
        result.log.append((epoch, "train", tr_loss, tr_acc))
        result.log.append((epoch, "val", va_loss, va_acc))
        if va_acc > result.best_val_accuracy or result.best_epoch < 0:
            result.best_val_accuracy = va_acc
            result.best_epoch = epoch
            result.best_state = net.clone()
        return va_acc

    val_acc = record(0)
    for epoch in range(cfg.epochs):
        if cfg.stop_at_val_acc is not None and val_acc >= cfg.stop_at_val_acc:
            break
        for idx in iter_batches(x_train.shape[0], cfg.batch_size, rng):
            probs = net.forward(x_train[idx], train=True)
            _, dprobs = cross_entropy(probs, y_train[idx])
            net.backward(dprobs)
            opt.step(net, epoch)
        result.epochs_run = epoch + 1
        val_acc = record(epoch + 1)
    return result
