"""Momentum SGD with the per-epoch decay schedule.

The effective rate at epoch k (0-based) is lr / (1 + decay * k). Frozen
layers are skipped entirely, leaving their parameters bit-identical.
"""

from __future__ import annotations

import numpy as np


def sgd_update(
    param: np.ndarray,
    grad: np.ndarray,
    velocity: np.ndarray,
    lr_eff: float,
    momentum: float,
) -> np.ndarray:
    """One in-place momentum step: v <- momentum * v - lr * g; p <- p + v."""
    if grad.shape != param.shape:
        raise ValueError(f"grad shape {grad.shape} != param shape {param.shape}")
    velocity *= momentum
    velocity -= lr_eff * grad
    param += velocity
    return velocity


class SGD:
    def __init__(self, lr: float = 0.001, decay: float = 1e-6, momentum: float = 0.0):
        self.lr, self.decay, self.momentum = lr, decay, momentum
        self._velocities: dict[str, np.ndarray] = {}

    def effective_lr(self, epoch: int) -> float:
        return self.lr / (1.0 + self.decay * epoch)

    def step(self, net, epoch: int) -> None:
        lr_eff = self.effective_lr(epoch)
        for name, param, grad, frozen in net.param_items():
            if frozen:
                continue
            vel = self._velocities.get(name)
            if vel is None or vel.shape != param.shape:
                vel = np.zeros_like(param)
                self._velocities[name] = vel
            sgd_update(param, grad, vel, lr_eff, self.momentum)
