"""Finite-difference verification of analytic gradients.

Runs the network in eval mode so every loss evaluation is a deterministic
function of the parameters, then compares each sampled parameter's
analytic gradient against a central difference.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .losses import cross_entropy
from .model import Network

MAX_CHECKED_PARAMS = 100_000


def grad_check(
    net: Network,
    batch: np.ndarray,
    targets: np.ndarray,
    loss_fn: Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]] = cross_entropy,
    h: float = 1e-5,
    fraction: float = 0.01,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples a `fraction` subset (at least one entry) of each parameter
    block. The network must be small enough to afford two forward passes
    per sampled parameter.
    """
    if net.n_params() > MAX_CHECKED_PARAMS:
        raise ValueError(
            f"grad_check is for toy networks (<= {MAX_CHECKED_PARAMS} params), "
            f"got {net.n_params()}"
        )
    rng = np.random.default_rng(seed)

    out = net.forward(batch, train=False)
    _, dout = loss_fn(out, targets)
    net.backward(dout)
    analytic = {name: grad.copy() for name, _, grad, _ in net.param_items()}

    worst = 0.0
    for name, param, _, _ in net.param_items():
        k = max(1, round(fraction * param.size))
        idx = rng.choice(param.size, size=min(k, param.size), replace=False)
        for flat_i in idx:
            original = param.flat[flat_i]
            param.flat[flat_i] = original + h
            loss_plus = loss_fn(net.forward(batch, train=False), targets)[0]
            param.flat[flat_i] = original - h
            loss_minus = loss_fn(net.forward(batch, train=False), targets)[0]
            param.flat[flat_i] = original
            fd = (loss_plus - loss_minus) / (2.0 * h)
            a = analytic[name].flat[flat_i]
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
            worst = max(worst, rel)
    return worst
