"""Training losses with analytic gradients."""

from __future__ import annotations

import numpy as np

PROB_FLOOR = 1e-12


class DegenerateGaze(ValueError):
    """Zero-norm gaze vector."""


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood over the batch.

    probs: (N, C) distribution rows; targets: (N,) class indices.
    Probabilities are clamped at 1e-12 before the log; the gradient is zero
    inside the clamp.
    """
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    rows = np.arange(n)
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6) or (probs < -1e-9).any():
        raise ValueError("rows of probs must be probability distributions")
    p = probs[rows, targets]
    clamped = p < PROB_FLOOR
    loss = float(-np.log(np.maximum(p, PROB_FLOOR)).mean())
    dprobs = np.zeros_like(probs)
    dprobs[rows, targets] = np.where(clamped, 0.0, -1.0 / (np.maximum(p, PROB_FLOOR) * n))
    return loss, dprobs


def cosine_gaze_loss(g: np.ndarray, g_pred: np.ndarray) -> tuple[float, np.ndarray]:
    """1 - cosine similarity, averaged over the batch; gradient w.r.t. the
    prediction. Invariant to positive rescaling of either argument."""
    g = np.atleast_2d(np.asarray(g, dtype=np.float64))
    gp = np.atleast_2d(np.asarray(g_pred, dtype=np.float64))
    gn = np.linalg.norm(g, axis=1, keepdims=True)
    gpn = np.linalg.norm(gp, axis=1, keepdims=True)
    if (gn == 0).any() or (gpn == 0).any():
        raise DegenerateGaze("zero-norm gaze vector")
    gu = g / gn
    gpu = gp / gpn
    cos = np.sum(gu * gpu, axis=1, keepdims=True)
    n = g.shape[0]
    loss = float(np.mean(1.0 - cos))
    dgp = -(gu - cos * gpu) / gpn / n
    return loss, dgp


def angular_error_deg(g: np.ndarray, g_pred: np.ndarray) -> np.ndarray:
    """Per-row angle between prediction and target, degrees."""
    g = np.atleast_2d(np.asarray(g, dtype=np.float64))
    gp = np.atleast_2d(np.asarray(g_pred, dtype=np.float64))
    gn = np.linalg.norm(g, axis=1)
    gpn = np.linalg.norm(gp, axis=1)
    if (gn == 0).any() or (gpn == 0).any():
        raise DegenerateGaze("zero-norm gaze vector")
    cos = np.clip(np.sum(g * gp, axis=1) / (gn * gpn), -1.0, 1.0)
    return np.degrees(np.arccos(cos))
