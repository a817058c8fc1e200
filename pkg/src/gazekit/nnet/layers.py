"""Network layers with explicit forward/backward passes, float64 only.

Activations are NCHW. Each layer caches what its backward pass needs;
parameter gradients accumulate into `grads()` arrays on backward. A frozen
layer still propagates gradients to its input but is skipped by the
optimizer and always runs in eval mode.
"""

from __future__ import annotations

import numpy as np


class NumericFault(FloatingPointError):
    """Non-finite value produced by a layer."""

    def __init__(self, layer_index: int, kind: str):
        super().__init__(f"non-finite output at layer {layer_index} ({kind})")
        self.layer_index = layer_index


def glorot_normal(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    std = np.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, std, size=shape)


def squash(s: np.ndarray, axis: int = -1) -> np.ndarray:
    """Capsule nonlinearity: s -> (||s||^2 / (1 + ||s||^2)) * s / ||s||.

    Zero vectors map to zero; output norms stay strictly below 1.
    """
    n2 = np.sum(s * s, axis=axis, keepdims=True)
    n = np.sqrt(n2)
    return s * (n / (1.0 + n2))


def squash_backward(s: np.ndarray, dv: np.ndarray, axis: int = -1) -> np.ndarray:
    n2 = np.sum(s * s, axis=axis, keepdims=True)
    n = np.sqrt(n2)
    f = n / (1.0 + n2)
    fprime = (1.0 - n2) / (1.0 + n2) ** 2
    dot = np.sum(s * dv, axis=axis, keepdims=True)
    nsafe = np.where(n == 0.0, 1.0, n)
    return f * dv + np.where(n == 0.0, 0.0, fprime / nsafe) * s * dot


class Layer:
    kind = "base"

    def __init__(self):
        self.frozen = False
        self._cache = None

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def buffers(self) -> dict[str, np.ndarray]:
        return {}

    def spec(self) -> dict:
        return {}

    def init_params(self, rng: np.random.Generator) -> None:
        pass

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        self.W = np.zeros((in_dim, out_dim))
        self.b = np.zeros(out_dim)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    def spec(self):
        return {"in_dim": self.in_dim, "out_dim": self.out_dim}

    def params(self):
        return {"W": self.W, "b": self.b}

    def grads(self):
        return {"W": self.dW, "b": self.db}

    def init_params(self, rng):
        self.W = glorot_normal(rng, (self.in_dim, self.out_dim), self.in_dim, self.out_dim)
        self.b = np.zeros(self.out_dim)

    def forward(self, x, train=False):
        self._cache = x
        return x @ self.W + self.b

    def backward(self, dy):
        x = self._cache
        self.dW = x.T @ dy
        self.db = dy.sum(axis=0)
        return dy @ self.W.T


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train=False):
        mask = x > 0
        self._cache = mask
        return np.where(mask, x, 0.0)

    def backward(self, dy):
        return np.where(self._cache, dy, 0.0)


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, train=False):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._cache)


class Softmax(Layer):
    kind = "softmax"

    def forward(self, x, train=False):
        shifted = x - x.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        p = e / e.sum(axis=1, keepdims=True)
        self._cache = p
        return p

    def backward(self, dy):
        p = self._cache
        return p * (dy - np.sum(dy * p, axis=1, keepdims=True))


class Conv2D(Layer):
    """3x3-style convolution, stride 1, zero padding."""

    kind = "conv"

    def __init__(self, in_ch: int, out_ch: int, ksize: int = 3, pad: int = 1):
        super().__init__()
        self.in_ch, self.out_ch, self.ksize, self.pad = in_ch, out_ch, ksize, pad
        self.W = np.zeros((out_ch, in_ch, ksize, ksize))
        self.b = np.zeros(out_ch)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    def spec(self):
        return {
            "in_ch": self.in_ch,
            "out_ch": self.out_ch,
            "ksize": self.ksize,
            "pad": self.pad,
        }

    def params(self):
        return {"W": self.W, "b": self.b}

    def grads(self):
        return {"W": self.dW, "b": self.db}

    def init_params(self, rng):
        k2 = self.ksize * self.ksize
        self.W = glorot_normal(
            rng, self.W.shape, self.in_ch * k2, self.out_ch * k2
        )
        self.b = np.zeros(self.out_ch)

    def forward(self, x, train=False):
        n, c, h, w = x.shape
        k, p = self.ksize, self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        oh, ow = h + 2 * p - k + 1, w + 2 * p - k + 1
        cols = np.empty((n, c, k, k, oh, ow))
        for u in range(k):
            for v in range(k):
                cols[:, :, u, v] = xp[:, :, u : u + oh, v : v + ow]
        out = np.tensordot(self.W, cols, axes=([1, 2, 3], [1, 2, 3]))
        out = out.transpose(1, 0, 2, 3) + self.b[None, :, None, None]
        self._cache = (x.shape, cols)
        return out

    def backward(self, dy):
        (n, c, h, w), cols = self._cache
        k, p = self.ksize, self.pad
        oh, ow = dy.shape[2], dy.shape[3]
        self.dW = np.tensordot(dy, cols, axes=([0, 2, 3], [0, 4, 5]))
        self.db = dy.sum(axis=(0, 2, 3))
        dcols = np.tensordot(dy, self.W, axes=([1], [0]))  # (n, oh, ow, c, k, k)
        dxp = np.zeros((n, c, h + 2 * p, w + 2 * p))
        for u in range(k):
            for v in range(k):
                dxp[:, :, u : u + oh, v : v + ow] += dcols[:, :, :, :, u, v].transpose(
                    0, 3, 1, 2
                )
        if p == 0:
            return dxp
        return dxp[:, :, p : p + h, p : p + w]


class BatchNorm2D(Layer):
    """Per-channel batch normalization over (N, H, W).

    Train mode normalizes with batch statistics and, unless stats updates
    are suppressed, folds them into the running averages; eval mode uses
    the running averages. Frozen instances always run in eval mode.
    """

    kind = "batchnorm"

    def __init__(self, channels: int, momentum: float = 0.99, eps: float = 1e-5):
        super().__init__()
        self.channels, self.momentum, self.eps = channels, momentum, eps
        self.gamma = np.ones(channels)
        self.beta = np.zeros(channels)
        self.dgamma = np.zeros(channels)
        self.dbeta = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        # update counter; the first update seeds the averages directly
        self.stats_steps = np.zeros(1)

    def spec(self):
        return {"channels": self.channels, "momentum": self.momentum, "eps": self.eps}

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def grads(self):
        return {"gamma": self.dgamma, "beta": self.dbeta}

    def buffers(self):
        return {
            "running_mean": self.running_mean,
            "running_var": self.running_var,
            "stats_steps": self.stats_steps,
        }

    def forward(self, x, train=False, update_stats=True):
        if train:
            mu = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            if update_stats:
                if self.stats_steps[0] == 0:
                    self.running_mean = mu.copy()
                    self.running_var = var.copy()
                else:
                    m = self.momentum
                    self.running_mean = m * self.running_mean + (1 - m) * mu
                    self.running_var = m * self.running_var + (1 - m) * var
                self.stats_steps[0] += 1
        else:
            mu, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu[None, :, None, None]) * inv_std[None, :, None, None]
        self._cache = (xhat, inv_std, train)
        return self.gamma[None, :, None, None] * xhat + self.beta[None, :, None, None]

    def backward(self, dy):
        xhat, inv_std, was_train = self._cache
        self.dgamma = np.sum(dy * xhat, axis=(0, 2, 3))
        self.dbeta = np.sum(dy, axis=(0, 2, 3))
        g = (self.gamma * inv_std)[None, :, None, None]
        if not was_train:
            return dy * g
        n, _, h, w = dy.shape
        m = n * h * w
        sum_dy = np.sum(dy, axis=(0, 2, 3), keepdims=True)
        sum_dy_xhat = np.sum(dy * xhat, axis=(0, 2, 3), keepdims=True)
        return g / m * (m * dy - sum_dy - xhat * sum_dy_xhat)


class MaxPool2D(Layer):
    """2x2 max pooling, stride 2; odd trailing rows/columns are dropped.

    Gradient routes to the first maximum in each window, which keeps
    backward deterministic under ties.
    """

    kind = "maxpool"

    def __init__(self, size: int = 2):
        super().__init__()
        self.size = size

    def spec(self):
        return {"size": self.size}

    def forward(self, x, train=False):
        s = self.size
        n, c, h, w = x.shape
        oh, ow = h // s, w // s
        windows = (
            x[:, :, : oh * s, : ow * s]
            .reshape(n, c, oh, s, ow, s)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, oh, ow, s * s)
        )
        idx = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
        self._cache = (x.shape, idx)
        return out

    def backward(self, dy):
        s = self.size
        (n, c, h, w), idx = self._cache
        oh, ow = h // s, w // s
        dwindows = np.zeros((n, c, oh, ow, s * s))
        np.put_along_axis(dwindows, idx[..., None], dy[..., None], axis=-1)
        dx = np.zeros((n, c, h, w))
        dx[:, :, : oh * s, : ow * s] = (
            dwindows.reshape(n, c, oh, ow, s, s)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, oh * s, ow * s)
        )
        return dx


class PrimaryCapsule(Layer):
    """Capsule projection: 1x1 conv to n_caps * cap_dim channels, then the
    squash nonlinearity applied per capsule vector at every position."""

    kind = "primary_capsule"

    def __init__(self, in_ch: int, n_caps: int, cap_dim: int):
        super().__init__()
        self.in_ch, self.n_caps, self.cap_dim = in_ch, n_caps, cap_dim
        self.conv = Conv2D(in_ch, n_caps * cap_dim, ksize=1, pad=0)

    def spec(self):
        return {"in_ch": self.in_ch, "n_caps": self.n_caps, "cap_dim": self.cap_dim}

    def params(self):
        return self.conv.params()

    def grads(self):
        return self.conv.grads()

    def init_params(self, rng):
        self.conv.init_params(rng)

    def forward(self, x, train=False):
        z = self.conv.forward(x, train)
        n, _, h, w = z.shape
        s = z.reshape(n, self.n_caps, self.cap_dim, h, w)
        self._cache = s
        v = squash(s, axis=2)
        return v.reshape(n, self.n_caps * self.cap_dim, h, w)

    def backward(self, dy):
        s = self._cache
        n, _, cd, h, w = s.shape
        dv = dy.reshape(s.shape)
        ds = squash_backward(s, dv, axis=2)
        return self.conv.backward(ds.reshape(n, self.n_caps * self.cap_dim, h, w))


LAYER_KINDS = {
    cls.kind: cls
    for cls in (Dense, ReLU, Flatten, Softmax, Conv2D, BatchNorm2D, MaxPool2D, PrimaryCapsule)
}
