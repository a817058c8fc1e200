"""Network assembly: the capsule-CNN zone classifier and adaptation heads.

The pretext architecture is five conv(3x3, stride 1) -> batch-norm ->
ReLU -> max-pool(2x2) blocks, a primary-capsule projection, then
FC -> FC -> FC(3) -> softmax. The latent representation is the output of
the second fully-connected block (post-ReLU); everything up to and
including that point is the backbone, the rest is the head.
"""

from __future__ import annotations

import copy

import numpy as np

from ..config import NetConfig
from .layers import (
    BatchNorm2D,
    Conv2D,
    Dense,
    Flatten,
    Layer,
    MaxPool2D,
    NumericFault,
    PrimaryCapsule,
    ReLU,
    Softmax,
    squash,
)

VALID_INPUT_SIZES = (32, 64, 128)


class ArchitectureError(ValueError):
    pass


class Network:
    """Sequential stack with a designated latent tap.

    `latent_index` is the layer whose forward output is the latent vector;
    layers [0 .. latent_index] form the backbone.
    """

    def __init__(self, layers: list[Layer], latent_index: int):
        if not (0 <= latent_index < len(layers)):
            raise ArchitectureError(f"latent_index {latent_index} out of range")
        self.layers = layers
        self.latent_index = latent_index

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        return self.forward_with_latents(x, train)[0]

    def forward_with_latents(
        self, x: np.ndarray, train: bool = False
    ) -> tuple[np.ndarray, np.ndarray]:
        out = np.asarray(x, dtype=np.float64)
        latent = None
        for i, layer in enumerate(self.layers):
            out = layer.forward(out, train=train and not layer.frozen)
            if not np.isfinite(out).all():
                raise NumericFault(i, layer.kind)
            if i == self.latent_index:
                latent = out
        return out, latent

    def embed(self, x: np.ndarray) -> np.ndarray:
        """Latent vectors only (eval mode)."""
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers[: self.latent_index + 1]:
            out = layer.forward(out, train=False)
        return out.reshape(out.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        d = dout
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return d

    def param_items(self):
        """(block_name, param, grad, frozen) over all layers, fixed order."""
        for i, layer in enumerate(self.layers):
            grads = layer.grads()
            for name, p in layer.params().items():
                yield f"{i:02d}.{layer.kind}.{name}", p, grads[name], layer.frozen

    def param_blocks(self) -> dict[str, np.ndarray]:
        return {name: p for name, p, _, _ in self.param_items()}

    def buffer_blocks(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            for name, b in layer.buffers().items():
                out[f"{i:02d}.{layer.kind}.{name}"] = b
        return out

    def backbone_blocks(self) -> dict[str, np.ndarray]:
        """Parameter and buffer blocks of the backbone (for freeze checks)."""
        out = {}
        for i, layer in enumerate(self.layers[: self.latent_index + 1]):
            for name, p in layer.params().items():
                out[f"{i:02d}.{layer.kind}.{name}"] = p
            for name, b in layer.buffers().items():
                out[f"{i:02d}.{layer.kind}.{name}"] = b
        return out

    def n_params(self) -> int:
        return sum(p.size for p in self.param_blocks().values())

    def freeze_backbone(self) -> None:
        for layer in self.layers[: self.latent_index + 1]:
            layer.frozen = True

    def clone(self) -> "Network":
        return copy.deepcopy(self)


def build_capsule_cnn(cfg: NetConfig = NetConfig()) -> Network:
    """Build the pretext network with Glorot-normal weights, zero biases.

    Same seed, same parameters, bit for bit.
    """
    if cfg.input_size not in VALID_INPUT_SIZES:
        raise ArchitectureError(
            f"input_size must be one of {VALID_INPUT_SIZES}, got {cfg.input_size}"
        )
    if len(cfg.conv_widths) != 5 or any(w < 1 for w in cfg.conv_widths):
        raise ArchitectureError(f"need 5 positive conv widths, got {cfg.conv_widths}")
    if cfg.n_capsules < 1 or cfg.capsule_dim < 1:
        raise ArchitectureError("capsule spec must be positive")

    rng = np.random.default_rng(cfg.seed)
    layers: list[Layer] = []
    in_ch = cfg.in_channels
    spatial = cfg.input_size
    for width in cfg.conv_widths:
        layers += [
            Conv2D(in_ch, width, ksize=3, pad=1),
            BatchNorm2D(width, momentum=cfg.bn_momentum),
            ReLU(),
            MaxPool2D(2),
        ]
        in_ch = width
        spatial //= 2
    if spatial < 1:
        raise ArchitectureError(f"input {cfg.input_size} too small for 5 poolings")
    layers.append(PrimaryCapsule(in_ch, cfg.n_capsules, cfg.capsule_dim))
    layers.append(Flatten())
    flat_dim = cfg.n_capsules * cfg.capsule_dim * spatial * spatial
    fc1, fc2 = cfg.fc_dims
    layers += [Dense(flat_dim, fc1), ReLU(), Dense(fc1, fc2), ReLU()]
    latent_index = len(layers) - 1
    layers += [Dense(fc2, cfg.n_classes), Softmax()]

    for layer in layers:
        layer.init_params(rng)
    return Network(layers, latent_index)


def make_probe_head(
    task: str, latent_dim: int, head_dim: int, n_classes: int, seed: int
) -> list[Layer]:
    """Adaptation head: FC(head_dim) -> FC(head_dim) -> task output.

    "zone" ends in an n_classes softmax; "gaze3d" ends in a linear
    3-vector regressor.
    """
    if task not in ("zone", "gaze3d"):
        raise ArchitectureError(f"unknown task: {task}")
    rng = np.random.default_rng(seed)
    out_dim = n_classes if task == "zone" else 3
    head: list[Layer] = [
        Dense(latent_dim, head_dim),
        ReLU(),
        Dense(head_dim, head_dim),
        ReLU(),
        Dense(head_dim, out_dim),
    ]
    if task == "zone":
        head.append(Softmax())
    for layer in head:
        layer.init_params(rng)
    return head


def attach_head(backbone: Network, head: list[Layer]) -> Network:
    """New network = deep copy of the backbone trunk + the given head.

    A Flatten bridges the trunk's latent output into the head. The donor
    network is never mutated.
    """
    trunk = copy.deepcopy(backbone.layers[: backbone.latent_index + 1])
    bridge: list[Layer] = [Flatten()]
    layers = trunk + bridge + head
    return Network(layers, latent_index=backbone.latent_index)
