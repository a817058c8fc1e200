"""In-memory datasets, batching, and the augmentation used by probing.

Images are (3, S, S) float64 in [0, 1]. Horizontal flips transform the
label with the image: a gaze vector (x, y, z) becomes (-x, y, z), a zone
label swaps left and right. Both transforms are involutions, so flipping
twice restores the original pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import ConfigError
from ..heuristic import Zone, ZONE_INDEX

ZONE_TO_INDEX = dict(ZONE_INDEX)
INDEX_TO_ZONE = {i: z for z, i in ZONE_TO_INDEX.items()}

# left <-> right, center fixed, by zone index
_FLIP_ZONE = np.array(
    [ZONE_TO_INDEX[Zone.RIGHT], ZONE_TO_INDEX[Zone.LEFT], ZONE_TO_INDEX[Zone.CENTER]]
)


@dataclass
class ArrayDataset:
    """Images plus task labels and the subject-disjoint split indices."""

    images: np.ndarray  # (N, 3, S, S) float64
    labels: np.ndarray  # (N,) int for zone, (N, 3) float for gaze3d
    ids: list[str]
    task: str  # "zone" | "gaze3d"
    train_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    val_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        if self.task not in ("zone", "gaze3d"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.images.shape[0] != len(self.ids) or self.labels.shape[0] != len(self.ids):
            raise ConfigError("images, labels and ids must align")

    def require_split(self):
        if self.train_idx.size == 0 or self.val_idx.size == 0:
            raise ConfigError("dataset needs non-empty train and val splits")


def image_to_tensor(rgb: np.ndarray) -> np.ndarray:
    """(H, W, 3) uint8 -> (3, H, W) float64 in [0, 1]."""
    return rgb.astype(np.float64).transpose(2, 0, 1) / 255.0


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a (C, H, W) tensor with bilinear sampling (half-pixel centers)."""
    c, h, w = img.shape
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[None, :, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, None, :]
    top = img[:, y0][:, :, x0] * (1 - wx) + img[:, y0][:, :, x1] * wx
    bottom = img[:, y1][:, :, x0] * (1 - wx) + img[:, y1][:, :, x1] * wx
    return top * (1 - wy) + bottom * wy


def hflip_image(img: np.ndarray) -> np.ndarray:
    return img[:, :, ::-1].copy()


def flip_label(label, task: str):
    if task == "gaze3d":
        out = np.asarray(label, dtype=np.float64).copy()
        out[..., 0] = -out[..., 0]
        return out
    return _FLIP_ZONE[label]


def augment_sample(
    img: np.ndarray,
    label,
    task: str,
    rng: np.random.Generator,
    max_scale: float = 1.25,
):
    """Random resize, random crop back to the input size, then a coin-flip
    horizontal mirror with the matching label transform."""
    c, h, w = img.shape
    scale = rng.uniform(1.0, max_scale)
    nh, nw = max(h, round(h * scale)), max(w, round(w * scale))
    out = bilinear_resize(img, nh, nw) if (nh, nw) != (h, w) else img
    oy = rng.integers(0, nh - h + 1)
    ox = rng.integers(0, nw - w + 1)
    out = out[:, oy : oy + h, ox : ox + w]
    if rng.random() < 0.5:
        out = hflip_image(out)
        label = flip_label(label, task)
    return out, label


def iter_batches(n: int, batch_size: int, rng: np.random.Generator | None = None):
    """Yield index arrays; shuffled when an rng is given."""
    order = np.arange(n)
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]
