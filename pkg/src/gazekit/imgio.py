"""8-bit PNG and PPM (P6) decode/encode.

Images load as (H, W, 3) uint8 arrays regardless of source channel count;
grayscale sources are replicated across channels.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .imaging import DimensionError


def load_rgb(path: str | Path) -> np.ndarray:
    """Load a PNG or PPM file as an (H, W, 3) uint8 array."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"empty or malformed image: {path}")
    return arr


def save_rgb(path: str | Path, rgb: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as PNG or PPM (by extension)."""
    arr = np.asarray(rgb, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) array, got shape {arr.shape}")
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        Image.fromarray(arr).save(path, format="PNG")
    elif suffix in (".ppm", ".pnm"):
        Image.fromarray(arr).save(path, format="PPM")
    else:
        raise ValueError(f"unsupported image extension: {path.suffix}")
