"""Classical image-processing primitives for the pupil localizer.

All rasters are row-major with origin at the top-left corner, x rightward
and y downward. Every operation is a pure function: inputs are never
mutated and identical input bytes give identical output bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage


class DimensionError(ValueError):
    """Raster with invalid or empty dimensions."""


class ParameterError(ValueError):
    """Operation parameter outside its documented range."""


class DegenerateHistogram(ValueError):
    """Image has fewer than two distinct gray levels."""


@dataclass(frozen=True)
class GrayImage:
    """Single-channel 8-bit raster, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise DimensionError(f"expected non-empty 2-D raster, got shape {p.shape}")
        if p.dtype != np.uint8:
            raise DimensionError(f"expected uint8 pixels, got {p.dtype}")
        p.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class BitMask:
    """Boolean raster with the same layout conventions as GrayImage."""

    bits: np.ndarray

    def __post_init__(self):
        b = self.bits
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise DimensionError(f"expected non-empty 2-D mask, got shape {b.shape}")
        if b.dtype != np.bool_:
            raise DimensionError(f"expected bool mask, got {b.dtype}")
        b.setflags(write=False)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class Circle:
    """Detected circle: center (cx, cy) in pixel coordinates, radius r, accumulator score."""

    cx: float
    cy: float
    r: float
    score: int = 0

    def __post_init__(self):
        if self.r <= 0:
            raise ParameterError(f"circle radius must be positive, got {self.r}")


class Blob(NamedTuple):
    """Connected component: centroid (cx, cy) and pixel count."""

    cx: float
    cy: float
    area: int


def to_gray(rgb: np.ndarray) -> GrayImage:
    """Convert a 3-channel (H, W, 3) raster to luminance.

    Uses 0.299 R + 0.587 G + 0.114 B, rounded half-up.
    """
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) raster, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError("empty image")
    arr = arr.astype(np.float64)
    luma = 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]
    return GrayImage(np.floor(luma + 0.5).astype(np.uint8))


def histogram256(img: GrayImage) -> np.ndarray:
    """256-bin intensity histogram (int64 counts)."""
    return np.bincount(img.pixels.reshape(-1), minlength=256).astype(np.int64)


def otsu_threshold(img: GrayImage) -> int:
    """Threshold level t in [0, 255] maximizing between-class variance.

    Classes are {pixels <= t} and {pixels > t}; which side is foreground is
    the caller's choice. Ties resolve to the smallest t. Raises
    DegenerateHistogram on a constant image.
    """
    hist = histogram256(img).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        raise DegenerateHistogram("need at least two distinct gray levels")
    levels = np.arange(256, dtype=np.float64)
    total = hist.sum()
    # Cumulative counts / first moments of the low class at each threshold t.
    w0 = np.cumsum(hist)
    m0 = np.cumsum(hist * levels)
    w1 = total - w0
    m1 = m0[-1] - m0
    valid = (w0 > 0) & (w1 > 0)
    between = np.zeros(256)
    between[valid] = (m0[valid] * w1[valid] - m1[valid] * w0[valid]) ** 2 / (
        w0[valid] * w1[valid]
    )
    return int(np.argmax(between))  # argmax keeps the smallest tied index


def adaptive_threshold(img: GrayImage, window: int, offset_c: float) -> BitMask:
    """Set a pixel iff its value < (local mean over window) - offset_c.

    The window is square with odd side `window`; at the borders it is
    clipped to the image and the mean is taken over the valid pixels only.
    """
    if window % 2 == 0 or window < 3:
        raise ParameterError(f"window must be odd and >= 3, got {window}")
    if window > min(img.width, img.height):
        raise ParameterError(
            f"window {window} exceeds image {img.width}x{img.height}"
        )
    vals = img.pixels.astype(np.float64)
    h, w = vals.shape
    half = window // 2
    # Summed-area table with a leading zero row/column.
    sat = np.zeros((h + 1, w + 1))
    sat[1:, 1:] = np.cumsum(np.cumsum(vals, axis=0), axis=1)
    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.clip(ys - half, 0, h)
    y1 = np.clip(ys + half + 1, 0, h)
    x0 = np.clip(xs - half, 0, w)
    x1 = np.clip(xs + half + 1, 0, w)
    area = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    window_sum = (
        sat[y1[:, None], x1[None, :]]
        - sat[y0[:, None], x1[None, :]]
        - sat[y1[:, None], x0[None, :]]
        + sat[y0[:, None], x0[None, :]]
    )
    mean = window_sum / area
    return BitMask(vals < mean - offset_c)


def _gaussian_kernel_5x5(sigma: float) -> np.ndarray:
    ax = np.arange(-2.0, 3.0)
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = _SOBEL_X.T


def canny(img: GrayImage, low: float = 50.0, high: float = 150.0, sigma: float = 1.0) -> BitMask:
    """Canny edge detection: 5x5 Gaussian smoothing, Sobel gradients,
    non-maximum suppression, then double-threshold hysteresis.

    Border handling replicates edge pixels, so edges away from the border
    are translation-equivariant. Returns thin (<= 2 px) contours.
    """
    if not (0 <= low <= high):
        raise ParameterError(f"need 0 <= low <= high, got low={low} high={high}")
    vals = img.pixels.astype(np.float64)
    smoothed = ndimage.convolve(vals, _gaussian_kernel_5x5(sigma), mode="nearest")
    gx = ndimage.convolve(smoothed, _SOBEL_X, mode="nearest")
    gy = ndimage.convolve(smoothed, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)

    # Quantize gradient direction to 4 bins and compare the two neighbours
    # along the gradient.
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(mag, 1, mode="constant")

    def shifted(dy, dx):
        return padded[1 + dy : 1 + dy + mag.shape[0], 1 + dx : 1 + dx + mag.shape[1]]

    bin_e = (angle < 22.5) | (angle >= 157.5)  # gradient ~horizontal
    bin_ne = (angle >= 22.5) & (angle < 67.5)
    bin_n = (angle >= 67.5) & (angle < 112.5)
    bin_nw = (angle >= 112.5) & (angle < 157.5)
    keep = np.zeros_like(mag, dtype=bool)
    keep |= bin_e & (mag >= shifted(0, 1)) & (mag >= shifted(0, -1))
    keep |= bin_ne & (mag >= shifted(1, 1)) & (mag >= shifted(-1, -1))
    keep |= bin_n & (mag >= shifted(1, 0)) & (mag >= shifted(-1, 0))
    keep |= bin_nw & (mag >= shifted(1, -1)) & (mag >= shifted(-1, 1))
    thinned = np.where(keep, mag, 0.0)

    strong = thinned > high
    weak = thinned > low
    if not strong.any():
        return BitMask(np.zeros_like(strong))
    # Keep weak pixels only in 8-connected components that contain a seed.
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    keep_labels = np.zeros(n + 1, dtype=bool)
    keep_labels[np.unique(labels[strong])] = True
    keep_labels[0] = False
    return BitMask(keep_labels[labels])


def blob_centers(mask: BitMask) -> list[Blob]:
    """8-connected components as (centroid, area), area descending.

    Ties in area break on the row-major position of the first pixel.
    Centroids are arithmetic means of member pixel coordinates (x, y).
    """
    labels, n = ndimage.label(mask.bits, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return []
    flat = labels.reshape(-1)
    areas = np.bincount(flat, minlength=n + 1)
    first_pixel = np.full(n + 1, flat.size)
    nz = np.flatnonzero(flat)
    # reversed scan leaves the smallest flat index per label
    first_pixel[flat[nz[::-1]]] = nz[::-1]
    ys, xs = np.nonzero(mask.bits)
    sum_x = np.bincount(labels[ys, xs], weights=xs, minlength=n + 1)
    sum_y = np.bincount(labels[ys, xs], weights=ys, minlength=n + 1)
    order = sorted(range(1, n + 1), key=lambda k: (-areas[k], first_pixel[k]))
    return [
        Blob(sum_x[k] / areas[k], sum_y[k] / areas[k], int(areas[k])) for k in order
    ]


def _ring_offsets(r: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer offsets (dx, dy) with floor(hypot + 0.5) == r."""
    span = np.arange(-r - 1, r + 2)
    dx, dy = np.meshgrid(span, span)
    dist = np.floor(np.hypot(dx, dy) + 0.5).astype(int)
    sel = dist == r
    return dx[sel], dy[sel]


def hough_circles(
    edges: BitMask,
    r_min: int,
    r_max: int,
    vote_frac: float = 0.6,
) -> list[Circle]:
    """Circular Hough transform over a 1-px (cx, cy, r) accumulator.

    Each edge pixel votes for every center at rounded distance r. Returned
    circles are per-radius spatial local maxima whose score reaches
    vote_frac * 2*pi*r, sorted by score descending with ties broken by
    (r asc, cy asc, cx asc).
    """
    h, w = edges.bits.shape
    if not (1 <= r_min <= r_max):
        raise ParameterError(f"need 1 <= r_min <= r_max, got [{r_min}, {r_max}]")
    if r_max > min(h, w) // 2:
        raise ParameterError(
            f"r_max {r_max} exceeds half of min dimension {min(h, w) // 2}"
        )
    ys, xs = np.nonzero(edges.bits)
    if xs.size == 0:
        return []

    found = []
    for r in range(r_min, r_max + 1):
        dx, dy = _ring_offsets(r)
        cx = (xs[:, None] + dx[None, :]).reshape(-1)
        cy = (ys[:, None] + dy[None, :]).reshape(-1)
        ok = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
        acc = np.zeros((h, w), dtype=np.int64)
        np.add.at(acc, (cy[ok], cx[ok]), 1)

        threshold = max(1, int(math.ceil(vote_frac * 2.0 * math.pi * r)))
        neighborhood_max = ndimage.maximum_filter(acc, size=3, mode="constant")
        peak_ys, peak_xs = np.nonzero((acc >= threshold) & (acc == neighborhood_max))
        for py, px in zip(peak_ys.tolist(), peak_xs.tolist()):
            found.append(Circle(float(px), float(py), float(r), int(acc[py, px])))

    found.sort(key=lambda c: (-c.score, c.r, c.cy, c.cx))
    return found
