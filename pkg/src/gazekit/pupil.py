"""Three-stage pupil-center localization and the normalized worst-eye error.

Stage 1 thresholds the eye crop and takes the largest dark blob's centroid
("primary" center). Stage 2 crops a square region around the primary
center, adaptive-thresholds it, runs edge detection and a circular Hough
transform ("secondary" center). The final center is the mean of the two;
when stage 2 finds no circle the primary is passed through and the
provenance records it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import LocalizerConfig
from .imaging import (
    BitMask,
    DegenerateHistogram,
    GrayImage,
    adaptive_threshold,
    blob_centers,
    canny,
    hough_circles,
    otsu_threshold,
)
from .landmarks import EyeRegion, FaceSample, extract_eyes

PROVENANCE_AVERAGED = "averaged"
PROVENANCE_PRIMARY_ONLY = "primary-only"


class NoIris(ValueError):
    """No dark blob found in the eye crop."""

    def __init__(self, side: str, reason: str):
        super().__init__(f"{side} eye: {reason}")
        self.side = side


class RoiOutOfBounds(ValueError):
    """Secondary-stage crop lies fully outside the image."""


class DegenerateGroundTruth(ValueError):
    """Ground-truth interocular distance is zero."""


@dataclass(frozen=True)
class PupilPair:
    """Left/right pupil centers in full-image coordinates."""

    left: tuple[float, float]
    right: tuple[float, float]
    left_provenance: str = PROVENANCE_AVERAGED
    right_provenance: str = PROVENANCE_AVERAGED


def locate_primary(eye: EyeRegion, img: GrayImage) -> tuple[float, float]:
    """Centroid of the largest dark blob in the eye crop (full-image coords).

    The crop is binarized at its Otsu level with the dark side as
    foreground. Raises NoIris when no blob exists.
    """
    x0, y0, x1, y1 = eye.bbox
    crop = GrayImage(img.pixels[y0:y1, x0:x1].copy())
    try:
        level = otsu_threshold(crop)
    except DegenerateHistogram as exc:
        raise NoIris(eye.side, "constant eye crop") from exc
    blobs = blob_centers(BitMask(crop.pixels <= level))
    if not blobs:
        raise NoIris(eye.side, "no dark blob after thresholding")
    best = blobs[0]
    return (best.cx + x0, best.cy + y0)


def crop_length(contour_height: float, offset: int = 5) -> int:
    """Half-width of the rectification crop: contour_height / 2 + offset,
    rounded half-up to the nearest integer."""
    if contour_height < 0 or offset < 0:
        raise ValueError("contour_height and offset must be >= 0")
    return int(math.floor(contour_height / 2.0 + offset + 0.5))


def locate_secondary(
    primary: tuple[float, float],
    img: GrayImage,
    crop_len: int,
    cfg: LocalizerConfig = LocalizerConfig(),
) -> tuple[float, float] | None:
    """Circle-based center rectification around the primary center.

    Crops a square of half-width crop_len, adaptive-thresholds it, edge-
    detects the binarized crop and votes for circles. Returns the best
    circle center in full-image coordinates, or None when no circle
    reaches the vote threshold.
    """
    if crop_len < 3:
        raise ValueError(f"crop_len must be >= 3, got {crop_len}")
    px, py = int(math.floor(primary[0] + 0.5)), int(math.floor(primary[1] + 0.5))
    x0, x1 = px - crop_len, px + crop_len + 1
    y0, y1 = py - crop_len, py + crop_len + 1
    if x1 <= 0 or y1 <= 0 or x0 >= img.width or y0 >= img.height:
        raise RoiOutOfBounds(f"crop around {primary} outside {img.width}x{img.height}")
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, img.width), min(y1, img.height)
    roi = GrayImage(img.pixels[y0:y1, x0:x1].copy())

    window = min(cfg.adaptive_window, roi.width, roi.height)
    if window % 2 == 0:
        window -= 1
    if window < 3:
        return None
    dark = adaptive_threshold(roi, window, cfg.adaptive_c)
    binary = GrayImage(np.where(dark.bits, 255, 0).astype(np.uint8))
    edges = canny(binary, cfg.canny_low, cfg.canny_high, cfg.canny_sigma)

    r_max = min(cfg.hough_r_max, min(roi.width, roi.height) // 2)
    r_min = min(cfg.hough_r_min, r_max)
    if r_min < 1:
        return None
    circles = hough_circles(edges, r_min, r_max, cfg.hough_vote_frac)
    if not circles:
        return None
    best = circles[0]
    return (best.cx + x0, best.cy + y0)


def _locate_one(
    eye: EyeRegion, img: GrayImage, cfg: LocalizerConfig
) -> tuple[tuple[float, float], str]:
    primary = locate_primary(eye, img)
    half = crop_length(eye.contour_height, cfg.crop_offset)
    secondary = None
    if half >= 3:
        try:
            secondary = locate_secondary(primary, img, half, cfg)
        except RoiOutOfBounds:
            secondary = None
    if secondary is None:
        return primary, PROVENANCE_PRIMARY_ONLY
    center = ((primary[0] + secondary[0]) / 2.0, (primary[1] + secondary[1]) / 2.0)
    return center, PROVENANCE_AVERAGED


def locate_pupils(sample: FaceSample, cfg: LocalizerConfig = LocalizerConfig()) -> PupilPair:
    """Both pupil centers for one face sample.

    Per eye: primary centroid, optional secondary rectification, final
    center = exact midpoint of the two stages when both exist.
    """
    left_eye, right_eye = extract_eyes(sample, cfg.eye_pad_frac)
    left, left_prov = _locate_one(left_eye, sample.image, cfg)
    right, right_prov = _locate_one(right_eye, sample.image, cfg)
    return PupilPair(left, right, left_prov, right_prov)


def jesorsky_error(
    predicted: PupilPair,
    ground_truth: PupilPair,
    mode: str = "worst-eye",
) -> float:
    """Pupil-localization error normalized by interocular distance.

    "worst-eye" (default): max(d_l, d_r) / ||C_l - C_r|| where d_l, d_r are
    Euclidean distances between predicted and true centers and C_l, C_r the
    true centers. "signed-diff" is the audit variant (d_l - d_r) / ||.||,
    which is not positive definite; keep it for comparisons only.
    """
    cl = np.asarray(ground_truth.left, dtype=np.float64)
    cr = np.asarray(ground_truth.right, dtype=np.float64)
    interocular = float(np.hypot(*(cl - cr)))
    if interocular <= 0.0:
        raise DegenerateGroundTruth("ground-truth pupil centers coincide")
    d_l = float(np.hypot(*(np.asarray(predicted.left) - cl)))
    d_r = float(np.hypot(*(np.asarray(predicted.right) - cr)))
    if mode == "worst-eye":
        return max(d_l, d_r) / interocular
    if mode == "signed-diff":
        return (d_l - d_r) / interocular
    raise ValueError(f"unknown jesorsky mode: {mode}")
