"""Facial-landmark ingestion and the geometric anchors built from it.

Landmarks follow the standard 68-point convention, as seen from the
observer: indices 36-41 are the left eye (image left), 42-47 the right
eye, 30 the nose tip. Sidecar files hold 68 lines of "x y" decimal floats
and share the image's basename with extension ".lms".
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .imaging import GrayImage

N_POINTS = 68
LEFT_EYE = slice(36, 42)
RIGHT_EYE = slice(42, 48)
NOSE_TIP = 30
OUTER_CORNERS = (36, 45)
INNER_CORNERS = (39, 42)


class LandmarkParseError(ValueError):
    """Sidecar file unreadable or not in the expected format."""


class WrongPointCount(LandmarkParseError):
    """Sidecar file does not contain exactly 68 points."""


class DegenerateEye(ValueError):
    """Eye landmarks span an empty box."""


@dataclass(frozen=True)
class LandmarkSet:
    """68 ordered (x, y) points; `clamped` marks points moved into bounds."""

    points: np.ndarray
    clamped: bool = False

    def __post_init__(self):
        p = self.points
        if p.shape != (N_POINTS, 2):
            raise WrongPointCount(f"expected ({N_POINTS}, 2) points, got {p.shape}")
        if not np.isfinite(p).all():
            raise LandmarkParseError("non-finite landmark coordinate")
        p.setflags(write=False)

    def clamp_to(self, width: int, height: int) -> "LandmarkSet":
        clipped = np.clip(self.points, [0.0, 0.0], [width - 1.0, height - 1.0])
        if np.array_equal(clipped, self.points):
            return self
        return LandmarkSet(clipped, clamped=True)

    def point(self, index: int) -> tuple[float, float]:
        x, y = self.points[index]
        return float(x), float(y)


@dataclass(frozen=True)
class FaceSample:
    """One face image with its landmarks and stream identity."""

    image: GrayImage
    landmarks: LandmarkSet
    subject_id: str
    video_id: str
    frame_index: int
    color: np.ndarray | None = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")


@dataclass(frozen=True)
class EyeRegion:
    """Axis-aligned eye crop plus the corner/contour anchors.

    bbox is (x0, y0, x1, y1) with exclusive upper bounds, clamped to the
    image.
    """

    side: str  # "left" | "right", observer convention
    bbox: tuple[int, int, int, int]
    contour_height: float
    inner_corner: tuple[float, float]
    outer_corner: tuple[float, float]

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if x1 <= x0 or y1 <= y0:
            raise DegenerateEye(f"empty bbox {self.bbox}")
        if self.contour_height <= 0:
            raise DegenerateEye(f"contour height {self.contour_height} <= 0")


def load_landmarks(
    path: str | Path, image_size: tuple[int, int] | None = None
) -> LandmarkSet:
    """Parse a 68-line ".lms" sidecar file.

    If image_size (width, height) is given, out-of-bounds points are
    clamped and the set is flagged.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"landmark file not found: {path}")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if len(lines) != N_POINTS:
        raise WrongPointCount(f"{path}: expected {N_POINTS} lines, got {len(lines)}")
    pts = np.empty((N_POINTS, 2))
    for i, line in enumerate(lines):
        parts = line.split()
        if len(parts) != 2:
            raise LandmarkParseError(f"{path}:{i + 1}: expected 'x y', got {line!r}")
        try:
            pts[i] = (float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise LandmarkParseError(f"{path}:{i + 1}: non-numeric value") from exc
    lms = LandmarkSet(pts)
    if image_size is not None:
        lms = lms.clamp_to(*image_size)
    return lms


def save_landmarks(path: str | Path, lms: LandmarkSet) -> None:
    """Write a sidecar file that load_landmarks will round-trip exactly."""
    lines = [f"{float(x)!r} {float(y)!r}" for x, y in lms.points]
    Path(path).write_text("\n".join(lines) + "\n")


def _eye_region(sample: FaceSample, eye: slice, side: str, pad_frac: float) -> EyeRegion:
    pts = sample.landmarks.points[eye]
    min_x, min_y = pts.min(axis=0)
    max_x, max_y = pts.max(axis=0)
    if max_x <= min_x or max_y <= min_y:
        raise DegenerateEye(f"{side} eye landmarks span no area")
    pad_x = (max_x - min_x) * pad_frac
    pad_y = (max_y - min_y) * pad_frac
    w, h = sample.image.width, sample.image.height
    x0 = int(np.clip(np.floor(min_x - pad_x), 0, w - 1))
    y0 = int(np.clip(np.floor(min_y - pad_y), 0, h - 1))
    x1 = int(np.clip(np.ceil(max_x + pad_x) + 1, x0 + 1, w))
    y1 = int(np.clip(np.ceil(max_y + pad_y) + 1, y0 + 1, h))
    # Corner landmark order inside the 6-point eye contour: the first point
    # is the image-left extreme, the fourth the image-right extreme.
    first = (float(pts[0, 0]), float(pts[0, 1]))
    fourth = (float(pts[3, 0]), float(pts[3, 1]))
    if side == "left":
        outer, inner = first, fourth
    else:
        inner, outer = first, fourth
    return EyeRegion(
        side=side,
        bbox=(x0, y0, x1, y1),
        contour_height=float(max_y - min_y),
        inner_corner=inner,
        outer_corner=outer,
    )


def extract_eyes(sample: FaceSample, pad_frac: float = 0.3) -> tuple[EyeRegion, EyeRegion]:
    """Eye regions (left, right) from the 6-point eye landmark hulls.

    The bbox is the landmark hull padded by pad_frac on each side and
    clamped to the image; contour_height is the hull height.
    """
    left = _eye_region(sample, LEFT_EYE, "left", pad_frac)
    right = _eye_region(sample, RIGHT_EYE, "right", pad_frac)
    return left, right


def nose_anchor(sample: FaceSample) -> tuple[float, float]:
    """Nose-tip landmark (index 30)."""
    return sample.landmarks.point(NOSE_TIP)
