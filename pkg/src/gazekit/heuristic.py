"""Angle-based gaze-zone and head-pose pseudo-labeling.

theta1/theta2 are the angles between the (pupil center -> nose tip)
segments and the image vertical, for the image-left and image-right eyes.
theta3/theta4 are the same construction from the eye corners. A subject
gazing toward image-left drags both irises left, growing theta1 relative
to theta2; a head turn toward image-left drags the projected nose tip
left, growing theta4 (right corner) relative to theta3 (left corner).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .config import HeuristicConfig, LocalizerConfig
from .landmarks import FaceSample, INNER_CORNERS, OUTER_CORNERS, nose_anchor
from .pupil import PupilPair, locate_pupils

FLAG_OUT_OF_RANGE_ROLL = "out-of-range-roll"


class Zone(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    CENTER = "center"


# Head pose shares the three-way vocabulary.
HeadPose = Zone

ZONE_ORDER = (Zone.LEFT, Zone.RIGHT, Zone.CENTER)
ZONE_INDEX = {z: i for i, z in enumerate(ZONE_ORDER)}


class DegenerateSegment(ValueError):
    """Angle requested for a zero-length segment."""


@dataclass(frozen=True)
class AngleQuad:
    """The four heuristic angles, degrees."""

    theta1: float  # left pupil -> nose vs vertical
    theta2: float  # right pupil -> nose vs vertical
    theta3: float  # left eye corner -> nose vs vertical
    theta4: float  # right eye corner -> nose vs vertical

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3", "theta4"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} is not finite: {v}")


@dataclass(frozen=True)
class PseudoLabel:
    """Full evidence tuple emitted per frame for auditability."""

    zone: Zone
    head_pose: Zone
    angles: AngleQuad
    pupils: PupilPair
    roll_deg: float
    flags: tuple[str, ...] = ()


def angle_from_vertical(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Unsigned angle in degrees, [0, 90], between segment a-b and the
    image vertical. Symmetric in its arguments."""
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateSegment(f"coincident points {a}")
    return math.degrees(math.atan2(abs(dx), abs(dy)))


def compute_angles(
    pupils: PupilPair,
    left_corner: tuple[float, float],
    right_corner: tuple[float, float],
    nose: tuple[float, float],
) -> AngleQuad:
    return AngleQuad(
        theta1=angle_from_vertical(pupils.left, nose),
        theta2=angle_from_vertical(pupils.right, nose),
        theta3=angle_from_vertical(left_corner, nose),
        theta4=angle_from_vertical(right_corner, nose),
    )


def classify_gaze(quad: AngleQuad, tau: float = 2.0) -> Zone:
    """left if theta1 - theta2 > tau, right if theta2 - theta1 > tau,
    center inside the dead band."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    diff = quad.theta1 - quad.theta2
    if diff > tau:
        return Zone.LEFT
    if -diff > tau:
        return Zone.RIGHT
    return Zone.CENTER


def classify_headpose(quad: AngleQuad, tau: float = 2.0) -> Zone:
    """left if theta4 - theta3 > tau, right if theta3 - theta4 > tau,
    center inside the dead band."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    diff = quad.theta4 - quad.theta3
    if diff > tau:
        return Zone.LEFT
    if -diff > tau:
        return Zone.RIGHT
    return Zone.CENTER


def estimate_roll(sample: FaceSample) -> float:
    """Roll in degrees: angle of the outer eye-corner line vs horizontal.

    Positive when the image-right corner sits lower than the image-left
    one (screen y grows downward).
    """
    lo = sample.landmarks.point(OUTER_CORNERS[0])
    ro = sample.landmarks.point(OUTER_CORNERS[1])
    dx = ro[0] - lo[0]
    dy = ro[1] - lo[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateSegment("outer eye corners coincide")
    return math.degrees(math.atan2(dy, dx))


def pseudo_label(
    sample: FaceSample,
    cfg: HeuristicConfig = HeuristicConfig(),
    localizer: LocalizerConfig = LocalizerConfig(),
) -> PseudoLabel:
    """Locate pupils, compute the angle quad, and classify gaze zone and
    head pose. Frames whose roll exceeds the gate get flagged, not dropped."""
    pupils = locate_pupils(sample, localizer)
    nose = nose_anchor(sample)
    corner_ids = OUTER_CORNERS if cfg.corner_mode == "outer" else INNER_CORNERS
    left_corner = sample.landmarks.point(corner_ids[0])
    right_corner = sample.landmarks.point(corner_ids[1])
    quad = compute_angles(pupils, left_corner, right_corner, nose)
    roll = estimate_roll(sample)
    flags = () if abs(roll) <= cfg.roll_limit else (FLAG_OUT_OF_RANGE_ROLL,)
    return PseudoLabel(
        zone=classify_gaze(quad, cfg.tau),
        head_pose=classify_headpose(quad, cfg.tau),
        angles=quad,
        pupils=pupils,
        roll_deg=roll,
        flags=flags,
    )


def smooth_labels(stream: list[Zone], window: int = 5) -> list[Zone]:
    """Temporal majority vote over a centered window.

    Edge frames use the truncated window; a tied vote keeps the frame's
    original label. The stream must already be in frame order.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    half = window // 2
    n = len(stream)
    out = []
    for i in range(n):
        votes = {z: 0 for z in ZONE_ORDER}
        for j in range(max(0, i - half), min(n, i + half + 1)):
            votes[stream[j]] += 1
        top = max(votes.values())
        winners = [z for z in ZONE_ORDER if votes[z] == top]
        out.append(winners[0] if len(winners) == 1 else stream[i])
    return out


def map_angle_to_zone(angle_deg: float, band: float = 2.0) -> Zone:
    """Map a signed horizontal gaze angle to a three-way zone.

    Positive angles point toward image-left. |angle| <= band is center.
    Used when adapting datasets that ship angular labels.
    """
    if band < 0:
        raise ValueError(f"band must be >= 0, got {band}")
    if angle_deg > band:
        return Zone.LEFT
    if angle_deg < -band:
        return Zone.RIGHT
    return Zone.CENTER
