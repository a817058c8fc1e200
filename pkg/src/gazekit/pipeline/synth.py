"""Schematic face renderer and corpus generator.

Faces are drawn analytically (skin ellipse, bright scleras, dark iris
disks, nose and mouth marks) so every sample carries exact ground truth:
68 landmarks, pupil centers, gaze zone, and a synthetic 3-D gaze vector.
The gaze zone is controlled by a signed horizontal iris offset, negative
toward image-left. All randomness is keyed by (seed, subject, video,
frame), so outputs are byte-identical for a given seed regardless of
generation order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..heuristic import Zone
from ..imgio import save_rgb
from ..landmarks import LandmarkSet, N_POINTS, save_landmarks

# Canonical layout, fractions of image size.
FACE_CENTER = (0.50, 0.52)
FACE_RX, FACE_RY = 0.32, 0.40
EYE_CY = 0.42
EYE_DX = 0.17  # eye center offset from face midline
SCLERA_RX, SCLERA_RY = 0.095, 0.055
IRIS_R = 0.05
NOSE_TIP = (0.50, 0.62)
NOSE_R = 0.022
MOUTH_CENTER = (0.50, 0.78)
MOUTH_RX, MOUTH_RY = 0.10, 0.022

BG_VALUE, SKIN_VALUE, SCLERA_VALUE, IRIS_VALUE = 208, 176, 232, 40
NOSE_VALUE, MOUTH_VALUE = 120, 140

# Offsets as fractions of image size; zones are unambiguous by construction.
ZONE_OFFSET_MIN = 0.024
ZONE_OFFSET_MAX = 0.040
GAZE_X_GAIN = 0.5


@dataclass(frozen=True)
class SyntheticFaceSpec:
    """Controls for one rendered face."""

    iris_offset: float  # px, negative toward image-left
    roll: float  # degrees, positive = image-right corner lower
    noise_sigma: float  # std of the uniform pixel noise, gray levels
    seed: int


@dataclass(frozen=True)
class SyntheticFace:
    rgb: np.ndarray  # (S, S, 3) uint8
    landmarks: LandmarkSet
    pupil_left: tuple[float, float]
    pupil_right: tuple[float, float]
    zone: Zone
    gaze: tuple[float, float, float]


def _rotation(roll_deg: float) -> np.ndarray:
    a = math.radians(roll_deg)
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def _rotate_about(points: np.ndarray, center: np.ndarray, rot: np.ndarray) -> np.ndarray:
    return (points - center) @ rot.T + center


def _paint_ellipse(canvas, cx, cy, rx, ry, rot, value):
    """Fill a rotated ellipse; the rotation matrix maps face-frame offsets
    to image offsets, so pixels are tested in the inverse frame."""
    h, w = canvas.shape
    ys, xs = np.mgrid[0:h, 0:w]
    dx = xs - cx
    dy = ys - cy
    u = rot[0, 0] * dx + rot[1, 0] * dy  # rot.T @ d
    v = rot[0, 1] * dx + rot[1, 1] * dy
    canvas[(u / rx) ** 2 + (v / ry) ** 2 <= 1.0] = value


def _paint_disk(canvas, cx, cy, r, value):
    h, w = canvas.shape
    ys, xs = np.mgrid[0:h, 0:w]
    canvas[(xs - cx) ** 2 + (ys - cy) ** 2 <= r * r] = value


def _at(fx: float, fy: float, size: int) -> np.ndarray:
    """Fraction -> pixel coordinates, half-pixel convention.

    The image's mirror axis sits at (size - 1) / 2, so a layout symmetric
    in fractions rasterizes mirror-symmetrically: offset-zero faces give
    exactly equal left/right angles.
    """
    return np.array([fx * size - 0.5, fy * size - 0.5])


def canonical_landmarks(size: int) -> np.ndarray:
    """The 68-point template before rotation, in pixels."""
    s = float(size)
    pts = np.zeros((N_POINTS, 2))
    fc = _at(*FACE_CENTER, size)
    # jaw 0-16 along the lower face ellipse, image-left to image-right
    for i, deg in enumerate(np.linspace(170.0, 10.0, 17)):
        t = math.radians(deg)
        pts[i] = fc + (FACE_RX * s * math.cos(math.pi - t), FACE_RY * s * math.sin(t))
    eye_l = _at(0.5 - EYE_DX, EYE_CY, size)
    eye_r = _at(0.5 + EYE_DX, EYE_CY, size)
    # brows 17-26: flat arcs above each eye
    for i, fx in enumerate(np.linspace(-0.9, 0.9, 5)):
        pts[17 + i] = eye_l + (fx * SCLERA_RX * s, -0.10 * s)
        pts[22 + i] = eye_r + (fx * SCLERA_RX * s, -0.10 * s)
    # nose bridge 27-30 (30 = tip)
    for i, fy in enumerate(np.linspace(0.46, 0.62, 4)):
        pts[27 + i] = _at(0.5, fy, size)
    # nostril row 31-35
    for i, fx in enumerate(np.linspace(0.46, 0.54, 5)):
        pts[31 + i] = _at(fx, 0.66, size)
    # eye contours: corner, two top, corner, two bottom (image-left first)
    rx, ry = SCLERA_RX * s, SCLERA_RY * s
    contour = np.array(
        [
            (-rx, 0.0),
            (-0.4 * rx, -0.8 * ry),
            (0.4 * rx, -0.8 * ry),
            (rx, 0.0),
            (0.4 * rx, 0.8 * ry),
            (-0.4 * rx, 0.8 * ry),
        ]
    )
    pts[36:42] = eye_l + contour
    pts[42:48] = eye_r + contour
    # mouth 48-67 around an ellipse
    for i, deg in enumerate(np.linspace(0.0, 342.0, 20)):
        t = math.radians(deg)
        pts[48 + i] = _at(*MOUTH_CENTER, size) + (
            MOUTH_RX * s * math.cos(t),
            MOUTH_RY * s * math.sin(t),
        )
    return pts


def render_face(spec: SyntheticFaceSpec, size: int = 128) -> SyntheticFace:
    """Render one face; ground truth is exact by construction."""
    s = float(size)
    rot = _rotation(spec.roll)
    fc = _at(*FACE_CENTER, size)

    canvas = np.full((size, size), float(BG_VALUE))
    _paint_ellipse(canvas, *fc, FACE_RX * s, FACE_RY * s, rot, SKIN_VALUE)

    eye_centers = _rotate_about(
        np.stack([_at(0.5 - EYE_DX, EYE_CY, size), _at(0.5 + EYE_DX, EYE_CY, size)]),
        fc,
        rot,
    )
    for ex, ey in eye_centers:
        _paint_ellipse(canvas, ex, ey, SCLERA_RX * s, SCLERA_RY * s, rot, SCLERA_VALUE)
    # iris offset is applied along the rotated horizontal axis
    offset_vec = rot @ np.array([spec.iris_offset, 0.0])
    pupils = eye_centers + offset_vec
    for px, py in pupils:
        _paint_disk(canvas, px, py, IRIS_R * s, IRIS_VALUE)

    nose = _rotate_about(_at(*NOSE_TIP, size), fc, rot)
    _paint_disk(canvas, nose[0], nose[1], NOSE_R * s, NOSE_VALUE)
    mouth = _rotate_about(_at(*MOUTH_CENTER, size), fc, rot)
    _paint_ellipse(canvas, mouth[0], mouth[1], MOUTH_RX * s, MOUTH_RY * s, rot, MOUTH_VALUE)

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        amp = math.sqrt(3.0) * spec.noise_sigma
        canvas = canvas + rng.uniform(-amp, amp, size=canvas.shape)
    gray = np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)

    points = _rotate_about(canonical_landmarks(size), fc, rot)
    lms = LandmarkSet(np.clip(points, 0.0, s - 1.0))

    off_norm = spec.iris_offset / (IRIS_R * s)
    gaze = np.array([GAZE_X_GAIN * off_norm, 0.0, -1.0])
    gaze /= np.linalg.norm(gaze)
    return SyntheticFace(
        rgb=rgb,
        landmarks=lms,
        pupil_left=(float(pupils[0, 0]), float(pupils[0, 1])),
        pupil_right=(float(pupils[1, 0]), float(pupils[1, 1])),
        zone=offset_to_zone(spec.iris_offset),
        gaze=(float(gaze[0]), float(gaze[1]), float(gaze[2])),
    )


def offset_to_zone(iris_offset: float) -> Zone:
    if iris_offset < 0:
        return Zone.LEFT
    if iris_offset > 0:
        return Zone.RIGHT
    return Zone.CENTER


def sample_offset(zone: Zone, size: int, rng: np.random.Generator, center_jitter: float = 0.0) -> float:
    """Draw an iris offset consistent with the requested zone.

    A 2 px floor keeps the left/right signal above rasterization noise at
    small render sizes.
    """
    lo = max(ZONE_OFFSET_MIN * size, 2.0)
    hi = max(ZONE_OFFSET_MAX * size, lo + 1.0)
    if zone is Zone.LEFT:
        return -float(rng.uniform(lo, hi))
    if zone is Zone.RIGHT:
        return float(rng.uniform(lo, hi))
    return float(rng.uniform(-center_jitter, center_jitter)) if center_jitter > 0 else 0.0


GROUND_TRUTH_COLUMNS = (
    "sample_id",
    "subject_id",
    "video_id",
    "frame_index",
    "image_path",
    "zone",
    "iris_offset_px",
    "roll_deg",
    "pupil_l_x",
    "pupil_l_y",
    "pupil_r_x",
    "pupil_r_y",
    "gaze_x",
    "gaze_y",
    "gaze_z",
)


def gen_synthetic_corpus(
    out_dir: str | Path,
    n_subjects: int = 3,
    videos_per_subject: int = 1,
    frames_per_video: int = 30,
    image_size: int = 128,
    noise_sigma: float = 4.0,
    roll_range: tuple[float, float] = (-8.0, 8.0),
    seed: int = 0,
) -> Path:
    """Write images/, landmarks/, manifest.jsonl and ground_truth.csv.

    Each video gets a constant roll and a zone track made of constant
    blocks of 5-10 frames, so temporal smoothing has structure to work on.
    Returns the manifest path.
    """
    if min(n_subjects, videos_per_subject, frames_per_video, image_size) < 1:
        raise ValueError("corpus dimensions must be >= 1")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "landmarks").mkdir(parents=True, exist_ok=True)

    zones = (Zone.LEFT, Zone.RIGHT, Zone.CENTER)
    manifest_lines = []
    gt_rows = []
    for si in range(n_subjects):
        for vi in range(videos_per_subject):
            video_rng = np.random.default_rng([seed, si, vi])
            roll = float(video_rng.uniform(*roll_range))
            track: list[Zone] = []
            while len(track) < frames_per_video:
                zone = zones[int(video_rng.integers(0, 3))]
                track += [zone] * int(video_rng.integers(5, 11))
            track = track[:frames_per_video]

            for fi in range(frames_per_video):
                frame_rng = np.random.default_rng([seed, si, vi, fi])
                offset = sample_offset(track[fi], image_size, frame_rng)
                face = render_face(
                    SyntheticFaceSpec(
                        iris_offset=offset,
                        roll=roll,
                        noise_sigma=noise_sigma,
                        seed=int(frame_rng.integers(0, 2**31)),
                    ),
                    image_size,
                )
                stem = f"s{si:03d}_v{vi:02d}_f{fi:05d}"
                image_rel = f"images/{stem}.png"
                lms_rel = f"landmarks/{stem}.lms"
                save_rgb(out_dir / image_rel, face.rgb)
                save_landmarks(out_dir / lms_rel, face.landmarks)

                subject_id, video_id = f"s{si:03d}", f"v{vi:02d}"
                manifest_lines.append(
                    json.dumps(
                        {
                            "image_path": image_rel,
                            "landmark_path": lms_rel,
                            "subject_id": subject_id,
                            "video_id": video_id,
                            "frame_index": fi,
                        },
                        sort_keys=True,
                    )
                )
                gt_rows.append(
                    (
                        f"{subject_id}/{video_id}/{fi:06d}",
                        subject_id,
                        video_id,
                        fi,
                        image_rel,
                        face.zone.value,
                        repr(offset),
                        repr(roll),
                        repr(face.pupil_left[0]),
                        repr(face.pupil_left[1]),
                        repr(face.pupil_right[0]),
                        repr(face.pupil_right[1]),
                        repr(face.gaze[0]),
                        repr(face.gaze[1]),
                        repr(face.gaze[2]),
                    )
                )

    manifest_path = out_dir / "manifest.jsonl"
    manifest_path.write_text("\n".join(manifest_lines) + "\n")
    with open(out_dir / "ground_truth.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GROUND_TRUTH_COLUMNS)
        writer.writerows(gt_rows)
    return manifest_path
