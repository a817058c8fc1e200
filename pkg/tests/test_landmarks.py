import numpy as np
import pytest

from gazekit.imaging import GrayImage
from gazekit.landmarks import (
    DegenerateEye,
    FaceSample,
    LandmarkParseError,
    LandmarkSet,
    N_POINTS,
    WrongPointCount,
    extract_eyes,
    load_landmarks,
    nose_anchor,
    save_landmarks,
)

from conftest import face_sample


def template_points():
    rng = np.random.default_rng(3)
    return rng.uniform(5.0, 90.0, (N_POINTS, 2))


def test_save_load_round_trip(tmp_path):
    pts = template_points()
    path = tmp_path / "face.lms"
    save_landmarks(path, LandmarkSet(pts))
    loaded = load_landmarks(path)
    assert np.array_equal(loaded.points, pts)
    assert not loaded.clamped


def test_load_wrong_count(tmp_path):
    path = tmp_path / "short.lms"
    path.write_text("\n".join("1.0 2.0" for _ in range(67)) + "\n")
    with pytest.raises(WrongPointCount):
        load_landmarks(path)


def test_load_non_numeric(tmp_path):
    lines = ["1.0 2.0"] * N_POINTS
    lines[10] = "1.0 banana"
    path = tmp_path / "bad.lms"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(LandmarkParseError):
        load_landmarks(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_landmarks(tmp_path / "nope.lms")


def test_load_clamps_out_of_bounds(tmp_path):
    pts = template_points()
    pts[5] = (150.0, -3.0)
    path = tmp_path / "oob.lms"
    save_landmarks(path, LandmarkSet(pts))
    loaded = load_landmarks(path, image_size=(100, 100))
    assert loaded.clamped
    assert loaded.points[5, 0] == 99.0
    assert loaded.points[5, 1] == 0.0


def test_wrong_shape_rejected():
    with pytest.raises(WrongPointCount):
        LandmarkSet(np.zeros((67, 2)))


def test_extract_eyes_contour_height_and_order():
    sample, _ = face_sample()
    left, right = extract_eyes(sample)
    pts = sample.landmarks.points
    assert left.contour_height == pytest.approx(
        pts[36:42, 1].max() - pts[36:42, 1].min()
    )
    # observer convention: left region sits at smaller x
    lx = (left.bbox[0] + left.bbox[2]) / 2
    rx = (right.bbox[0] + right.bbox[2]) / 2
    assert lx < rx
    assert left.outer_corner[0] < left.inner_corner[0]
    assert right.inner_corner[0] < right.outer_corner[0]


def test_extract_eyes_bbox_clamped_to_image():
    sample, _ = face_sample()
    left, right = extract_eyes(sample, pad_frac=5.0)  # absurd padding
    for region in (left, right):
        x0, y0, x1, y1 = region.bbox
        assert 0 <= x0 < x1 <= sample.image.width
        assert 0 <= y0 < y1 <= sample.image.height


def test_extract_eyes_degenerate():
    sample, _ = face_sample()
    pts = sample.landmarks.points.copy()
    pts[36:42, 1] = 50.0  # collinear at one y
    flat = FaceSample(
        image=sample.image,
        landmarks=LandmarkSet(pts),
        subject_id="s",
        video_id="v",
        frame_index=0,
    )
    with pytest.raises(DegenerateEye):
        extract_eyes(flat)


def test_extract_eyes_translation_equivariance():
    sample, _ = face_sample(size=128)
    dx, dy = 7, 4
    shifted_img = np.full_like(sample.image.pixels, 208)
    shifted_img[dy:, dx:] = sample.image.pixels[:-dy, :-dx]
    shifted = FaceSample(
        image=GrayImage(shifted_img),
        landmarks=LandmarkSet(sample.landmarks.points + (dx, dy)),
        subject_id="s",
        video_id="v",
        frame_index=0,
    )
    base_l, base_r = extract_eyes(sample)
    mov_l, mov_r = extract_eyes(shifted)
    assert mov_l.bbox == tuple(v + d for v, d in zip(base_l.bbox, (dx, dy, dx, dy)))
    assert mov_r.contour_height == base_r.contour_height
    assert mov_r.outer_corner == (base_r.outer_corner[0] + dx, base_r.outer_corner[1] + dy)


def test_nose_anchor_projection():
    sample, _ = face_sample()
    pts = sample.landmarks.points.copy()
    pts[30] = (88.5, 140.0)
    moved = FaceSample(
        image=sample.image,
        landmarks=LandmarkSet(pts),
        subject_id="s",
        video_id="v",
        frame_index=0,
    )
    assert nose_anchor(moved) == (88.5, 140.0)


def test_nose_between_and_below_eyes_on_template():
    sample, _ = face_sample()
    nx, ny = nose_anchor(sample)
    pts = sample.landmarks.points
    left_cx = pts[36:42, 0].mean()
    right_cx = pts[42:48, 0].mean()
    eyes_cy = pts[36:48, 1].mean()
    assert left_cx < nx < right_cx
    assert ny > eyes_cy


def test_negative_frame_index_rejected():
    sample, _ = face_sample()
    with pytest.raises(ValueError):
        FaceSample(
            image=sample.image,
            landmarks=sample.landmarks,
            subject_id="s",
            video_id="v",
            frame_index=-1,
        )
