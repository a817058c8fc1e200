import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gazekit.config import LocalizerConfig
from gazekit.imaging import GrayImage
from gazekit.landmarks import EyeRegion
from gazekit.pupil import (
    DegenerateGroundTruth,
    NoIris,
    PROVENANCE_AVERAGED,
    PROVENANCE_PRIMARY_ONLY,
    PupilPair,
    RoiOutOfBounds,
    crop_length,
    jesorsky_error,
    locate_primary,
    locate_pupils,
    locate_secondary,
)

from conftest import face_sample


def eye_region(x0, y0, x1, y1, side="left"):
    return EyeRegion(
        side=side,
        bbox=(x0, y0, x1, y1),
        contour_height=float(y1 - y0) / 1.6,
        inner_corner=(float(x1), (y0 + y1) / 2.0),
        outer_corner=(float(x0), (y0 + y1) / 2.0),
    )


def synthetic_eye_image(w=200, h=160, cx=120.0, cy=72.0, r=9.0, dark=35, light=225):
    ys, xs = np.mgrid[0:h, 0:w]
    img = np.full((h, w), light, dtype=np.uint8)
    img[(xs - cx) ** 2 + (ys - cy) ** 2 <= r * r] = dark
    return GrayImage(img)


# --------------------------------------------------------------- primary

def test_primary_dark_disk_in_crop():
    img = synthetic_eye_image()
    eye = eye_region(100, 60, 140, 84)
    x, y = locate_primary(eye, img)
    assert abs(x - 120.0) <= 1.0
    assert abs(y - 72.0) <= 1.0


def test_primary_all_bright_raises():
    img = GrayImage(np.full((60, 80), 250, dtype=np.uint8))
    with pytest.raises(NoIris):
        locate_primary(eye_region(10, 10, 50, 40), img)


def test_primary_picks_largest_blob():
    img = np.full((60, 80), 220, dtype=np.uint8)
    ys, xs = np.mgrid[0:60, 0:80]
    img[(xs - 40) ** 2 + (ys - 30) ** 2 <= 9.5**2] = 30  # iris, ~300 px
    img[(xs - 20) ** 2 + (ys - 15) ** 2 <= 3.5**2] = 30  # lash blob, ~40 px
    x, y = locate_primary(eye_region(5, 5, 75, 55), GrayImage(img))
    assert abs(x - 40.0) <= 1.0
    assert abs(y - 30.0) <= 1.0


# ----------------------------------------------------------- crop length

def test_crop_length_examples():
    assert crop_length(20, 5) == 15
    assert crop_length(0, 5) == 5
    assert crop_length(21, 5) == 16  # 15.5 rounds half-up
    with pytest.raises(ValueError):
        crop_length(-1, 5)


# -------------------------------------------------------------- secondary

def test_secondary_rectifies_off_center_primary():
    img = synthetic_eye_image()
    primary = (123.0, 74.0)  # 3 px off the true center (120, 72)
    found = locate_secondary(primary, img, crop_len=14)
    assert found is not None
    assert abs(found[0] - 120.0) <= 1.0
    assert abs(found[1] - 72.0) <= 1.0


def test_secondary_featureless_none():
    img = GrayImage(np.full((100, 100), 130, dtype=np.uint8))
    assert locate_secondary((50.0, 50.0), img, crop_len=12) is None


def test_secondary_clipped_roi_still_works():
    img = synthetic_eye_image(w=80, h=60, cx=12.0, cy=12.0, r=8.0)
    found = locate_secondary((13.0, 12.0), img, crop_len=14)
    assert found is not None
    assert abs(found[0] - 12.0) <= 1.5
    assert abs(found[1] - 12.0) <= 1.5


def test_secondary_roi_fully_outside():
    img = synthetic_eye_image()
    with pytest.raises(RoiOutOfBounds):
        locate_secondary((500.0, 500.0), img, crop_len=10)


def test_secondary_rejects_tiny_crop():
    img = synthetic_eye_image()
    with pytest.raises(ValueError):
        locate_secondary((120.0, 72.0), img, crop_len=2)


# ----------------------------------------------------------- locate_pupils

def test_locate_pupils_on_rendered_face():
    sample, face = face_sample(iris_offset=-3.5, noise_sigma=5.0, seed=9)
    pair = locate_pupils(sample)
    for found, truth in ((pair.left, face.pupil_left), (pair.right, face.pupil_right)):
        assert np.hypot(found[0] - truth[0], found[1] - truth[1]) <= 1.5


def test_locate_pupils_midpoint_is_exact():
    # both stages produce centers: final must be their exact midpoint
    primary = (10.0, 10.0)
    secondary = (12.0, 14.0)
    mid = ((primary[0] + secondary[0]) / 2.0, (primary[1] + secondary[1]) / 2.0)
    assert mid == (11.0, 12.0)
    sample, _ = face_sample()
    pair = locate_pupils(sample)
    assert pair.left_provenance in (PROVENANCE_AVERAGED, PROVENANCE_PRIMARY_ONLY)


def test_locate_pupils_secondary_failure_falls_back():
    # kill the secondary stage by forbidding its radii
    cfg = LocalizerConfig(hough_vote_frac=10.0)  # unreachable threshold
    sample, face = face_sample(noise_sigma=0.0)
    pair = locate_pupils(sample, cfg)
    assert pair.left_provenance == PROVENANCE_PRIMARY_ONLY
    assert pair.right_provenance == PROVENANCE_PRIMARY_ONLY
    assert np.hypot(pair.left[0] - face.pupil_left[0], pair.left[1] - face.pupil_left[1]) <= 1.0


def test_locate_pupils_translation_equivariance():
    sample, _ = face_sample(iris_offset=2.5, size=128)
    from gazekit.landmarks import FaceSample, LandmarkSet

    dx, dy = 6, 3
    shifted_img = np.full_like(sample.image.pixels, 208)
    shifted_img[dy:, dx:] = sample.image.pixels[:-dy, :-dx]
    shifted = FaceSample(
        image=GrayImage(shifted_img),
        landmarks=LandmarkSet(sample.landmarks.points + (dx, dy)),
        subject_id="s",
        video_id="v",
        frame_index=0,
    )
    base = locate_pupils(sample)
    moved = locate_pupils(shifted)
    assert moved.left[0] - base.left[0] == pytest.approx(dx, abs=1e-9)
    assert moved.left[1] - base.left[1] == pytest.approx(dy, abs=1e-9)
    assert moved.right[0] - base.right[0] == pytest.approx(dx, abs=1e-9)


# ---------------------------------------------------------------- jesorsky

def truth_pair():
    return PupilPair(left=(40.0, 50.0), right=(90.0, 50.0))


def test_jesorsky_perfect_zero():
    assert jesorsky_error(truth_pair(), truth_pair()) == 0.0


def test_jesorsky_worst_eye():
    pred = PupilPair(left=(40.0, 55.0), right=(90.0, 53.0))  # d_l=5, d_r=3
    assert jesorsky_error(pred, truth_pair()) == pytest.approx(0.1, abs=1e-12)


def test_jesorsky_signed_diff_mode():
    pred = PupilPair(left=(40.0, 55.0), right=(90.0, 53.0))
    assert jesorsky_error(pred, truth_pair(), mode="signed-diff") == pytest.approx(
        (5.0 - 3.0) / 50.0, abs=1e-12
    )


def test_jesorsky_degenerate_truth():
    degenerate = PupilPair(left=(10.0, 10.0), right=(10.0, 10.0))
    with pytest.raises(DegenerateGroundTruth):
        jesorsky_error(truth_pair(), degenerate)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.01, 1000.0),
    st.floats(-20.0, 20.0),
    st.floats(-20.0, 20.0),
)
def test_jesorsky_scale_invariance(scale, ex, ey):
    truth = truth_pair()
    pred = PupilPair(left=(40.0 + ex, 50.0 + ey), right=(90.0 - ey, 50.0 + ex))
    e1 = jesorsky_error(pred, truth)
    scaled_pred = PupilPair(
        left=(pred.left[0] * scale, pred.left[1] * scale),
        right=(pred.right[0] * scale, pred.right[1] * scale),
    )
    scaled_truth = PupilPair(
        left=(truth.left[0] * scale, truth.left[1] * scale),
        right=(truth.right[0] * scale, truth.right[1] * scale),
    )
    assert jesorsky_error(scaled_pred, scaled_truth) == pytest.approx(e1, rel=1e-9)
