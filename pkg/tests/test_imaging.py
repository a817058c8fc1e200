import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gazekit.imaging import (
    BitMask,
    Circle,
    DegenerateHistogram,
    DimensionError,
    GrayImage,
    ParameterError,
    adaptive_threshold,
    blob_centers,
    canny,
    histogram256,
    hough_circles,
    otsu_threshold,
    to_gray,
)


def gray(arr):
    return GrayImage(np.asarray(arr, dtype=np.uint8))


# ---------------------------------------------------------------- to_gray

def test_to_gray_white_black_red():
    img = np.zeros((1, 3, 3), dtype=np.uint8)
    img[0, 0] = (255, 255, 255)
    img[0, 1] = (0, 0, 0)
    img[0, 2] = (255, 0, 0)
    g = to_gray(img)
    assert g.pixels[0, 0] == 255
    assert g.pixels[0, 1] == 0
    assert g.pixels[0, 2] == 76  # 0.299 * 255 = 76.245, half-up


def test_to_gray_rejects_empty_and_wrong_shape():
    with pytest.raises(DimensionError):
        to_gray(np.zeros((0, 4, 3), dtype=np.uint8))
    with pytest.raises(DimensionError):
        to_gray(np.zeros((4, 4), dtype=np.uint8))


# ----------------------------------------------------------------- otsu

def otsu_oracle(hist):
    """Independent exhaustive scan: minimize the within-class variance,
    in exact rational arithmetic so near-ties cannot flip the argmin."""
    from fractions import Fraction

    hist = [int(c) for c in hist]
    levels = list(range(256))
    best_t, best = 0, None
    for t in range(256):
        n_lo = sum(hist[: t + 1])
        n_hi = sum(hist[t + 1 :])
        if n_lo == 0 or n_hi == 0:
            continue
        s_lo = sum(c * v for c, v in zip(hist[: t + 1], levels[: t + 1]))
        s_hi = sum(c * v for c, v in zip(hist[t + 1 :], levels[t + 1 :]))
        q_lo = sum(c * v * v for c, v in zip(hist[: t + 1], levels[: t + 1]))
        q_hi = sum(c * v * v for c, v in zip(hist[t + 1 :], levels[t + 1 :]))
        # n * var = sum(x^2) - (sum x)^2 / n, exactly
        within = Fraction(q_lo) - Fraction(s_lo * s_lo, n_lo)
        within += Fraction(q_hi) - Fraction(s_hi * s_hi, n_hi)
        if best is None or within < best:
            best, best_t = within, t
    return best_t


def test_otsu_bimodal_split():
    img = np.zeros((10, 10), dtype=np.uint8)
    img[:, 5:] = 255
    t = otsu_threshold(gray(img))
    assert t == otsu_oracle(histogram256(gray(img)).astype(float))
    assert (img <= t).sum() == 50  # separates the classes


def test_otsu_constant_raises():
    with pytest.raises(DegenerateHistogram):
        otsu_threshold(gray(np.full((5, 5), 42)))


def test_otsu_two_gaussian_histogram(rng):
    vals = np.concatenate(
        [rng.normal(60, 10, 600), rng.normal(190, 10, 600)]
    )
    img = np.clip(np.round(vals), 0, 255).astype(np.uint8).reshape(30, 40)
    t = otsu_threshold(GrayImage(img))
    assert 80 < t < 170
    assert t == otsu_oracle(histogram256(GrayImage(img)).astype(float))


def test_otsu_matches_oracle_on_random_images(rng):
    for _ in range(50):
        h, w = rng.integers(2, 20, 2)
        img = rng.integers(0, 256, (h, w), dtype=np.uint8).astype(np.uint8)
        if len(np.unique(img)) < 2:
            continue
        g = GrayImage(img)
        assert otsu_threshold(g) == otsu_oracle(histogram256(g).astype(float))


# ------------------------------------------------------ adaptive threshold

def test_adaptive_constant_image_all_false():
    m = adaptive_threshold(gray(np.full((7, 7), 100)), 3, 5.0)
    assert not m.bits.any()


def test_adaptive_single_dark_pixel():
    img = np.full((9, 9), 255, dtype=np.uint8)
    img[4, 4] = 0
    m = adaptive_threshold(gray(img), 3, 5.0)
    assert m.bits[4, 4]
    assert m.bits.sum() == 1


def test_adaptive_step_edge_zero_offset():
    img = np.full((8, 8), 200, dtype=np.uint8)
    img[:, :4] = 50
    m = adaptive_threshold(gray(img), 3, 0.0)
    # only dark pixels adjacent to the step have a mean above their value
    assert m.bits[:, 3].all()
    assert not m.bits[:, 5:].any()


def test_adaptive_matches_per_pixel_oracle(rng):
    img = rng.integers(0, 256, (12, 15), dtype=np.uint8).astype(np.uint8)
    window, c = 5, 3.0
    got = adaptive_threshold(GrayImage(img), window, c)
    h, w = img.shape
    half = window // 2
    for y in range(h):
        for x in range(w):
            patch = img[max(0, y - half) : y + half + 1, max(0, x - half) : x + half + 1]
            expect = img[y, x] < patch.mean() - c
            assert got.bits[y, x] == expect


def test_adaptive_window_validation():
    img = gray(np.zeros((5, 5)))
    with pytest.raises(ParameterError):
        adaptive_threshold(img, 4, 1.0)
    with pytest.raises(ParameterError):
        adaptive_threshold(img, 7, 1.0)


# ------------------------------------------------------------------ canny

def test_canny_constant_empty():
    assert not canny(gray(np.full((20, 20), 128))).bits.any()


def test_canny_vertical_step_confined():
    img = np.full((24, 24), 40, dtype=np.uint8)
    c = 12
    img[:, c:] = 220
    edges = canny(gray(img))
    ys, xs = np.nonzero(edges.bits)
    assert len(xs) > 0
    assert xs.min() >= c - 1 and xs.max() <= c + 1


def test_canny_disk_edge_near_boundary():
    h = w = 64
    ys, xs = np.mgrid[0:h, 0:w]
    img = np.full((h, w), 210, dtype=np.uint8)
    img[(xs - 32) ** 2 + (ys - 32) ** 2 <= 20**2] = 40
    edges = canny(gray(img))
    dist = np.abs(np.hypot(xs - 32.0, ys - 32.0) - 20.0)
    assert edges.bits.any()
    assert dist[edges.bits].max() <= 2.0


def test_canny_translation_equivariance(rng):
    base = rng.integers(0, 256, (40, 40), dtype=np.uint8).astype(np.uint8)
    dx, dy = 3, 2
    shifted = np.roll(np.roll(base, dy, axis=0), dx, axis=1)
    e0 = canny(GrayImage(base)).bits
    e1 = canny(GrayImage(shifted)).bits
    # compare the interior, away from borders and the wrap-around
    innerized = e0[8:-8, 8:-8]
    moved = e1[8 + dy : -8 + dy, 8 + dx : -8 + dx]
    assert np.array_equal(innerized, moved)


def test_canny_threshold_validation():
    with pytest.raises(ParameterError):
        canny(gray(np.zeros((5, 5))), low=10, high=5)


# ------------------------------------------------------------------ blobs

def test_blob_single_square():
    m = np.zeros((30, 30), dtype=bool)
    m[5:15, 5:15] = True
    blobs = blob_centers(BitMask(m))
    assert len(blobs) == 1
    assert blobs[0].cx == pytest.approx(9.5)
    assert blobs[0].cy == pytest.approx(9.5)
    assert blobs[0].area == 100


def test_blob_sorted_by_area():
    m = np.zeros((20, 20), dtype=bool)
    m[1:6, 1:11] = True  # 50
    m[10:14, 10:15] = True  # 20
    blobs = blob_centers(BitMask(m))
    assert [b.area for b in blobs] == [50, 20]


def test_blob_empty():
    assert blob_centers(BitMask(np.zeros((4, 4), dtype=bool))) == []


def test_blob_diagonal_is_single_8connected():
    m = np.zeros((6, 6), dtype=bool)
    m[0, 0] = m[1, 1] = m[2, 2] = True
    assert len(blob_centers(BitMask(m))) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_blob_area_sum_and_centroid_bounds(seed):
    r = np.random.default_rng(seed)
    m = r.random((15, 15)) < 0.3
    blobs = blob_centers(BitMask(m))
    assert sum(b.area for b in blobs) == int(m.sum())
    lab_y, lab_x = np.nonzero(m)
    for b in blobs:
        assert lab_x.min() - 1e-9 <= b.cx <= lab_x.max() + 1e-9
        assert lab_y.min() - 1e-9 <= b.cy <= lab_y.max() + 1e-9


# ------------------------------------------------------------------ hough

def circle_edge_mask(h, w, cx, cy, r):
    ys, xs = np.mgrid[0:h, 0:w]
    return np.floor(np.hypot(xs - cx, ys - cy) + 0.5).astype(int) == r


def hough_oracle(edges, r_min, r_max):
    """Brute-force accumulator: count edge pixels at rounded distance r
    from every candidate center."""
    h, w = edges.shape
    ys, xs = np.nonzero(edges)
    acc = np.zeros((r_max + 1, h, w), dtype=int)
    for cy in range(h):
        for cx in range(w):
            d = np.floor(np.hypot(xs - cx, ys - cy) + 0.5).astype(int)
            for r in range(r_min, r_max + 1):
                acc[r, cy, cx] = int((d == r).sum())
    return acc


def test_hough_recovers_circle():
    edges = circle_edge_mask(80, 80, 40, 40, 15)
    circles = hough_circles(BitMask(edges), 10, 20)
    top = circles[0]
    assert (top.cx, top.cy, top.r) == (40, 40, 15)
    assert top.score == int(edges.sum())


def test_hough_empty_mask():
    assert hough_circles(BitMask(np.zeros((40, 40), dtype=bool)), 5, 10) == []


def test_hough_concentric_scores():
    edges = circle_edge_mask(60, 60, 30, 30, 10) | circle_edge_mask(60, 60, 30, 30, 18)
    circles = hough_circles(BitMask(edges), 8, 20)
    radii = {c.r for c in circles if (c.cx, c.cy) == (30, 30)}
    assert {10.0, 18.0} <= radii
    by_r = {c.r: c.score for c in circles if (c.cx, c.cy) == (30, 30)}
    assert by_r[10.0] == int(circle_edge_mask(60, 60, 30, 30, 10).sum())
    assert by_r[18.0] == int(circle_edge_mask(60, 60, 30, 30, 18).sum())


def test_hough_matches_bruteforce_peak():
    edges = circle_edge_mask(36, 36, 17, 15, 9)
    acc = hough_oracle(edges, 6, 12)
    best = np.unravel_index(np.argmax(acc), acc.shape)
    top = hough_circles(BitMask(edges), 6, 12)[0]
    assert (top.r, top.cy, top.cx) == best
    assert top.score == acc[best]


def test_hough_parameter_validation():
    m = BitMask(np.zeros((30, 30), dtype=bool))
    with pytest.raises(ParameterError):
        hough_circles(m, 0, 5)
    with pytest.raises(ParameterError):
        hough_circles(m, 5, 3)
    with pytest.raises(ParameterError):
        hough_circles(m, 5, 16)  # over half of min dimension


def test_circle_requires_positive_radius():
    with pytest.raises(ParameterError):
        Circle(1.0, 1.0, 0.0)


# ----------------------------------------------------------------- purity

def test_operations_do_not_mutate_inputs(rng):
    img = rng.integers(0, 256, (16, 16), dtype=np.uint8).astype(np.uint8)
    g = GrayImage(img.copy())
    before = g.pixels.copy()
    otsu_threshold(g)
    adaptive_threshold(g, 5, 2.0)
    canny(g)
    assert np.array_equal(g.pixels, before)
