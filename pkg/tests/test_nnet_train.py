import numpy as np
import pytest

from gazekit.config import AdaptConfig, ConfigError, NetConfig, TrainConfig
from gazekit.heuristic import Zone
from gazekit.nnet import build_capsule_cnn, knn_probe, train_pretext
from gazekit.nnet.adapt import adapt_fine_tune, adapt_linear_probe
from gazekit.nnet.data import (
    ArrayDataset,
    ZONE_TO_INDEX,
    augment_sample,
    bilinear_resize,
    flip_label,
    hflip_image,
    image_to_tensor,
)
from gazekit.pipeline.synth import SyntheticFaceSpec, render_face, sample_offset

TOY = NetConfig(
    input_size=32,
    conv_widths=(4, 8, 8, 16, 16),
    n_capsules=4,
    capsule_dim=4,
    fc_dims=(32, 16),
    seed=2,
)


def make_zone_dataset(n_per_class=40, size=32, seed=0, task="zone"):
    rng = np.random.default_rng(seed)
    images, labels, ids = [], [], []
    for ci, zone in enumerate((Zone.LEFT, Zone.RIGHT, Zone.CENTER)):
        for i in range(n_per_class):
            off = sample_offset(zone, size, rng)
            face = render_face(
                SyntheticFaceSpec(off, 0.0, 3.0, int(rng.integers(0, 2**31))), size
            )
            images.append(image_to_tensor(face.rgb))
            labels.append(ZONE_TO_INDEX[zone] if task == "zone" else np.array(face.gaze))
            ids.append(f"{zone.value}/{i}")
    n = len(images)
    order = np.random.default_rng(seed + 1).permutation(n)
    label_arr = (
        np.asarray(labels, dtype=np.int64) if task == "zone" else np.stack(labels)
    )
    data = ArrayDataset(
        images=np.stack(images)[order],
        labels=label_arr[order],
        ids=[ids[i] for i in order],
        task=task,
    )
    cut = int(0.75 * n)
    data.train_idx = np.arange(cut)
    data.val_idx = np.arange(cut, n)
    return data


@pytest.fixture(scope="module")
def zone_data():
    return make_zone_dataset()


@pytest.fixture(scope="module")
def pretrained(zone_data):
    net = build_capsule_cnn(TOY)
    result = train_pretext(
        net, zone_data, TrainConfig(epochs=8, lr=0.01, batch_size=16, seed=0)
    )
    return net, result


# --------------------------------------------------------------- pretext

def test_train_zero_epochs_logs_initial_metrics(zone_data):
    net = build_capsule_cnn(TOY)
    before = {n: p.copy() for n, p, _, _ in net.param_items()}
    result = train_pretext(net, zone_data, TrainConfig(epochs=0))
    assert [row[0] for row in result.log] == [0, 0]
    for n, p, _, _ in net.param_items():
        assert p.tobytes() == before[n].tobytes()


def test_train_learns_toy_task(pretrained):
    _, result = pretrained
    assert result.best_val_accuracy >= 0.8


def test_train_deterministic_logs(zone_data):
    cfg = TrainConfig(epochs=2, seed=4)
    r1 = train_pretext(build_capsule_cnn(TOY), zone_data, cfg)
    r2 = train_pretext(build_capsule_cnn(TOY), zone_data, cfg)
    assert r1.log == r2.log


def test_train_requires_split():
    data = make_zone_dataset(n_per_class=4)
    data.train_idx = np.empty(0, dtype=np.int64)
    with pytest.raises(ConfigError):
        train_pretext(build_capsule_cnn(TOY), data, TrainConfig(epochs=1))


# ------------------------------------------------------------ augmentation

def test_hflip_involution():
    img = np.random.default_rng(0).uniform(0, 1, (3, 16, 16))
    assert np.array_equal(hflip_image(hflip_image(img)), img)


def test_flip_labels():
    assert flip_label(ZONE_TO_INDEX[Zone.LEFT], "zone") == ZONE_TO_INDEX[Zone.RIGHT]
    assert flip_label(ZONE_TO_INDEX[Zone.CENTER], "zone") == ZONE_TO_INDEX[Zone.CENTER]
    g = np.array([0.3, -0.1, 0.9])
    flipped = flip_label(g, "gaze3d")
    assert np.array_equal(flipped, [-0.3, -0.1, 0.9] * np.array([1, 1, 1]) * [1, 1, 1])
    assert np.array_equal(flip_label(flipped, "gaze3d"), g)


def test_bilinear_resize_identity_and_constant():
    img = np.random.default_rng(1).uniform(0, 1, (3, 12, 12))
    assert np.allclose(bilinear_resize(img, 12, 12), img, atol=1e-12)
    const = np.full((3, 9, 9), 0.4)
    assert np.allclose(bilinear_resize(const, 14, 14), 0.4, atol=1e-12)


def test_augment_preserves_shape_and_is_seed_deterministic():
    img = np.random.default_rng(2).uniform(0, 1, (3, 32, 32))
    out1, lbl1 = augment_sample(img, 0, "zone", np.random.default_rng(7))
    out2, lbl2 = augment_sample(img, 0, "zone", np.random.default_rng(7))
    assert out1.shape == img.shape
    assert np.array_equal(out1, out2) and lbl1 == lbl2


# ------------------------------------------------------------- adaptation

def test_linear_probe_freezes_backbone(pretrained, zone_data):
    net, _ = pretrained
    before = {n: b.tobytes() for n, b in net.backbone_blocks().items()}
    result = adapt_linear_probe(
        net, zone_data, "zone", AdaptConfig(epochs=2, lr=0.01, head_dim=32, seed=1)
    )
    probe = result.net
    after = {n: b.tobytes() for n, b in probe.backbone_blocks().items()}
    assert before == after  # bit-identical, donor layout matches probe trunk
    donor_after = {n: b.tobytes() for n, b in net.backbone_blocks().items()}
    assert donor_after == before
    assert result.best_val_metric > 1.0 / 3.0


def test_linear_probe_latents_unchanged(pretrained, zone_data):
    net, _ = pretrained
    x = zone_data.images[:6]
    before = net.embed(x)
    result = adapt_linear_probe(
        net, zone_data, "zone", AdaptConfig(epochs=1, head_dim=16, seed=2)
    )
    assert np.array_equal(result.net.embed(x), before)


def test_fine_tune_epochs_zero_keeps_backbone(pretrained, zone_data):
    net, _ = pretrained
    result = adapt_fine_tune(net, zone_data, "zone", AdaptConfig(epochs=0, head_dim=16))
    trunk = {n: b.tobytes() for n, b in result.net.backbone_blocks().items()}
    donor = {n: b.tobytes() for n, b in net.backbone_blocks().items()}
    assert trunk == donor


def test_fine_tune_beats_probe_train_loss(pretrained, zone_data):
    net, _ = pretrained
    cfg = AdaptConfig(epochs=3, lr=0.01, head_dim=32, seed=3, augment=False)
    lp = adapt_linear_probe(net, zone_data, "zone", cfg)
    ft = adapt_fine_tune(net, zone_data, "zone", cfg)
    lp_final = [r for r in lp.log if r[1] == "train"][-1][2]
    ft_final = [r for r in ft.log if r[1] == "train"][-1][2]
    assert ft_final <= lp_final + 1e-9


def test_adapt_gaze3d_runs_and_reports_degrees(pretrained):
    net, _ = pretrained
    data = make_zone_dataset(n_per_class=12, task="gaze3d")
    result = adapt_fine_tune(
        net, data, "gaze3d", AdaptConfig(epochs=6, lr=0.01, batch_size=8, head_dim=16)
    )
    assert result.val_sample_errors is not None
    assert (result.val_sample_errors >= 0).all()
    initial = [m for e, s, l, m in result.log if s == "val"][0]
    assert result.best_val_metric < min(60.0, initial)


def test_adapt_task_mismatch(pretrained, zone_data):
    net, _ = pretrained
    with pytest.raises(ConfigError):
        adapt_linear_probe(net, zone_data, "gaze3d", AdaptConfig(epochs=1))


# ------------------------------------------------------------------- knn

def test_knn_exact_match_k1():
    latents = np.array([[1.0, 0.0], [0.0, 1.0], [0.7, 0.7]])
    labels = np.array([0, 1, 2])
    assert knn_probe(latents, labels, np.array([0.0, 1.0]), k=1) == 1


def test_knn_two_clusters():
    rng = np.random.default_rng(5)
    a = rng.normal((5, 0, 0), 0.1, (20, 3))
    b = rng.normal((0, 5, 0), 0.1, (20, 3))
    latents = np.vstack([a, b])
    labels = np.array([0] * 20 + [1] * 20)
    query = rng.normal((5, 0, 0), 0.1, (4, 3))
    assert (knn_probe(latents, labels, query, k=5) == 0).all()


def test_knn_weighted_vote_prefers_closer_neighbors():
    latents = np.array([[1.0, 0.0], [0.95, 0.05], [0.0, 1.0]])
    labels = np.array([0, 0, 1])
    # k=3 sees two near label-0 points and one orthogonal label-1 point
    assert knn_probe(latents, labels, np.array([1.0, 0.0]), k=3) == 0


def test_knn_k_validation():
    latents = np.ones((3, 2))
    labels = np.array([0, 1, 2])
    with pytest.raises(ConfigError):
        knn_probe(latents, labels, np.ones(2), k=4)
    with pytest.raises(ConfigError):
        knn_probe(np.empty((0, 2)), np.empty(0, dtype=int), np.ones(2), k=1)
