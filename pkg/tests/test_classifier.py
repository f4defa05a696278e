"""Classifier tests: layer gradients against finite differences, a
pencil-and-paper forward oracle, training determinism and null-update laws,
and evaluation metrics checked against exhaustive pairwise comparison."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swallowmon.classifier import (
    ComparisonReport,
    HealthIndex,
    Metrics,
    Model2DConfig,
    ModelConfig,
    Network,
    Network2D,
    TrainConfig,
    build_2d_network,
    build_network,
    compare_models,
    comparison_from_json,
    comparison_to_json,
    evaluate,
    fit_length,
    gradient_check,
    health_index,
    load_checkpoint,
    metrics_from_json,
    metrics_from_scores,
    metrics_to_json,
    model_version,
    roc_points,
    save_checkpoint,
    split_by_subject,
    train,
    trainlog_to_csv,
)
from swallowmon.classifier.layers import (
    BatchNorm,
    Conv1D,
    Conv2D,
    Dense,
    MaxPool1D,
    MaxPool2D,
    ReLU,
    bce_with_logits,
    sigmoid,
)
from swallowmon.signal_model import LabeledDataset, make_corpus

# Small-but-complete model shapes used throughout to keep tests fast:
# 40 -> conv5 -> 36 -> pool2 -> 18 -> conv3 -> 16 -> pool2 -> 8
#    -> conv3 -> 6 -> pool2 -> 3, flatten 5*3 = 15.
SMALL_CFG = ModelConfig(
    input_len=40,
    in_channels=2,
    conv_specs=((3, 5, 2), (4, 3, 2), (5, 3, 2)),
    fc_width=6,
    seed=0,
)
SMALL_2D_CFG = Model2DConfig(
    input_len=200,
    in_channels=2,
    stft_window=32,
    stft_hop=8,
    conv_specs=((3, 3, 2), (4, 3, 2)),
    fc_width=5,
    seed=0,
)


def fd_wrt(f, arr, eps=1e-6):
    """Exhaustive central-difference gradient of scalar f() wrt arr."""
    g = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        fp = f()
        flat[i] = old - eps
        fm = f()
        flat[i] = old
        gf[i] = (fp - fm) / (2.0 * eps)
    return g


def pairwise_auc(scores, labels):
    """Probability a random positive outscores a random negative, ties 0.5."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


# ---------------------------------------------------------------------------
# layer primitives
# ---------------------------------------------------------------------------


class TestLayerGradients:
    def test_conv1d_exhaustive_finite_difference(self):
        rng = np.random.default_rng(0)
        layer = Conv1D(2, 3, kernel=3, rng=rng)
        x = rng.standard_normal((2, 2, 7))
        G = rng.standard_normal((2, 3, 5))

        layer.forward(x, train=True)
        dx = layer.backward(G)
        dw = layer.grads["w"].copy()
        db = layer.grads["b"].copy()

        def loss():
            return float(np.sum(layer.forward(x, train=True) * G))

        assert np.allclose(dx, fd_wrt(loss, x), rtol=1e-5, atol=1e-7)
        assert np.allclose(dw, fd_wrt(loss, layer.params["w"]), rtol=1e-5, atol=1e-7)
        assert np.allclose(db, fd_wrt(loss, layer.params["b"]), rtol=1e-5, atol=1e-7)

    def test_conv2d_exhaustive_finite_difference(self):
        rng = np.random.default_rng(1)
        layer = Conv2D(2, 3, kernel=3, rng=rng)
        x = rng.standard_normal((2, 2, 6, 7))
        G = rng.standard_normal((2, 3, 4, 5))

        layer.forward(x, train=True)
        dx = layer.backward(G)
        dw = layer.grads["w"].copy()
        db = layer.grads["b"].copy()

        def loss():
            return float(np.sum(layer.forward(x, train=True) * G))

        assert np.allclose(dx, fd_wrt(loss, x), rtol=1e-5, atol=1e-7)
        assert np.allclose(dw, fd_wrt(loss, layer.params["w"]), rtol=1e-5, atol=1e-7)
        assert np.allclose(db, fd_wrt(loss, layer.params["b"]), rtol=1e-5, atol=1e-7)

    def test_dense_exhaustive_finite_difference(self):
        rng = np.random.default_rng(2)
        layer = Dense(4, 3, rng=rng)
        x = rng.standard_normal((5, 4))
        G = rng.standard_normal((5, 3))

        layer.forward(x, train=True)
        dx = layer.backward(G)
        dw = layer.grads["w"].copy()
        db = layer.grads["b"].copy()

        def loss():
            return float(np.sum(layer.forward(x, train=True) * G))

        assert np.allclose(dx, fd_wrt(loss, x), rtol=1e-5, atol=1e-7)
        assert np.allclose(dw, fd_wrt(loss, layer.params["w"]), rtol=1e-5, atol=1e-7)
        assert np.allclose(db, fd_wrt(loss, layer.params["b"]), rtol=1e-5, atol=1e-7)

    def test_batchnorm_train_mode_finite_difference(self):
        rng = np.random.default_rng(3)
        layer = BatchNorm(4)
        x = rng.standard_normal((5, 4))
        G = rng.standard_normal((5, 4))

        layer.forward(x, train=True, update_stats=False)
        dx = layer.backward(G)
        dgamma = layer.grads["gamma"].copy()
        dbeta = layer.grads["beta"].copy()

        def loss():
            return float(np.sum(layer.forward(x, train=True, update_stats=False) * G))

        assert np.allclose(dx, fd_wrt(loss, x), rtol=1e-4, atol=1e-6)
        assert np.allclose(dgamma, fd_wrt(loss, layer.params["gamma"]), rtol=1e-5, atol=1e-7)
        assert np.allclose(dbeta, fd_wrt(loss, layer.params["beta"]), rtol=1e-5, atol=1e-7)

    def test_maxpool1d_routes_gradient_to_argmax(self):
        layer = MaxPool1D(2)
        x = np.array([[[1.0, 3.0, 2.0, 0.0, 5.0, 4.0, 9.0]]])
        y = layer.forward(x, train=True)
        assert np.array_equal(y, [[[3.0, 2.0, 5.0]]])  # trailing 9 is dropped
        dx = layer.backward(np.array([[[10.0, 20.0, 30.0]]]))
        assert np.array_equal(dx, [[[0.0, 10.0, 20.0, 0.0, 30.0, 0.0, 0.0]]])

    def test_maxpool2d_routes_gradient_to_argmax(self):
        layer = MaxPool2D(2)
        x = np.array([[[[1.0, 2.0, 5.0, 0.0], [4.0, 3.0, 1.0, 2.0]]]])
        y = layer.forward(x, train=True)
        assert np.array_equal(y, [[[[4.0, 5.0]]]])
        dx = layer.backward(np.array([[[[7.0, 9.0]]]]))
        assert np.array_equal(dx, [[[[0.0, 0.0, 9.0, 0.0], [7.0, 0.0, 0.0, 0.0]]]])

    def test_relu_masks_gradient(self):
        layer = ReLU()
        x = np.array([[-1.0, 0.0, 2.0]])
        assert np.array_equal(layer.forward(x, train=True), [[0.0, 0.0, 2.0]])
        dx = layer.backward(np.array([[5.0, 5.0, 5.0]]))
        assert np.array_equal(dx, [[0.0, 0.0, 5.0]])


class TestBatchNormState:
    def test_running_stats_update_law(self):
        layer = BatchNorm(2, decay=0.9)
        x = np.array([[1.0, 10.0], [3.0, 14.0]])
        layer.forward(x, train=True, update_stats=True)
        # running <- 0.9 * running + 0.1 * batch, biased batch variance
        assert np.allclose(layer.running_mean, 0.1 * np.array([2.0, 12.0]), atol=1e-15)
        assert np.allclose(
            layer.running_var, 0.9 * 1.0 + 0.1 * np.array([1.0, 4.0]), atol=1e-15
        )

    def test_infer_uses_running_stats(self):
        layer = BatchNorm(2, eps=1e-5)
        layer.running_mean[:] = [1.0, -2.0]
        layer.running_var[:] = [4.0, 9.0]
        layer.params["gamma"][:] = [2.0, 1.0]
        layer.params["beta"][:] = [0.5, -0.5]
        x = np.array([[3.0, 1.0]])
        y = layer.forward(x, train=False)
        expect = np.array(
            [
                [
                    2.0 * (3.0 - 1.0) / math.sqrt(4.0 + 1e-5) + 0.5,
                    1.0 * (1.0 - (-2.0)) / math.sqrt(9.0 + 1e-5) - 0.5,
                ]
            ]
        )
        assert np.allclose(y, expect, atol=1e-15)

    def test_train_forward_without_update_leaves_stats(self):
        layer = BatchNorm(3)
        before_m = layer.running_mean.copy()
        before_v = layer.running_var.copy()
        layer.forward(np.random.default_rng(0).standard_normal((4, 3)), train=True,
                      update_stats=False)
        assert np.array_equal(layer.running_mean, before_m)
        assert np.array_equal(layer.running_var, before_v)


class TestLossPrimitives:
    def test_sigmoid_known_values(self):
        assert sigmoid(np.array([0.0]))[0] == 0.5
        assert np.allclose(sigmoid(np.array([1.2])), 1.0 / (1.0 + np.exp(-1.2)), atol=1e-15)
        # extreme logits stay inside (0, 1) without overflow
        p = sigmoid(np.array([-800.0, 800.0]))
        assert 0.0 <= p[0] < 1e-300 and p[1] == 1.0

    def test_bce_matches_direct_formula(self):
        z = np.array([2.0, -1.0, 0.3])
        y = np.array([1.0, 0.0, 1.0])
        loss, dz = bce_with_logits(z, y)
        p = 1.0 / (1.0 + np.exp(-z))
        direct = float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p))))
        assert abs(loss - direct) < 1e-12
        assert np.allclose(dz, (p - y) / 3.0, atol=1e-15)

    def test_bce_at_zero_logit_is_log_two(self):
        loss, _ = bce_with_logits(np.array([0.0]), np.array([1.0]))
        assert abs(loss - math.log(2.0)) < 1e-15

    def test_bce_gradient_finite_difference(self):
        rng = np.random.default_rng(4)
        z = rng.standard_normal(6)
        y = (rng.random(6) < 0.5).astype(float)
        _, dz = bce_with_logits(z, y)

        def loss():
            return bce_with_logits(z, y)[0]

        assert np.allclose(dz, fd_wrt(loss, z), rtol=1e-6, atol=1e-9)


def test_hand_computed_forward_chain():
    """Conv -> ReLU -> pool -> dense -> sigmoid against explicit arithmetic."""
    conv = Conv1D(1, 1, kernel=3)
    conv.params["w"][:] = np.array([[[1.0, 0.0, -1.0]]])
    conv.params["b"][:] = [0.5]
    dense = Dense(3, 1)
    dense.params["w"][:] = np.array([[0.2], [-0.1], [0.4]])
    dense.params["b"][:] = [-0.3]

    x = np.array([[[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]]])
    h = conv.forward(x, train=False)
    assert np.allclose(h, [[[-0.5, 0.5, -0.5, -7.5, 3.5, 3.5]]], atol=1e-15)
    h = ReLU().forward(h, train=False)
    h = MaxPool1D(2).forward(h, train=False)
    assert np.allclose(h, [[[0.5, 0.0, 3.5]]], atol=1e-15)
    z = dense.forward(h.reshape(1, 3), train=False)
    assert abs(z[0, 0] - 1.2) < 1e-15
    p = sigmoid(z)[0, 0]
    assert abs(p - 1.0 / (1.0 + math.exp(-1.2))) < 1e-15


# ---------------------------------------------------------------------------
# network construction and forward
# ---------------------------------------------------------------------------


class TestModelConfig:
    def test_default_flatten_size(self):
        assert ModelConfig().flatten_size == 32 * 14

    def test_small_flatten_size(self):
        assert SMALL_CFG.flatten_size == 15

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(conv_specs=((8, 7, 4), (16, 5, 4))),  # not exactly 3 stages
            dict(conv_specs=((8, 7, 4), (16, 5, 4), (32, 3, 4), (4, 3, 2))),
            dict(input_len=20),  # collapses to zero length
            dict(in_channels=0),
            dict(fc_width=0),
            dict(conv_specs=((8, 0, 4), (16, 5, 4), (32, 3, 4))),
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ModelConfig(**kwargs)

    def test_2d_default_dims(self):
        cfg = Model2DConfig()
        assert (cfg.input_frames, cfg.input_bins) == (30, 33)
        assert cfg.flatten_size == 16 * 6 * 6

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(conv_specs=((8, 3, 2),)),  # not exactly 2 stages
            dict(stft_window=48),  # not a power of two
            dict(stft_window=2048),  # longer than input
            dict(conv_specs=((8, 31, 2), (16, 3, 2))),  # collapses bins to zero
        ],
    )
    def test_invalid_2d_configs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            Model2DConfig(**kwargs)


class TestNetworkForward:
    def test_same_seed_bit_identical_parameters(self):
        a = build_network(SMALL_CFG)
        b = build_network(SMALL_CFG)
        for (name_a, arr_a), (name_b, arr_b) in zip(a.parameter_items(), b.parameter_items()):
            assert name_a == name_b
            assert np.array_equal(arr_a, arr_b)

    def test_different_seed_changes_parameters(self):
        a = build_network(SMALL_CFG)
        b = build_network(ModelConfig(**{**SMALL_CFG.__dict__, "seed": 9}))
        assert any(
            not np.array_equal(x, y)
            for (_, x), (_, y) in zip(a.parameter_items(), b.parameter_items())
        )

    def test_zero_input_fresh_network_scores_half(self):
        net = build_network(SMALL_CFG)
        p = net.forward(np.zeros((2, 40)))
        assert p == 0.5

    def test_output_strictly_inside_unit_interval(self):
        net = build_network(SMALL_CFG)
        rng = np.random.default_rng(5)
        p = net.forward(rng.standard_normal((8, 2, 40)))
        assert p.shape == (8,)
        assert np.all(p > 0.0) and np.all(p < 1.0)

    def test_identical_rows_identical_scores(self):
        net = build_network(SMALL_CFG)
        x = np.random.default_rng(6).standard_normal((2, 40))
        p = net.forward(np.stack([x, x]))
        assert p[0] == p[1]

    def test_single_sample_returns_float(self):
        net = build_network(SMALL_CFG)
        p = net.forward(np.random.default_rng(7).standard_normal((2, 40)))
        assert isinstance(p, float)

    @pytest.mark.parametrize("shape", [(3, 40), (2, 39), (1, 2, 39), (2,)])
    def test_shape_mismatch_rejected(self, shape):
        net = build_network(SMALL_CFG)
        with pytest.raises(ValueError):
            net.forward(np.zeros(shape))

    def test_2d_network_forward_range_and_determinism(self):
        net = build_2d_network(SMALL_2D_CFG)
        net2 = build_2d_network(SMALL_2D_CFG)
        x = np.random.default_rng(8).random((3, 2, 22, 17))
        p = net.forward(x)
        assert p.shape == (3,) and np.all((p > 0) & (p < 1))
        assert np.array_equal(p, net2.forward(x))

    def test_2d_shape_mismatch_rejected(self):
        net = build_2d_network(SMALL_2D_CFG)
        with pytest.raises(ValueError):
            net.forward(np.zeros((2, 21, 17)))


def test_fit_length_pads_and_truncates():
    x = np.array([[1.0, 2.0, 3.0]])
    assert np.array_equal(fit_length(x, 5), [[1.0, 2.0, 3.0, 0.0, 0.0]])
    y = np.array([[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]])
    assert np.array_equal(fit_length(y, 3), [[2.0, 3.0, 4.0]])  # central cut
    assert np.array_equal(fit_length(y, 7), y)


class TestPrepare:
    def test_1d_prepare_shapes_and_labels(self):
        ds = make_corpus(2, 2, 3, seed=5)
        net = build_network(ModelConfig(seed=0))
        X, y, subjects = net.prepare(ds)
        assert X.shape == (12, 4, 1000) and X.dtype == np.float64
        assert np.array_equal(y, [it.label for it in ds.items])
        assert list(subjects) == [it.subject_id for it in ds.items]

    def test_2d_prepare_shapes(self):
        ds = make_corpus(2, 2, 3, seed=5)
        net = build_2d_network(Model2DConfig(seed=0))
        X, y, subjects = net.prepare(ds)
        assert X.shape == (12, 4, 30, 33)
        assert np.all(X >= 0.0)  # spectral magnitudes


# ---------------------------------------------------------------------------
# gradient check
# ---------------------------------------------------------------------------


class TestGradientCheck:
    def test_composed_network_below_tolerance(self):
        net = build_network(SMALL_CFG)
        rng = np.random.default_rng(10)
        X = rng.standard_normal((4, 2, 40))
        y = np.array([1.0, 0.0, 1.0, 0.0])
        assert gradient_check(net, X, y) < 1e-4

    def test_2d_network_below_tolerance(self):
        net = build_2d_network(SMALL_2D_CFG)
        rng = np.random.default_rng(11)
        X = rng.random((4, 2, 22, 17))
        y = np.array([0.0, 1.0, 0.0, 1.0])
        assert gradient_check(net, X, y) < 1e-4

    def test_corrupted_gradient_detected(self):
        net = build_network(SMALL_CFG)
        conv = net.layers[0]
        orig = conv.backward

        def doubled(grad):
            out = orig(grad)
            conv.grads["w"] *= 2.0
            return out

        conv.backward = doubled
        rng = np.random.default_rng(12)
        X = rng.standard_normal((4, 2, 40))
        y = np.array([1.0, 0.0, 0.0, 1.0])
        assert gradient_check(net, X, y) > 0.1

    def test_degenerate_zero_network_finishes(self):
        net = build_network(SMALL_CFG)
        for _, arr in net.parameter_items():
            arr[...] = 0.0
        err = gradient_check(net, np.zeros((2, 2, 40)), np.array([1.0, 0.0]))
        assert math.isfinite(err) and err < 1e-4


# ---------------------------------------------------------------------------
# splitting and training
# ---------------------------------------------------------------------------


class TestSplit:
    def test_split_is_subject_disjoint_partition(self):
        subjects = np.array(["H1"] * 3 + ["H2"] * 3 + ["H3"] * 3 + ["P1"] * 3 + ["P2"] * 3)
        labels = np.array([0] * 9 + [1] * 6)
        train_mask, val_mask, train_subj, val_subj = split_by_subject(
            subjects, labels, val_fraction=0.34, seed=0
        )
        assert np.array_equal(train_mask, ~val_mask)
        assert not set(train_subj) & set(val_subj)
        assert set(train_subj) | set(val_subj) == {"H1", "H2", "H3", "P1", "P2"}
        # per class: max(1, round(0.34 * n)) -> 1 of 3 healthy, 1 of 2 patient
        assert sum(s.startswith("H") for s in val_subj) == 1
        assert sum(s.startswith("P") for s in val_subj) == 1
        assert set(labels[val_mask]) == {0, 1}

    def test_split_deterministic(self):
        subjects = np.array([f"S{i}" for i in range(10) for _ in range(2)])
        labels = np.array([i % 2 for i in range(10) for _ in range(2)])
        a = split_by_subject(subjects, labels, val_fraction=0.3, seed=4)
        b = split_by_subject(subjects, labels, val_fraction=0.3, seed=4)
        assert np.array_equal(a[0], b[0]) and a[3] == b[3]


@pytest.fixture(scope="module")
def tiny_corpus():
    return make_corpus(3, 3, 4, seed=7)


class TestTraining:
    def test_loss_decreases_on_tiny_corpus(self, tiny_corpus):
        net = build_network(ModelConfig(seed=1))
        log = train(net, tiny_corpus, TrainConfig(iterations=6, batch_size=8, seed=3))
        assert len(log.train_loss) == 6
        assert log.train_loss[-1] < log.initial_train_loss
        assert not set(log.train_subjects) & set(log.val_subjects)

    def test_zero_learning_rate_is_a_null_update(self, tiny_corpus):
        net = build_network(ModelConfig(seed=1))
        before = [arr.copy() for _, arr in net.parameter_items()]
        log = train(
            net,
            tiny_corpus,
            TrainConfig(iterations=3, batch_size=8, learning_rate=0.0, seed=3),
        )
        for (_, arr), old in zip(net.parameter_items(), before):
            assert np.array_equal(arr, old)
        assert all(v == log.initial_train_loss for v in log.train_loss)
        assert all(a == log.train_accuracy[0] for a in log.train_accuracy)

    def test_same_seed_reproduces_trainlog_exactly(self, tiny_corpus):
        tc = TrainConfig(iterations=3, batch_size=8, seed=9)
        log_a = train(build_network(ModelConfig(seed=2)), tiny_corpus, tc)
        log_b = train(build_network(ModelConfig(seed=2)), tiny_corpus, tc)
        assert log_a == log_b

    def test_single_class_dataset_rejected(self, tiny_corpus):
        healthy_only = LabeledDataset(
            items=[it for it in tiny_corpus.items if it.label == 0],
            split_seed=tiny_corpus.split_seed,
        )
        with pytest.raises(ValueError):
            train(build_network(ModelConfig(seed=0)), healthy_only, TrainConfig(iterations=1))

    def test_too_few_subjects_rejected(self):
        ds = make_corpus(1, 1, 3, seed=0)
        with pytest.raises(ValueError):
            train(build_network(ModelConfig(seed=0)), ds, TrainConfig(iterations=1))

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(iterations=0),
            dict(val_fraction=0.0),
            dict(val_fraction=1.0),
            dict(batch_size=0),
            dict(learning_rate=-1e-3),
            dict(momentum=1.0),
        ],
    )
    def test_invalid_train_config_rejected(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)

    def test_trainlog_csv_export(self, tiny_corpus):
        net = build_network(ModelConfig(seed=1))
        log = train(net, tiny_corpus, TrainConfig(iterations=3, batch_size=8, seed=3))
        text = trainlog_to_csv(log)
        lines = text.strip().split("\n")
        assert lines[0] == "iteration,train_loss,train_accuracy,val_loss,val_accuracy"
        assert len(lines) == 4
        first = lines[1].split(",")
        assert int(first[0]) == 1 and float(first[1]) == log.train_loss[0]


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


class TestMetrics:
    def test_hand_confusion_and_rates(self):
        m = metrics_from_scores([0.9, 0.8, 0.3, 0.2], [1, 0, 1, 0], threshold=0.5)
        assert (m.tp, m.fp, m.tn, m.fn) == (1, 1, 1, 1)
        assert m.accuracy == 0.5 and m.precision == 0.5 and m.recall == 0.5
        assert m.f1 == 0.5
        assert abs(m.auc - 0.75) < 1e-15

    def test_three_score_pairwise_oracle(self):
        # pairs: (0.9 vs 0.8) concordant, (0.3 vs 0.8) discordant -> AUC 1/2
        m = metrics_from_scores([0.9, 0.8, 0.3], [1, 0, 1], threshold=0.5)
        assert m.auc == 0.5

    def test_perfect_separation(self):
        m = metrics_from_scores([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0], threshold=0.5)
        assert m.auc == 1.0 and m.recall == 1.0 and m.accuracy == 1.0

    def test_all_tied_scores_give_half(self):
        m = metrics_from_scores([0.4] * 6, [1, 0, 1, 0, 1, 0], threshold=0.5)
        assert m.auc == 0.5

    def test_trapezoid_equals_pairwise_with_ties(self):
        rng = np.random.default_rng(13)
        scores = rng.integers(0, 8, size=60) / 8.0
        labels = np.r_[np.ones(30, int), np.zeros(30, int)]
        m = metrics_from_scores(scores, labels, threshold=0.5)
        assert abs(m.auc - pairwise_auc(scores, labels)) < 1e-12

    def test_roc_endpoints_and_monotonicity(self):
        rng = np.random.default_rng(14)
        scores = rng.random(50)
        labels = rng.integers(0, 2, size=50)
        labels[0], labels[1] = 0, 1
        pts = roc_points(scores, labels)
        assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
        fpr = [p[0] for p in pts]
        tpr = [p[1] for p in pts]
        assert all(a <= b for a, b in zip(fpr, fpr[1:]))
        assert all(a <= b for a, b in zip(tpr, tpr[1:]))

    def test_raising_threshold_never_raises_recall(self):
        rng = np.random.default_rng(15)
        scores = rng.random(80)
        labels = rng.integers(0, 2, size=80)
        labels[:2] = [0, 1]
        recalls = [
            metrics_from_scores(scores, labels, threshold=t).recall
            for t in np.linspace(0.0, 1.0, 21)
        ]
        assert all(a >= b for a, b in zip(recalls, recalls[1:]))

    def test_auc_invariant_under_increasing_transform(self):
        rng = np.random.default_rng(16)
        scores = rng.integers(0, 64, size=40) / 64.0
        labels = np.r_[np.ones(20, int), np.zeros(20, int)]
        a = metrics_from_scores(scores, labels, threshold=0.5).auc
        b = metrics_from_scores(0.25 * scores + 0.5, labels, threshold=0.5).auc
        assert a == b

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            metrics_from_scores([0.1, 0.9], [1, 1], threshold=0.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            metrics_from_scores([], [], threshold=0.5)

    def test_metrics_json_round_trip(self):
        m = metrics_from_scores([0.9, 0.6, 0.3, 0.2], [1, 1, 0, 0], threshold=0.5)
        assert metrics_from_json(metrics_to_json(m)) == m

    @settings(deadline=None)
    @given(
        scores=st.lists(st.integers(0, 12), min_size=2, max_size=40),
        data=st.data(),
    )
    def test_property_trapezoid_equals_pairwise(self, scores, data):
        labels = data.draw(
            st.lists(st.integers(0, 1), min_size=len(scores), max_size=len(scores))
        )
        if len(set(labels)) < 2:
            labels[0], labels[-1] = 0, 1
        s = np.asarray(scores) / 12.0
        m = metrics_from_scores(s, labels, threshold=0.5)
        assert abs(m.auc - pairwise_auc(s, labels)) < 1e-12


class TestHealthIndex:
    def test_anchor_values(self):
        assert health_index(1.0).value == 0.0
        assert health_index(0.0).value == 1.0
        assert health_index(0.5).value == 0.5

    @pytest.mark.parametrize("p", [-0.1, 1.1, float("nan")])
    def test_out_of_range_rejected(self, p):
        with pytest.raises(ValueError):
            health_index(p)

    def test_classification_consistency(self):
        rng = np.random.default_rng(17)
        for p in rng.random(200):
            hi = health_index(float(p))
            assert isinstance(hi, HealthIndex)
            assert (p >= 0.5) == ((1.0 - hi.value) >= 0.5)


# ---------------------------------------------------------------------------
# evaluation on datasets, checkpoints, comparison
# ---------------------------------------------------------------------------


class TestEvaluate:
    def test_evaluate_returns_metrics(self, tiny_corpus):
        net = build_network(ModelConfig(seed=1))
        m = evaluate(net, tiny_corpus, threshold=0.5)
        assert isinstance(m, Metrics)
        assert m.tp + m.fp + m.tn + m.fn == len(tiny_corpus.items)

    def test_evaluate_empty_rejected(self):
        net = build_network(ModelConfig(seed=1))
        with pytest.raises(ValueError):
            evaluate(net, LabeledDataset(items=[], split_seed=0), threshold=0.5)


class TestCheckpoint:
    def test_round_trip_preserves_forward(self, tmp_path):
        net = build_network(SMALL_CFG)
        path = tmp_path / "model.json"
        save_checkpoint(net, path, training_seed=42)
        loaded = load_checkpoint(path)
        x = np.random.default_rng(18).standard_normal((2, 40))
        assert net.forward(x) == loaded.forward(x)
        assert model_version(net) == model_version(loaded)

    def test_checkpoint_schema(self, tmp_path):
        net = build_network(SMALL_CFG)
        path = tmp_path / "model.json"
        save_checkpoint(net, path, training_seed=42)
        blob = json.loads(path.read_text())
        assert set(blob) >= {
            "format_version",
            "kind",
            "config",
            "model_version",
            "params",
            "state",
            "training_seed",
        }
        assert blob["kind"] == "cnn1d"
        assert blob["training_seed"] == 42
        assert blob["model_version"] == model_version(net)

    def test_version_changes_when_weights_change(self, tmp_path):
        net = build_network(SMALL_CFG)
        v0 = model_version(net)
        net.parameter_items()[0][1].reshape(-1)[0] += 1e-9
        assert model_version(net) != v0

    def test_2d_round_trip(self, tmp_path):
        net = build_2d_network(SMALL_2D_CFG)
        path = tmp_path / "model2d.json"
        save_checkpoint(net, path)
        loaded = load_checkpoint(path)
        assert isinstance(loaded, Network2D)
        x = np.random.default_rng(19).random((2, 22, 17))
        assert net.forward(x) == loaded.forward(x)

    def test_tampered_kind_rejected(self, tmp_path):
        net = build_network(SMALL_CFG)
        path = tmp_path / "model.json"
        save_checkpoint(net, path)
        blob = json.loads(path.read_text())
        blob["kind"] = "other"
        path.write_text(json.dumps(blob))
        with pytest.raises(ValueError):
            load_checkpoint(path)


@pytest.fixture(scope="module")
def report():
    ds = make_corpus(3, 3, 6, seed=11)
    tc = TrainConfig(iterations=5, batch_size=8, seed=5)
    return compare_models(ds, model_seed=2, train_config=tc), ds, tc


class TestCompareModels:
    def test_two_rows_five_metrics(self, report):
        rep, _, _ = report
        assert len(rep.rows) == 2
        assert tuple(r.name for r in rep.rows) == ("cnn_1d", "cnn_2d")
        assert rep.metric_names == ("accuracy", "auc", "precision", "sensitivity", "f1")
        for row in rep.rows:
            vals = row.metric_values()
            assert set(vals) == set(rep.metric_names)
            assert all(0.0 <= v <= 1.0 for v in vals.values())

    def test_metrics_recomputable_from_stored_scores(self, report):
        rep, _, _ = report
        for row in rep.rows:
            m = metrics_from_scores(row.val_scores, row.val_labels, threshold=0.5)
            vals = row.metric_values()
            assert abs(vals["accuracy"] - m.accuracy) < 1e-12
            assert abs(vals["auc"] - m.auc) < 1e-12
            assert abs(vals["precision"] - m.precision) < 1e-12
            assert abs(vals["sensitivity"] - m.recall) < 1e-12
            assert abs(vals["f1"] - m.f1) < 1e-12

    def test_rerun_reproduces_report_exactly(self, report):
        rep, ds, tc = report
        again = compare_models(ds, model_seed=2, train_config=tc)
        assert again == rep

    def test_json_round_trip(self, report):
        rep, _, _ = report
        rt = comparison_from_json(comparison_to_json(rep))
        assert isinstance(rt, ComparisonReport)
        assert rt == rep

    def test_winner_field_present(self, report):
        rep, _, _ = report
        assert set(rep.winner_by_metric) == set(rep.metric_names)
        assert all(w in ("cnn_1d", "cnn_2d", "tie") for w in rep.winner_by_metric.values())
