import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stressfusion.exceptions import DimensionError, DivergenceError, NumericInputError, StaleTraceError
from stressfusion.nn import (
    DenseLayer,
    DenseNet,
    TrainConfig,
    activate,
    backward,
    forward,
    init_net,
    loss,
    train,
)

from oracles import max_relative_error, numeric_gradients, random_gradcheck_case, replay_forward

EPS = 1e-7
finite = st.floats(-50, 50, allow_nan=False)


class TestActivate:
    def test_sigmoid_symmetry_point(self):
        assert activate("sigmoid", [0.0]) == pytest.approx([0.5])

    def test_relu_cases(self):
        np.testing.assert_array_equal(activate("relu", [-3.0, 0.0, 2.0]), [0.0, 0.0, 2.0])

    def test_sigmoid_ln3(self):
        # 1 / (1 + e^{-ln 3}) = 1 / (1 + 1/3)
        expected = 1.0 / (1.0 + math.exp(-math.log(3.0)))
        assert expected == pytest.approx(0.75, abs=1e-15)
        assert activate("sigmoid", [math.log(3.0)])[0] == pytest.approx(expected, abs=1e-15)

    def test_identity(self):
        np.testing.assert_array_equal(activate("identity", [1.5, -2.0]), [1.5, -2.0])

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(NumericInputError):
            activate("relu", [0.0, bad])

    @given(arrays(float, 20, elements=finite))
    def test_sigmoid_properties(self, x):
        s = activate("sigmoid", x)
        assert np.all((s > 0) & (s < 1)) or np.all((s >= 0) & (s <= 1))
        np.testing.assert_allclose(activate("sigmoid", -x), 1.0 - s, atol=1e-12)
        xs = np.sort(np.unique(x))
        assert np.all(np.diff(activate("sigmoid", xs)) >= 0)

    def test_sigmoid_strictly_inside_unit_interval(self):
        s = activate("sigmoid", np.linspace(-30, 30, 601))
        assert np.all((s > 0) & (s < 1))
        assert np.all(np.diff(s) > 0)

    @given(arrays(float, 20, elements=finite))
    def test_relu_idempotent_nonnegative(self, x):
        r = activate("relu", x)
        assert np.all(r >= 0)
        np.testing.assert_array_equal(activate("relu", r), r)


class TestLoss:
    def test_bce_perfect(self):
        assert loss("bce", [1 - EPS], [1]) < 1e-6

    def test_bce_symmetric_case(self):
        assert loss("bce", [0.5, 0.5], [1, 0]) == pytest.approx(math.log(2), abs=1e-9)

    def test_rmse_hand_value(self):
        assert loss("rmse", [3.0, 4.0], [0.0, 0.0]) == pytest.approx(math.sqrt(12.5), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            loss("rmse", [1.0, 2.0], [1.0])

    def test_bce_bad_target(self):
        with pytest.raises(ValueError):
            loss("bce", [0.5], [0.3])

    @given(
        arrays(float, 10, elements=st.floats(0, 1)),
        arrays(np.int64, 10, elements=st.integers(0, 1)),
    )
    def test_bce_nonnegative(self, p, y):
        assert loss("bce", p, y) >= 0

    @given(arrays(float, 8, elements=finite), arrays(float, 8, elements=finite))
    def test_rmse_symmetric_and_zero_on_self(self, a, b):
        assert loss("rmse", a, a) == 0
        assert loss("rmse", a, b) == pytest.approx(loss("rmse", b, a), rel=1e-12)


def _two_layer_net(rng, rate=0.5):
    return init_net([3, 5, 1], ["relu", "sigmoid"], [rate, 0.0], rng)


class TestForward:
    def test_identity_network(self):
        net = DenseNet([DenseLayer(np.eye(2), np.zeros(2), "identity")])
        out, _ = forward(net, [1.0, 2.0])
        np.testing.assert_array_equal(out, [1.0, 2.0])

    def test_inference_deterministic(self, rng):
        net = _two_layer_net(rng)
        x = rng.normal(size=3)
        np.testing.assert_array_equal(forward(net, x)[0], forward(net, x)[0])

    def test_train_mode_matches_replay_oracle(self, rng):
        net = _two_layer_net(rng)
        x = rng.normal(size=3)
        for seed in range(20):
            got, _ = forward(net, x, "train", np.random.default_rng(seed))
            want = replay_forward(net, x, np.random.default_rng(seed))
            np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionError):
            forward(_two_layer_net(rng), [1.0, 2.0])

    def test_dropout_inactive_at_inference(self, rng):
        net = _two_layer_net(rng, rate=0.9)
        _, trace = forward(net, rng.normal(size=(4, 3)), "infer")
        assert all(t.mask is None for t in trace)

    def test_inverted_dropout_preserves_expectation(self):
        # 10,000 masks over a constant 16-vector; the mean of everything is compared
        layer = DenseLayer(np.eye(16), np.zeros(16), "identity", dropout_rate=0.5)
        net = DenseNet([layer, DenseLayer(np.eye(16), np.zeros(16), "identity")])
        x = np.full((10_000, 16), 2.0)
        out, trace = forward(net, x, "train", np.random.default_rng(0))
        assert set(np.unique(out)) == {0.0, 4.0}
        assert out.mean() == pytest.approx(2.0, rel=0.02)


class TestBackward:
    def test_zero_at_minimum(self, rng):
        net = init_net([3, 4, 2], ["relu", "identity"], [0.0, 0.0], rng)
        x = rng.normal(size=(5, 3))
        pred, trace = forward(net, x)
        for dw, db in backward(net, trace, pred, "rmse"):
            assert not np.any(dw) and not np.any(db)

    def test_single_sigmoid_unit_bce(self):
        net = DenseNet([DenseLayer([[0.7]], [-0.2], "sigmoid")])
        for y in (0.0, 1.0):
            y_hat, trace = forward(net, [[1.0]])
            (dw, db), = backward(net, trace, [[y]], "bce")
            # dL/dz = y_hat - y; z = w*1 + b so dL/db = dL/dz
            assert db[0] == pytest.approx(y_hat[0, 0] - y, abs=1e-15)
            assert dw[0, 0] == pytest.approx(y_hat[0, 0] - y, abs=1e-15)

    def test_random_nets_against_finite_differences(self):
        rng = np.random.default_rng(2024)
        for _ in range(25):
            net, x, y, kind = random_gradcheck_case(rng)
            _, trace = forward(net, x)
            err = max_relative_error(backward(net, trace, y, kind), numeric_gradients(net, x, y, kind))
            assert err < 1e-5

    def test_shapes_mirror_parameters(self, rng):
        net = _two_layer_net(rng)
        _, trace = forward(net, rng.normal(size=(6, 3)), "train", rng)
        for layer, (dw, db) in zip(net.layers, backward(net, trace, np.ones((6, 1)), "bce")):
            assert dw.shape == layer.weights.shape and db.shape == layer.biases.shape

    def test_dropped_units_get_zero_gradient(self, rng):
        net = init_net([3, 6, 1], ["relu", "sigmoid"], [0.5, 0.0], rng)
        _, trace = forward(net, rng.normal(size=3), "train", np.random.default_rng(1))
        dropped = trace[0].mask[0] == 0
        assert dropped.any()
        (dw0, db0), (dw1, _) = backward(net, trace, [1.0], "bce")
        assert not np.any(dw0[dropped]) and not np.any(db0[dropped])
        assert not np.any(dw1[:, dropped])

    def test_stale_trace(self, rng):
        net = _two_layer_net(rng)
        _, trace = forward(net, rng.normal(size=3))
        other = init_net([3, 7, 1], ["relu", "sigmoid"], [0.0, 0.0], rng)
        with pytest.raises(StaleTraceError):
            backward(other, trace, [1.0], "bce")


AND_X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
AND_Y = np.array([0, 0, 0, 1], dtype=float)


class TestTrain:
    def test_and_gate(self):
        net = init_net([2, 4, 1], ["relu", "sigmoid"], [0.0, 0.0], np.random.default_rng(0))
        cfg = TrainConfig(epochs=500, learning_rate=1.0, batch_size=4, seed=0)
        history = train(net, AND_X, AND_Y, cfg, "bce")
        assert len(history) == 500
        assert history[-1] < 0.05

    def test_zero_learning_rate_is_noop(self, rng):
        net = _two_layer_net(rng)
        before = net.copy()
        x = rng.normal(size=(20, 3))
        y = (rng.random(20) < 0.5).astype(float)
        history = train(net, x, y, TrainConfig(epochs=5, learning_rate=0.0), "bce")
        assert len(set(history)) == 1
        for a, b in zip(before.layers, net.layers):
            np.testing.assert_array_equal(a.weights, b.weights)
            np.testing.assert_array_equal(a.biases, b.biases)

    def test_same_seed_same_result(self, rng):
        x = rng.normal(size=(50, 3))
        y = (x[:, 0] > 0).astype(float)
        runs = []
        for _ in range(2):
            net = _two_layer_net(np.random.default_rng(5))
            hist = train(net, x, y, TrainConfig(epochs=10, seed=9), "bce")
            runs.append((hist, net))
        assert runs[0][0] == runs[1][0]
        for a, b in zip(runs[0][1].layers, runs[1][1].layers):
            assert a.weights.tobytes() == b.weights.tobytes()

    def test_divergence_names_epoch(self, rng):
        net = init_net([2, 8, 1], ["relu", "identity"], [0.0, 0.0], rng)
        x = rng.normal(size=(16, 2)) * 1e3
        y = rng.normal(size=16) * 1e3
        with pytest.raises(DivergenceError) as info:
            train(net, x, y, TrainConfig(epochs=50, learning_rate=10.0), "rmse")
        assert info.value.epoch >= 1
        assert f"epoch {info.value.epoch}" in str(info.value)

    @pytest.mark.parametrize("kwargs", [{"epochs": 0}, {"batch_size": 0}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)
